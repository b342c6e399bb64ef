// Copyright 2026 The svcemu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "svcemu/message.hpp"

#include <stdexcept>

namespace svcemu {

Shape::Shape(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw std::invalid_argument("message shape must be non-empty");
}

std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << s.name(); }

Value Value::assoc(std::string label, Value inner) {
  Value v;
  v.node_ = Assoc{std::move(label), std::make_shared<const Value>(std::move(inner))};
  return v;
}

std::optional<std::int64_t> Value::as_integer() const noexcept {
  if (const auto* s = scalar())
    if (const auto* i = std::get_if<Integer>(s)) return i->value;
  return std::nullopt;
}

std::optional<std::int64_t> Value::as_enumerated() const noexcept {
  if (const auto* s = scalar())
    if (const auto* e = std::get_if<Enumerated>(s)) return e->value;
  return std::nullopt;
}

std::optional<bool> Value::as_boolean() const noexcept {
  if (const auto* s = scalar())
    if (const auto* b = std::get_if<Boolean>(s)) return b->value;
  return std::nullopt;
}

const std::string* Value::as_string() const noexcept {
  if (const auto* s = scalar())
    if (const auto* o = std::get_if<OctetString>(s)) return &o->value;
  return nullptr;
}

bool operator==(const Value& a, const Value& b) {
  if (a.node_.index() != b.node_.index()) return false;
  switch (a.node_.index()) {
    case 0:
      return std::get<Scalar>(a.node_) == std::get<Scalar>(b.node_);
    case 1: {
      const auto& x = std::get<Assoc>(a.node_);
      const auto& y = std::get<Assoc>(b.node_);
      return x.label == y.label && (x.inner == y.inner || *x.inner == *y.inner);
    }
    default:
      return std::get<ValueSeq>(a.node_) == std::get<ValueSeq>(b.node_);
  }
}

std::ostream& operator<<(std::ostream& os, const Value& v) {
  if (const auto* s = v.scalar()) {
    std::visit(
        [&os](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, OctetString>) {
            os << '"' << x.value << '"';
          } else if constexpr (std::is_same_v<T, Boolean>) {
            os << (x.value ? "true" : "false");
          } else if constexpr (std::is_same_v<T, Enumerated>) {
            os << "enum:" << x.value;
          } else {
            os << x.value;
          }
        },
        *s);
  } else if (const auto* a = v.as_assoc()) {
    os << a->label << '=' << *a->inner;
  } else {
    os << '[';
    const auto& items = *v.as_seq();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) os << ", ";
      os << items[i];
    }
    os << ']';
  }
  return os;
}

std::optional<Value> lookup_assoc(const ValueSeq& values, std::string_view label) {
  for (const auto& v : values) {
    if (const auto* a = v.as_assoc(); a && a->label == label) return *a->inner;
  }
  return std::nullopt;
}

Message::Message(Shape shape, ValueSeq values, std::int64_t correlation_id)
    : shape_(std::move(shape)), values_(std::move(values)), correlation_id_(correlation_id) {}

std::optional<Value> lookup_assoc(const Message& msg, std::string_view label) {
  return lookup_assoc(msg.values(), label);
}

bool messages_equal(const Message& a, const Message& b) {
  return a.shape() == b.shape() && a.correlation_id() == b.correlation_id() &&
         a.values() == b.values();
}

std::ostream& operator<<(std::ostream& os, const Message& m) {
  os << m.shape() << "#" << m.correlation_id() << " [";
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    if (i) os << ", ";
    os << m.values()[i];
  }
  return os << ']';
}

}  // namespace svcemu
