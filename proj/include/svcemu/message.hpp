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

#ifndef SVCEMU_MESSAGE_HPP_
#define SVCEMU_MESSAGE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace svcemu {

/// Message type tag. The protocol algebra and the dispatch dictionary only
/// ever look at shapes, never at message content.
class Shape {
 public:
  explicit Shape(std::string name);

  const std::string& name() const noexcept { return name_; }

  friend bool operator==(const Shape&, const Shape&) = default;
  friend auto operator<=>(const Shape&, const Shape&) = default;

 private:
  std::string name_;
};

std::ostream& operator<<(std::ostream& os, const Shape& s);

// Typed scalar payloads. Integer and Enumerated are distinct so that the BER
// codec can restore the original universal tag.
struct Integer {
  std::int64_t value = 0;
  friend bool operator==(const Integer&, const Integer&) = default;
};
struct Enumerated {
  std::int64_t value = 0;
  friend bool operator==(const Enumerated&, const Enumerated&) = default;
};
struct Boolean {
  bool value = false;
  friend bool operator==(const Boolean&, const Boolean&) = default;
};
struct OctetString {
  std::string value;
  friend bool operator==(const OctetString&, const OctetString&) = default;
};

using Scalar = std::variant<Integer, OctetString, Boolean, Enumerated>;

class Value;
using ValueSeq = std::vector<Value>;

/// A labelled value inside a sequence.
struct Assoc {
  std::string label;
  std::shared_ptr<const Value> inner;  // never null
};

/// Structured message payload: a base scalar, a labelled value, or an
/// ordered sequence. Immutable once built; inner nodes are shared.
class Value {
 public:
  using Node = std::variant<Scalar, Assoc, ValueSeq>;

  Value() : node_(Scalar{OctetString{}}) {}
  Value(Scalar s) : node_(std::move(s)) {}  // NOLINT(google-explicit-constructor)
  Value(Integer v) : node_(Scalar{v}) {}  // NOLINT
  Value(Enumerated v) : node_(Scalar{v}) {}  // NOLINT
  Value(Boolean v) : node_(Scalar{v}) {}  // NOLINT
  Value(OctetString v) : node_(Scalar{std::move(v)}) {}  // NOLINT
  Value(ValueSeq items) : node_(std::move(items)) {}  // NOLINT

  static Value assoc(std::string label, Value inner);
  static Value str(std::string s) { return Value(OctetString{std::move(s)}); }
  static Value integer(std::int64_t v) { return Value(Integer{v}); }
  static Value enumerated(std::int64_t v) { return Value(Enumerated{v}); }
  static Value boolean(bool v) { return Value(Boolean{v}); }
  static Value seq(ValueSeq items) { return Value(std::move(items)); }

  const Node& node() const noexcept { return node_; }

  bool is_scalar() const noexcept { return node_.index() == 0; }
  bool is_assoc() const noexcept { return node_.index() == 1; }
  bool is_seq() const noexcept { return node_.index() == 2; }

  const Scalar* scalar() const noexcept { return std::get_if<Scalar>(&node_); }
  const Assoc* as_assoc() const noexcept { return std::get_if<Assoc>(&node_); }
  const ValueSeq* as_seq() const noexcept { return std::get_if<ValueSeq>(&node_); }

  // Scalar accessors; nullopt/nullptr on type mismatch.
  std::optional<std::int64_t> as_integer() const noexcept;
  std::optional<std::int64_t> as_enumerated() const noexcept;
  std::optional<bool> as_boolean() const noexcept;
  const std::string* as_string() const noexcept;

  friend bool operator==(const Value& a, const Value& b);

 private:
  Node node_;
};

std::ostream& operator<<(std::ostream& os, const Value& v);

/// First Assoc in `values` whose label equals `label`; top level only.
std::optional<Value> lookup_assoc(const ValueSeq& values, std::string_view label);

/// Engine-internal exchange unit: shape + value sequence + correlation id
/// (the LDAP messageID; 0 for vocabularies without one).
class Message {
 public:
  Message(Shape shape, ValueSeq values, std::int64_t correlation_id = 0);

  const Shape& shape() const noexcept { return shape_; }
  const ValueSeq& values() const noexcept { return values_; }
  std::int64_t correlation_id() const noexcept { return correlation_id_; }

 private:
  Shape shape_;
  ValueSeq values_;
  std::int64_t correlation_id_;
};

std::optional<Value> lookup_assoc(const Message& msg, std::string_view label);

/// Deep, order-sensitive equality of shape, correlation id and values.
bool messages_equal(const Message& a, const Message& b);

inline bool operator==(const Message& a, const Message& b) { return messages_equal(a, b); }

std::ostream& operator<<(std::ostream& os, const Message& m);

}  // namespace svcemu

#endif  // SVCEMU_MESSAGE_HPP_
