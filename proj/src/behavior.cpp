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

#include "svcemu/behavior.hpp"

namespace svcemu {

void DispatchDictionary::define(std::string handler_id, Handler handler) {
  handlers_[std::move(handler_id)] = std::move(handler);
}

void DispatchDictionary::bind(const Shape& shape, const std::string& handler_id) {
  if (!handlers_.count(handler_id))
    throw std::invalid_argument("undefined handler '" + handler_id + "'");
  bindings_.insert_or_assign(shape, handler_id);
}

const Handler* DispatchDictionary::lookup(const Shape& shape) const {
  auto b = bindings_.find(shape);
  if (b == bindings_.end()) return nullptr;
  auto h = handlers_.find(b->second);
  return h == handlers_.end() ? nullptr : &h->second;
}

std::set<Shape> DispatchDictionary::missing(const std::set<Shape>& required) const {
  std::set<Shape> out;
  for (const auto& s : required)
    if (!lookup(s)) out.insert(s);
  return out;
}

HandlerResult handle_request(const DispatchDictionary& dict, const Message& msg,
                             const directory::DirectoryStore& store) {
  const Handler* h = dict.lookup(msg.shape());
  if (!h) throw NoHandlerError(msg.shape());
  return (*h)(msg, store);
}

}  // namespace svcemu
