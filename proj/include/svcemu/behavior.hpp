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

#ifndef SVCEMU_BEHAVIOR_HPP_
#define SVCEMU_BEHAVIOR_HPP_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "svcemu/directory.hpp"
#include "svcemu/message.hpp"

namespace svcemu {

/// What a request handler hands back: responses in emission order, an
/// optional replacement store (absent = unchanged), and whether the channel
/// should close once the responses are flushed.
struct HandlerResult {
  std::vector<Message> responses;
  std::optional<directory::DirectoryStore> updated_store;
  bool close_channel = false;
};

/// Handlers must be pure: same (request, store) in, same result out.
using Handler =
    std::function<HandlerResult(const Message& request, const directory::DirectoryStore& store)>;

class NoHandlerError : public std::logic_error {
 public:
  explicit NoHandlerError(const Shape& shape)
      : std::logic_error("no handler bound for shape '" + shape.name() + "'") {}
};

/// Shape -> handler id bindings plus the handler registry. Several shapes
/// may bind the same handler.
class DispatchDictionary {
 public:
  void define(std::string handler_id, Handler handler);
  /// Throws std::invalid_argument if `handler_id` is not defined.
  void bind(const Shape& shape, const std::string& handler_id);

  bool has_binding(const Shape& shape) const { return bindings_.count(shape) != 0; }
  const std::map<Shape, std::string>& bindings() const noexcept { return bindings_; }

  /// Null when the shape is unbound.
  const Handler* lookup(const Shape& shape) const;

  /// Shapes in `required` that have no binding.
  std::set<Shape> missing(const std::set<Shape>& required) const;

 private:
  std::map<Shape, std::string> bindings_;
  std::map<std::string, Handler> handlers_;
};

/// Invokes the handler bound to msg.shape(). Throws NoHandlerError.
HandlerResult handle_request(const DispatchDictionary& dict, const Message& msg,
                             const directory::DirectoryStore& store);

namespace ldap {

struct BindPolicy {
  std::string admin_dn = "cn=admin,o=acme";
  std::string admin_password = "secret";
  bool allow_anonymous = true;
};

HandlerResult ldap_bind(const BindPolicy& policy, const Message& msg,
                        const directory::DirectoryStore& store);
HandlerResult ldap_unbind(const Message& msg, const directory::DirectoryStore& store);
HandlerResult ldap_search(const Message& msg, const directory::DirectoryStore& store);
HandlerResult ldap_add(const Message& msg, const directory::DirectoryStore& store);
HandlerResult ldap_modify(const Message& msg, const directory::DirectoryStore& store);
HandlerResult ldap_delete(const Message& msg, const directory::DirectoryStore& store);

/// Filter evaluation against one entry. Unsupported filter parts match
/// nothing; callers reject them up front.
bool matches(const Filter& f, const directory::Entry& e);

/// Dictionary binding the six LDAP request shapes to the handlers above.
DispatchDictionary ldap_dispatch(const BindPolicy& policy);

}  // namespace ldap

}  // namespace svcemu

#endif  // SVCEMU_BEHAVIOR_HPP_
