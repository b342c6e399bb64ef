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

#include <algorithm>
#include <cctype>

#include "svcemu/behavior.hpp"

namespace svcemu::ldap {

using directory::DirectoryStore;
using directory::DistinguishedName;
using directory::Entry;

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

// userPassword is an octet string; everything else we seed uses
// case-insensitive directory-string matching.
bool values_match(std::string_view attr, std::string_view a, std::string_view b) {
  if (iequals(attr, "userPassword")) return a == b;
  return iequals(a, b);
}

HandlerResult reply(const Shape& shape, const Message& rq, ResultCode code,
                    std::string matched = {}, std::string diagnostic = {}) {
  HandlerResult r;
  r.responses.push_back(result(shape, rq.correlation_id(), code, std::move(matched), std::move(diagnostic)));
  return r;
}

std::optional<DistinguishedName> parse_dn(std::string_view text) {
  try {
    return DistinguishedName::parse(text);
  } catch (const directory::DnSyntaxError&) {
    return std::nullopt;
  }
}

// Closest existing ancestor of `dn`, for the matchedDN field.
std::string matched_dn(const DirectoryStore& store, DistinguishedName dn) {
  while (!dn.empty()) {
    if (store.contains(dn)) return dn.str();
    dn = dn.parent();
  }
  return {};
}

bool wants_all(const std::vector<std::string>& selectors) {
  if (selectors.empty()) return true;
  return std::any_of(selectors.begin(), selectors.end(), [](const std::string& s) { return s == "*"; });
}

AttributeList select_attributes(const Entry& e, const SearchRequest& rq) {
  AttributeList out;
  const bool all = wants_all(rq.attributes);
  for (const auto& a : e.attributes()) {
    if (!all && std::none_of(rq.attributes.begin(), rq.attributes.end(),
                             [&](const std::string& s) { return iequals(s, *a.name); }))
      continue;
    AttributeValues vals;
    if (!rq.types_only)
      for (const auto& v : a.values) vals.push_back(*v);
    out.emplace_back(*a.name, std::move(vals));
  }
  return out;
}

std::vector<directory::Octets> to_octets(const AttributeValues& vals) {
  std::vector<directory::Octets> out;
  out.reserve(vals.size());
  for (const auto& v : vals) out.push_back(directory::make_octets(v));
  return out;
}

}  // namespace

bool matches(const Filter& f, const Entry& e) {
  switch (f.kind) {
    case Filter::Kind::Present:
      return e.has(f.attr);
    case Filter::Kind::Equality: {
      const auto* a = e.find(f.attr);
      if (!a) return false;
      return std::any_of(a->values.begin(), a->values.end(),
                         [&](const directory::Octets& v) { return values_match(f.attr, *v, f.value); });
    }
    case Filter::Kind::And:
      return std::all_of(f.children.begin(), f.children.end(),
                         [&](const Filter& c) { return matches(c, e); });
    case Filter::Kind::Or:
      return std::any_of(f.children.begin(), f.children.end(),
                         [&](const Filter& c) { return matches(c, e); });
    case Filter::Kind::Not:
      return !matches(f.children.at(0), e);
    case Filter::Kind::Unsupported:
      return false;
  }
  return false;
}

HandlerResult ldap_bind(const BindPolicy& policy, const Message& msg, const DirectoryStore&) {
  const auto& res = shape::bind_res();
  auto version = lookup_assoc(msg, "version");
  auto name = string_value(msg, "name");
  auto auth = lookup_assoc(msg, "authentication");
  if (!version || !version->as_integer() || !name || !auth || !auth->as_assoc())
    return reply(res, msg, ResultCode::kProtocolError, {}, "malformed bind request");
  if (*version->as_integer() != 3)
    return reply(res, msg, ResultCode::kProtocolError, {}, "only LDAPv3 is supported");

  const Assoc& choice = *auth->as_assoc();
  if (choice.label == "sasl")
    return reply(res, msg, ResultCode::kAuthMethodNotSupported, {}, "SASL is not supported");
  const std::string* password = choice.inner->as_string();
  if (choice.label != "simple" || !password)
    return reply(res, msg, ResultCode::kProtocolError, {}, "unknown authentication choice");

  if (name->empty() && password->empty()) {
    return policy.allow_anonymous
               ? reply(res, msg, ResultCode::kSuccess)
               : reply(res, msg, ResultCode::kUnwillingToPerform, {}, "anonymous bind disabled");
  }
  const auto dn = parse_dn(*name);
  const auto admin = parse_dn(policy.admin_dn);
  if (dn && admin && *dn == *admin && *password == policy.admin_password)
    return reply(res, msg, ResultCode::kSuccess);
  return reply(res, msg, ResultCode::kInvalidCredentials);
}

HandlerResult ldap_unbind(const Message&, const DirectoryStore&) {
  HandlerResult r;
  r.close_channel = true;
  return r;
}

HandlerResult ldap_search(const Message& msg, const DirectoryStore& store) {
  const auto& done = shape::search_done();
  const auto rq = as_search_request(msg);
  if (!rq) return reply(done, msg, ResultCode::kProtocolError, {}, "malformed search request");
  if (!rq->filter.supported())
    return reply(done, msg, ResultCode::kUnwillingToPerform, {}, "filter type not supported");
  const auto base = parse_dn(rq->base);
  if (!base) return reply(done, msg, ResultCode::kInvalidDnSyntax, {}, "invalid base DN");

  const auto scoped = store.in_scope(*base, rq->scope);
  if (!scoped.base_found)
    return reply(done, msg, ResultCode::kNoSuchObject, matched_dn(store, base->parent()));

  HandlerResult r;
  ResultCode code = ResultCode::kSuccess;
  for (const auto& e : scoped.entries) {
    if (!matches(rq->filter, *e)) continue;
    if (rq->size_limit > 0 && static_cast<std::int64_t>(r.responses.size()) >= rq->size_limit) {
      code = ResultCode::kSizeLimitExceeded;
      break;
    }
    r.responses.push_back(search_entry(msg.correlation_id(), e->dn().str(), select_attributes(*e, *rq)));
  }
  r.responses.push_back(result(done, msg.correlation_id(), code));
  return r;
}

HandlerResult ldap_add(const Message& msg, const DirectoryStore& store) {
  const auto& res = shape::add_res();
  auto entry_name = string_value(msg, "entry");
  auto attrs_value = lookup_assoc(msg, "attributes");
  std::optional<AttributeList> attrs;
  if (attrs_value) attrs = as_attribute_list(*attrs_value);
  if (!entry_name || !attrs) return reply(res, msg, ResultCode::kProtocolError, {}, "malformed add request");
  const auto dn = parse_dn(*entry_name);
  if (!dn || dn->empty()) return reply(res, msg, ResultCode::kInvalidDnSyntax);

  Entry entry(*dn);
  for (const auto& [type, vals] : *attrs) {
    if (vals.empty())
      return reply(res, msg, ResultCode::kProtocolError, {}, "attribute '" + type + "' has no values");
    entry.add_values(type, to_octets(vals));
  }
  if (store.contains(*dn)) return reply(res, msg, ResultCode::kEntryAlreadyExists);
  if (!store.contains(dn->parent()) || !dn->is_within(store.root_dn()))
    return reply(res, msg, ResultCode::kNoSuchObject, matched_dn(store, dn->parent()));

  HandlerResult r = reply(res, msg, ResultCode::kSuccess);
  r.updated_store = store.insert(std::move(entry));
  return r;
}

HandlerResult ldap_modify(const Message& msg, const DirectoryStore& store) {
  const auto& res = shape::mod_res();
  auto entry_name = string_value(msg, "entry");
  auto changes_value = lookup_assoc(msg, "changes");
  std::optional<std::vector<Change>> changes;
  if (changes_value) changes = as_changes(*changes_value);
  if (!entry_name || !changes)
    return reply(res, msg, ResultCode::kProtocolError, {}, "malformed modify request");
  const auto dn = parse_dn(*entry_name);
  if (!dn) return reply(res, msg, ResultCode::kInvalidDnSyntax);
  const auto current = store.lookup(*dn);
  if (!current) return reply(res, msg, ResultCode::kNoSuchObject, matched_dn(store, dn->parent()));

  Entry updated = *current;
  for (const auto& change : *changes) {
    const auto& [type, vals] = change.modification;
    switch (change.op) {
      case ModOp::kAdd: {
        if (vals.empty())
          return reply(res, msg, ResultCode::kProtocolError, {}, "add of '" + type + "' without values");
        const auto existing = updated.values(type);
        for (std::size_t i = 0; i < vals.size(); ++i) {
          const bool dup_existing = std::any_of(existing.begin(), existing.end(),
                                                [&](const std::string& v) { return values_match(type, v, vals[i]); });
          const bool dup_request = std::any_of(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(i),
                                               [&](const std::string& v) { return values_match(type, v, vals[i]); });
          if (dup_existing || dup_request) return reply(res, msg, ResultCode::kAttributeOrValueExists);
        }
        updated.add_values(type, to_octets(vals));
        break;
      }
      case ModOp::kDelete: {
        if (!updated.has(type)) return reply(res, msg, ResultCode::kNoSuchAttribute);
        if (vals.empty()) {
          updated.remove_attribute(type);
          break;
        }
        const auto* attr = updated.find(type);
        std::vector<directory::Octets> kept = attr->values;
        for (const auto& v : vals) {
          auto it = std::find_if(kept.begin(), kept.end(),
                                 [&](const directory::Octets& x) { return values_match(type, *x, v); });
          if (it == kept.end()) return reply(res, msg, ResultCode::kNoSuchAttribute);
          kept.erase(it);
        }
        updated.set_values(type, std::move(kept));
        break;
      }
      case ModOp::kReplace:
        updated.set_values(type, to_octets(vals));
        break;
    }
  }
  HandlerResult r = reply(res, msg, ResultCode::kSuccess);
  r.updated_store = store.replace(std::move(updated));
  return r;
}

HandlerResult ldap_delete(const Message& msg, const DirectoryStore& store) {
  const auto& res = shape::del_res();
  auto entry_name = string_value(msg, "entry");
  if (!entry_name) return reply(res, msg, ResultCode::kProtocolError, {}, "malformed delete request");
  const auto dn = parse_dn(*entry_name);
  if (!dn) return reply(res, msg, ResultCode::kInvalidDnSyntax);
  if (!store.contains(*dn)) return reply(res, msg, ResultCode::kNoSuchObject, matched_dn(store, dn->parent()));
  if (*dn == store.root_dn())
    return reply(res, msg, ResultCode::kUnwillingToPerform, {}, "the directory root cannot be deleted");
  if (!store.children(*dn).empty()) return reply(res, msg, ResultCode::kNotAllowedOnNonLeaf);

  HandlerResult r = reply(res, msg, ResultCode::kSuccess);
  r.updated_store = store.remove(*dn);
  return r;
}

DispatchDictionary ldap_dispatch(const BindPolicy& policy) {
  DispatchDictionary dd;
  dd.define("ldap.bind", [policy](const Message& m, const DirectoryStore& s) { return ldap_bind(policy, m, s); });
  dd.define("ldap.unbind", ldap_unbind);
  dd.define("ldap.search", ldap_search);
  dd.define("ldap.add", ldap_add);
  dd.define("ldap.modify", ldap_modify);
  dd.define("ldap.delete", ldap_delete);
  dd.bind(shape::bind_rq(), "ldap.bind");
  dd.bind(shape::unbind_rq(), "ldap.unbind");
  dd.bind(shape::search_rq(), "ldap.search");
  dd.bind(shape::add_rq(), "ldap.add");
  dd.bind(shape::mod_rq(), "ldap.modify");
  dd.bind(shape::del_rq(), "ldap.delete");
  return dd;
}

}  // namespace svcemu::ldap
