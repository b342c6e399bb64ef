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

#include "svcemu/directory.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>
#include <unordered_map>

namespace svcemu::directory {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool needs_escape(char c) {
  return c == ',' || c == '\\' || c == '+' || c == '"' || c == '<' || c == '>' || c == ';' ||
         c == '=';
}

}  // namespace

// ---------------------------------------------------------------------------
// DistinguishedName

DistinguishedName DistinguishedName::parse(std::string_view text) {
  std::vector<Rdn> rdns;
  if (trim(text).empty()) return DistinguishedName();

  std::string attr;
  std::string value;
  bool in_value = false;
  bool escaped_tail = false;  // last value char came from an escape; keep it when trimming
  auto finish = [&]() {
    const auto a = trim(attr);
    if (!in_value) throw DnSyntaxError("RDN without '=' in '" + std::string(text) + "'");
    if (a.empty()) throw DnSyntaxError("empty attribute type in '" + std::string(text) + "'");
    std::string v(escaped_tail ? std::string_view(value) : trim(value));
    // Leading whitespace is never significant.
    std::size_t lead = 0;
    while (lead < v.size() && std::isspace(static_cast<unsigned char>(v[lead]))) ++lead;
    v.erase(0, lead);
    rdns.push_back({lower(a), std::move(v)});
    attr.clear();
    value.clear();
    in_value = false;
    escaped_tail = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\0') throw DnSyntaxError("NUL byte in DN");
    if (c == '\\') {
      if (i + 1 >= text.size()) throw DnSyntaxError("dangling escape in DN");
      const char n = text[i + 1];
      if (std::isxdigit(static_cast<unsigned char>(n)) && i + 2 < text.size() &&
          std::isxdigit(static_cast<unsigned char>(text[i + 2]))) {
        const char decoded = static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16));
        if (decoded == '\0') throw DnSyntaxError("NUL byte in DN");
        (in_value ? value : attr).push_back(decoded);
        i += 2;
      } else {
        (in_value ? value : attr).push_back(n);
        i += 1;
      }
      if (in_value) escaped_tail = true;
      continue;
    }
    if (c == ',' || c == ';') {
      finish();
      continue;
    }
    if (c == '=' && !in_value) {
      in_value = true;
      continue;
    }
    if (in_value) {
      value.push_back(c);
      if (!std::isspace(static_cast<unsigned char>(c))) escaped_tail = false;
    } else {
      attr.push_back(c);
    }
  }
  finish();
  return DistinguishedName(std::move(rdns));
}

DistinguishedName DistinguishedName::parent() const {
  if (rdns_.empty()) return {};
  return DistinguishedName(std::vector<Rdn>(rdns_.begin() + 1, rdns_.end()));
}

DistinguishedName DistinguishedName::child(Rdn rdn) const {
  std::vector<Rdn> out;
  out.reserve(rdns_.size() + 1);
  out.push_back(std::move(rdn));
  out.insert(out.end(), rdns_.begin(), rdns_.end());
  return DistinguishedName(std::move(out));
}

bool DistinguishedName::is_within(const DistinguishedName& ancestor) const {
  if (ancestor.rdns_.size() > rdns_.size()) return false;
  return std::equal(ancestor.rdns_.rbegin(), ancestor.rdns_.rend(), rdns_.rbegin());
}

std::string DistinguishedName::str() const {
  std::string out;
  for (std::size_t i = 0; i < rdns_.size(); ++i) {
    if (i) out.push_back(',');
    out += rdns_[i].attribute;
    out.push_back('=');
    for (std::size_t k = 0; k < rdns_[i].value.size(); ++k) {
      const char c = rdns_[i].value[k];
      const bool edge_space = c == ' ' && (k == 0 || k + 1 == rdns_[i].value.size());
      if (needs_escape(c) || edge_space || (c == '#' && k == 0)) out.push_back('\\');
      out.push_back(c);
    }
  }
  return out;
}

std::string DistinguishedName::tree_key() const {
  std::string out;
  for (auto it = rdns_.rbegin(); it != rdns_.rend(); ++it) {
    if (!out.empty()) out.push_back('\0');
    out += it->attribute;
    out.push_back('=');
    out += it->value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interning

Octets intern(std::string_view s) {
  static std::mutex mu;
  static std::unordered_map<std::string, Octets> pool;
  std::lock_guard lock(mu);
  auto [it, inserted] = pool.try_emplace(std::string(s));
  if (inserted) it->second = std::make_shared<const std::string>(it->first);
  return it->second;
}

Octets make_octets(std::string s) { return std::make_shared<const std::string>(std::move(s)); }

// ---------------------------------------------------------------------------
// Entry

const Entry::Attr* Entry::find(std::string_view name) const {
  for (const auto& a : attrs_)
    if (iequals(*a.name, name)) return &a;
  return nullptr;
}

std::vector<std::string> Entry::values(std::string_view name) const {
  std::vector<std::string> out;
  if (const auto* a = find(name))
    for (const auto& v : a->values) out.push_back(*v);
  return out;
}

void Entry::add_values(std::string_view name, std::vector<Octets> values) {
  if (values.empty()) return;
  for (auto& a : attrs_) {
    if (iequals(*a.name, name)) {
      a.values.insert(a.values.end(), std::make_move_iterator(values.begin()),
                      std::make_move_iterator(values.end()));
      return;
    }
  }
  attrs_.push_back({intern(name), std::move(values)});
}

void Entry::set_values(std::string_view name, std::vector<Octets> values) {
  if (values.empty()) {
    remove_attribute(name);
    return;
  }
  for (auto& a : attrs_) {
    if (iequals(*a.name, name)) {
      a.values = std::move(values);
      return;
    }
  }
  attrs_.push_back({intern(name), std::move(values)});
}

bool Entry::remove_attribute(std::string_view name) {
  auto it = std::find_if(attrs_.begin(), attrs_.end(),
                         [&](const Attr& a) { return iequals(*a.name, name); });
  if (it == attrs_.end()) return false;
  attrs_.erase(it);
  return true;
}

ldap::AttributeList Entry::to_attribute_list() const {
  ldap::AttributeList out;
  out.reserve(attrs_.size());
  for (const auto& a : attrs_) {
    ldap::AttributeValues vals;
    vals.reserve(a.values.size());
    for (const auto& v : a.values) vals.push_back(*v);
    out.emplace_back(*a.name, std::move(vals));
  }
  return out;
}

bool operator==(const Entry& a, const Entry& b) {
  if (!(a.dn_ == b.dn_) || a.attrs_.size() != b.attrs_.size()) return false;
  for (std::size_t i = 0; i < a.attrs_.size(); ++i) {
    const auto& x = a.attrs_[i];
    const auto& y = b.attrs_[i];
    if (!iequals(*x.name, *y.name) || x.values.size() != y.values.size()) return false;
    for (std::size_t k = 0; k < x.values.size(); ++k)
      if (*x.values[k] != *y.values[k]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// DirectoryStore

namespace {

// Upper bound of the key range holding `key` and all of its descendants.
std::string subtree_end(const std::string& key) { return key + '\x01'; }

}  // namespace

DirectoryStore::DirectoryStore(Entry root) : root_dn_(root.dn()) {
  auto map = std::make_shared<EntryMap>();
  map->emplace(root_dn_.tree_key(), std::make_shared<const Entry>(std::move(root)));
  entries_ = std::move(map);
}

std::shared_ptr<const Entry> DirectoryStore::lookup(const DistinguishedName& dn) const {
  auto it = entries_->find(dn.tree_key());
  return it == entries_->end() ? nullptr : it->second;
}

DirectoryStore DirectoryStore::insert(Entry entry) const {
  const auto& dn = entry.dn();
  const std::string key = dn.tree_key();
  if (entries_->count(key))
    throw StoreError(StoreErrorKind::AlreadyExists, "entry '" + dn.str() + "' already exists");
  if (!dn.is_within(root_dn_) || dn.depth() <= root_dn_.depth() ||
      !entries_->count(dn.parent().tree_key()))
    throw StoreError(StoreErrorKind::OrphanParent, "parent of '" + dn.str() + "' does not exist");
  auto map = std::make_shared<EntryMap>(*entries_);
  map->emplace(key, std::make_shared<const Entry>(std::move(entry)));
  return DirectoryStore(root_dn_, std::move(map));
}

DirectoryStore DirectoryStore::replace(Entry entry) const {
  const std::string key = entry.dn().tree_key();
  auto it = entries_->find(key);
  if (it == entries_->end())
    throw StoreError(StoreErrorKind::NotFound, "no entry '" + entry.dn().str() + "'");
  auto map = std::make_shared<EntryMap>(*entries_);
  (*map)[key] = std::make_shared<const Entry>(std::move(entry));
  return DirectoryStore(root_dn_, std::move(map));
}

DirectoryStore DirectoryStore::remove(const DistinguishedName& dn) const {
  const std::string key = dn.tree_key();
  auto it = entries_->find(key);
  if (it == entries_->end()) throw StoreError(StoreErrorKind::NotFound, "no entry '" + dn.str() + "'");
  if (dn == root_dn_) throw StoreError(StoreErrorKind::RootEntry, "the root entry cannot be removed");
  auto next = std::next(it);
  if (next != entries_->end() && next->first < subtree_end(key))
    throw StoreError(StoreErrorKind::NonLeaf, "entry '" + dn.str() + "' has children");
  auto map = std::make_shared<EntryMap>(*entries_);
  map->erase(key);
  return DirectoryStore(root_dn_, std::move(map));
}

std::vector<std::shared_ptr<const Entry>> DirectoryStore::children(const DistinguishedName& dn) const {
  return in_scope(dn, ldap::SearchScope::kSingleLevel).entries;
}

ScopeResult DirectoryStore::in_scope(const DistinguishedName& base, ldap::SearchScope scope) const {
  ScopeResult out;
  const std::string key = base.tree_key();
  auto it = entries_->find(key);
  if (it == entries_->end()) return out;
  out.base_found = true;
  if (scope == ldap::SearchScope::kBaseObject) {
    out.entries.push_back(it->second);
    return out;
  }
  const std::string end = subtree_end(key);
  const std::size_t child_depth = base.depth() + 1;
  if (scope == ldap::SearchScope::kWholeSubtree) out.entries.push_back(it->second);
  for (++it; it != entries_->end() && it->first < end; ++it) {
    if (scope == ldap::SearchScope::kWholeSubtree || it->second->dn().depth() == child_depth)
      out.entries.push_back(it->second);
  }
  return out;
}

std::optional<std::string> DirectoryStore::validate() const {
  if (!entries_->count(root_dn_.tree_key())) return "root entry missing";
  for (const auto& [key, entry] : *entries_) {
    if (key != entry->dn().tree_key()) return "key mismatch for '" + entry->dn().str() + "'";
    if (entry->dn() == root_dn_) continue;
    if (!entry->dn().is_within(root_dn_)) return "'" + entry->dn().str() + "' outside root";
    if (!entries_->count(entry->dn().parent().tree_key()))
      return "'" + entry->dn().str() + "' has no parent";
    for (const auto& a : entry->attributes())
      if (a.values.empty()) return "'" + entry->dn().str() + "' has empty attribute " + *a.name;
  }
  return std::nullopt;
}

bool operator==(const DirectoryStore& a, const DirectoryStore& b) {
  if (!(a.root_dn_ == b.root_dn_)) return false;
  if (a.entries_ == b.entries_) return true;
  if (a.entries_->size() != b.entries_->size()) return false;
  auto x = a.entries_->begin();
  auto y = b.entries_->begin();
  for (; x != a.entries_->end(); ++x, ++y) {
    if (x->first != y->first) return false;
    if (x->second != y->second && !(*x->second == *y->second)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Seeding

std::string seeded_password(int k, int endpoint_index) {
  return "pw" + std::to_string(k) + "e" + std::to_string(endpoint_index);
}

DirectoryStore seed_store(const DistinguishedName& base_dn, int n_users, int endpoint_index,
                          const SeedOptions& opts) {
  if (n_users < 0) throw std::invalid_argument("n_users must be >= 0");
  if (base_dn.empty()) throw std::invalid_argument("base DN must not be empty");

  const Rdn& top = base_dn.rdns().front();
  Entry root(base_dn);
  root.add_values("objectClass", {intern("top"), intern(top.attribute == "dc" ? "domain" : "organization")});
  root.add_values(top.attribute, {intern(top.value)});

  const DistinguishedName people = base_dn.child({"ou", opts.people_ou});
  Entry ou(people);
  ou.add_values("objectClass", {intern("top"), intern("organizationalUnit")});
  ou.add_values("ou", {intern(opts.people_ou)});

  auto map = std::make_shared<DirectoryStore::EntryMap>();
  map->emplace(base_dn.tree_key(), std::make_shared<const Entry>(std::move(root)));
  map->emplace(people.tree_key(), std::make_shared<const Entry>(std::move(ou)));

  const std::vector<Octets> person_classes = {intern("top"), intern("person"),
                                              intern("organizationalPerson"), intern("inetOrgPerson")};
  for (int k = 0; k < n_users; ++k) {
    const std::string uid = "u" + std::to_string(k);
    Entry e(people.child({"uid", uid}));
    e.add_values("objectClass", person_classes);
    e.add_values("uid", {intern(uid)});
    e.add_values("cn", {intern("User " + std::to_string(k))});
    e.add_values("sn", {intern("User")});
    e.add_values("userPassword", {make_octets(seeded_password(k, endpoint_index))});
    auto key = e.dn().tree_key();
    map->emplace(std::move(key), std::make_shared<const Entry>(std::move(e)));
  }
  return DirectoryStore(base_dn, std::move(map));
}

}  // namespace svcemu::directory
