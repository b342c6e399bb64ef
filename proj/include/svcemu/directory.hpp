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

// In-memory LDAP directory: a DN-keyed attribute tree.
//
// Entries are keyed by their RDN path written root-first and joined with a
// NUL byte ("o=acme\0ou=people\0uid=u7"). Ordered iteration over that key
// space is a depth-first pre-order walk with siblings in RDN order, and a
// subtree is one contiguous key range.
//
// Stores are copy-on-write: copying a DirectoryStore is O(1), entries are
// shared between snapshots, and mutators return a new store.

#ifndef SVCEMU_DIRECTORY_HPP_
#define SVCEMU_DIRECTORY_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "svcemu/ldap_codec.hpp"

namespace svcemu::directory {

struct Rdn {
  std::string attribute;  // lowercased
  std::string value;      // trimmed
  friend bool operator==(const Rdn&, const Rdn&) = default;
};

class DnSyntaxError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Distinguished name, leaf-first. The empty DN has no RDNs.
class DistinguishedName {
 public:
  DistinguishedName() = default;
  explicit DistinguishedName(std::vector<Rdn> rdns) : rdns_(std::move(rdns)) {}

  /// Parses "uid=u1, ou=people,o=acme". Handles backslash escapes; throws
  /// DnSyntaxError.
  static DistinguishedName parse(std::string_view text);

  const std::vector<Rdn>& rdns() const noexcept { return rdns_; }
  bool empty() const noexcept { return rdns_.empty(); }
  std::size_t depth() const noexcept { return rdns_.size(); }

  /// DN minus its first RDN; empty DN for a single-RDN name.
  DistinguishedName parent() const;
  DistinguishedName child(Rdn rdn) const;
  bool is_within(const DistinguishedName& ancestor) const;

  /// Canonical string form, e.g. "uid=u1,ou=people,o=acme".
  std::string str() const;
  /// Root-first, NUL-joined ordering key.
  std::string tree_key() const;

  friend bool operator==(const DistinguishedName&, const DistinguishedName&) = default;

 private:
  std::vector<Rdn> rdns_;
};

using Octets = std::shared_ptr<const std::string>;

/// One directory entry. Attribute names compare case-insensitively and
/// keep insertion order; value lists are non-empty.
class Entry {
 public:
  struct Attr {
    std::shared_ptr<const std::string> name;
    std::vector<Octets> values;
  };

  explicit Entry(DistinguishedName dn) : dn_(std::move(dn)) {}

  const DistinguishedName& dn() const noexcept { return dn_; }
  const std::vector<Attr>& attributes() const noexcept { return attrs_; }

  const Attr* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> values(std::string_view name) const;

  /// Appends values to `name`, creating it if absent. Duplicates are kept.
  void add_values(std::string_view name, std::vector<Octets> values);
  /// Replaces all values; an empty list removes the attribute.
  void set_values(std::string_view name, std::vector<Octets> values);
  bool remove_attribute(std::string_view name);

  ldap::AttributeList to_attribute_list() const;

  friend bool operator==(const Entry& a, const Entry& b);

 private:
  DistinguishedName dn_;
  std::vector<Attr> attrs_;
};

enum class StoreErrorKind { NotFound, AlreadyExists, NonLeaf, OrphanParent, RootEntry };

class StoreError : public std::runtime_error {
 public:
  StoreError(StoreErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  StoreErrorKind kind() const noexcept { return kind_; }

 private:
  StoreErrorKind kind_;
};

struct SeedOptions {
  std::string people_ou = "people";
};

struct ScopeResult {
  bool base_found = false;
  std::vector<std::shared_ptr<const Entry>> entries;  // depth-first DN order
};

class DirectoryStore {
 public:
  using EntryMap = std::map<std::string, std::shared_ptr<const Entry>>;

  /// Creates a store holding just the root entry.
  explicit DirectoryStore(Entry root);

  const DistinguishedName& root_dn() const noexcept { return root_dn_; }
  std::size_t size() const noexcept { return entries_->size(); }
  const EntryMap& entries() const noexcept { return *entries_; }

  std::shared_ptr<const Entry> lookup(const DistinguishedName& dn) const;
  bool contains(const DistinguishedName& dn) const { return lookup(dn) != nullptr; }

  // Mutators leave *this untouched and throw StoreError on contract
  // violations.
  DirectoryStore insert(Entry entry) const;
  DirectoryStore replace(Entry entry) const;
  DirectoryStore remove(const DistinguishedName& dn) const;

  std::vector<std::shared_ptr<const Entry>> children(const DistinguishedName& dn) const;
  ScopeResult in_scope(const DistinguishedName& base, ldap::SearchScope scope) const;

  /// Checks tree closure; returns a description of the first problem.
  std::optional<std::string> validate() const;

  /// True when both stores share the same snapshot (no copy happened).
  bool same_snapshot(const DirectoryStore& other) const noexcept {
    return entries_ == other.entries_;
  }

  friend bool operator==(const DirectoryStore& a, const DirectoryStore& b);

 private:
  friend DirectoryStore seed_store(const DistinguishedName&, int, int, const SeedOptions&);

  DirectoryStore(DistinguishedName root, std::shared_ptr<const EntryMap> entries)
      : root_dn_(std::move(root)), entries_(std::move(entries)) {}

  DistinguishedName root_dn_;
  std::shared_ptr<const EntryMap> entries_;
};

/// Process-wide pool of shared immutable strings, so that identical seeded
/// values across many endpoints are stored once.
Octets intern(std::string_view s);
Octets make_octets(std::string s);

/// Deterministic store: root, ou=people, and users uid=u0..u<n-1>.
/// `endpoint_index` perturbs passwords only, never structure.
DirectoryStore seed_store(const DistinguishedName& base_dn, int n_users, int endpoint_index,
                          const SeedOptions& opts = {});

/// Password the seeder assigns to user `k` of endpoint `endpoint_index`.
std::string seeded_password(int k, int endpoint_index);

}  // namespace svcemu::directory

#endif  // SVCEMU_DIRECTORY_HPP_
