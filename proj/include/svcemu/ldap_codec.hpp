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

// LDAPv3 (RFC 4511) wire codec restricted to twelve operations: bind, unbind,
// search (request, entry, done), modify, add and delete with their results.
//
// Value layout of decoded messages (all entries are labelled Assoc values):
//   BindRq       version, name, authentication = simple:"pw"
//                                               | sasl:[mechanism, credentials?]
//   UnbindRq     (none)
//   SearchRq     baseObject, scope, derefAliases, sizeLimit, timeLimit,
//                typesOnly, filter, attributes:[names]
//   SearchEntry  objectName, attributes:[<type>:[values]]
//   ModRq        entry, changes:[[operation, <type>:[values]]]
//   AddRq        entry, attributes:[<type>:[values]]
//   DelRq        entry
//   *Res, SearchDone  resultCode, matchedDN, diagnosticMessage

#ifndef SVCEMU_LDAP_CODEC_HPP_
#define SVCEMU_LDAP_CODEC_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svcemu/ber.hpp"
#include "svcemu/message.hpp"

namespace svcemu::ldap {

namespace shape {
inline const Shape& bind_rq() { static const Shape s("BindRq"); return s; }
inline const Shape& bind_res() { static const Shape s("BindRes"); return s; }
inline const Shape& unbind_rq() { static const Shape s("UnbindRq"); return s; }
inline const Shape& search_rq() { static const Shape s("SearchRq"); return s; }
inline const Shape& search_entry() { static const Shape s("SearchEntry"); return s; }
inline const Shape& search_done() { static const Shape s("SearchDone"); return s; }
inline const Shape& mod_rq() { static const Shape s("ModRq"); return s; }
inline const Shape& mod_res() { static const Shape s("ModRes"); return s; }
inline const Shape& add_rq() { static const Shape s("AddRq"); return s; }
inline const Shape& add_res() { static const Shape s("AddRes"); return s; }
inline const Shape& del_rq() { static const Shape s("DelRq"); return s; }
inline const Shape& del_res() { static const Shape s("DelRes"); return s; }
}  // namespace shape

/// Application tag number of `s` (0..11), or nullopt outside the vocabulary.
std::optional<int> application_tag(const Shape& s);

/// Result shape that answers request shape `rq` (BindRq -> BindRes, ...).
std::optional<Shape> response_shape_for(const Shape& rq);

enum class ResultCode : int {
  kSuccess = 0,
  kOperationsError = 1,
  kProtocolError = 2,
  kSizeLimitExceeded = 4,
  kAuthMethodNotSupported = 7,
  kNoSuchAttribute = 16,
  kAttributeOrValueExists = 20,
  kInvalidAttributeSyntax = 21,
  kNoSuchObject = 32,
  kInvalidDnSyntax = 34,
  kInvalidCredentials = 49,
  kUnwillingToPerform = 53,
  kNotAllowedOnNonLeaf = 66,
  kEntryAlreadyExists = 68,
};

enum class SearchScope : int { kBaseObject = 0, kSingleLevel = 1, kWholeSubtree = 2 };

enum class ModOp : int { kAdd = 0, kDelete = 1, kReplace = 2 };

/// Search filter subset. Substring, ordering, approximate and extensible
/// matches decode to Unsupported with the raw TLV kept for re-encoding.
struct Filter {
  enum class Kind { Present, Equality, And, Or, Not, Unsupported };
  Kind kind = Kind::Present;
  std::string attr;
  std::string value;  // assertion value; raw TLV bytes for Unsupported
  std::vector<Filter> children;

  static Filter present(std::string attr) { return {Kind::Present, std::move(attr), {}, {}}; }
  static Filter equality(std::string attr, std::string value) {
    return {Kind::Equality, std::move(attr), std::move(value), {}};
  }
  static Filter all_of(std::vector<Filter> fs) { return {Kind::And, {}, {}, std::move(fs)}; }
  static Filter any_of(std::vector<Filter> fs) { return {Kind::Or, {}, {}, std::move(fs)}; }
  static Filter negate(Filter f) { return {Kind::Not, {}, {}, {std::move(f)}}; }

  bool supported() const;

  friend bool operator==(const Filter&, const Filter&) = default;
};

Value filter_to_value(const Filter& f);
/// nullopt if `v` is not a well-formed filter value.
std::optional<Filter> filter_from_value(const Value& v);

using AttributeValues = std::vector<std::string>;
using Attribute = std::pair<std::string, AttributeValues>;
using AttributeList = std::vector<Attribute>;

struct Change {
  ModOp op = ModOp::kReplace;
  Attribute modification;
};

struct SearchRequest {
  std::string base;
  SearchScope scope = SearchScope::kWholeSubtree;
  int deref_aliases = 0;
  std::int64_t size_limit = 0;
  std::int64_t time_limit = 0;
  bool types_only = false;
  Filter filter = Filter::present("objectClass");
  std::vector<std::string> attributes;
};

// Message builders.
Message bind_request(std::int64_t id, std::string name, std::string password, int version = 3);
Message sasl_bind_request(std::int64_t id, std::string name, std::string mechanism);
Message unbind_request(std::int64_t id);
Message search_request(std::int64_t id, const SearchRequest& rq);
Message search_entry(std::int64_t id, std::string dn, const AttributeList& attrs);
Message add_request(std::int64_t id, std::string dn, const AttributeList& attrs);
Message modify_request(std::int64_t id, std::string dn, const std::vector<Change>& changes);
Message delete_request(std::int64_t id, std::string dn);
Message result(const Shape& shape, std::int64_t id, ResultCode code, std::string matched_dn = {},
               std::string diagnostic = {});

// Message views; nullopt when the expected labelled values are absent or
// mistyped.
std::optional<SearchRequest> as_search_request(const Message& m);
std::optional<AttributeList> as_attribute_list(const Value& v);
std::optional<std::vector<Change>> as_changes(const Value& v);
std::optional<ResultCode> result_code(const Message& m);
std::optional<std::string> string_value(const Message& m, std::string_view label);

// ---------------------------------------------------------------------------
// Wire codec

inline constexpr std::size_t kDefaultMaxFrame = std::size_t{1} << 20;

class CodecError : public std::runtime_error {
 public:
  enum class Kind {
    MalformedBer,
    UnknownApplicationTag,
    OversizeFrame,
    UnknownShape,
    MissingValue,
    MalformedHeader,
    FrameExceedsMax,
  };

  CodecError(Kind kind, const std::string& what, std::size_t offset = 0);

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// One complete top-level BER TLV.
struct WireFrame {
  ber::Bytes bytes;
  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

Message decode(ber::ByteView frame, std::size_t max_frame = kDefaultMaxFrame);
inline Message decode(const WireFrame& f, std::size_t max_frame = kDefaultMaxFrame) {
  return decode(ber::ByteView(f.bytes), max_frame);
}

/// Minimal definite-length BER. Throws CodecError(UnknownShape/MissingValue).
WireFrame encode(const Message& msg);

struct FrameSplit {
  std::vector<WireFrame> frames;
  std::size_t consumed = 0;  // bytes of `buffer` covered by `frames`
};

/// Splits every complete frame off the front of `buffer`. Never blocks;
/// a trailing partial frame is left unconsumed.
FrameSplit frame_stream(ber::ByteView buffer, std::size_t max_frame = kDefaultMaxFrame);

/// Owning form: returns the frames and the leftover bytes.
std::pair<std::vector<WireFrame>, ber::Bytes> frame_stream(const ber::Bytes& buffer,
                                                           std::size_t max_frame);

}  // namespace svcemu::ldap

#endif  // SVCEMU_LDAP_CODEC_HPP_
