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

#include "svcemu/ldap_codec.hpp"

#include <array>

namespace svcemu::ldap {

namespace {

// Indexed by application tag number.
const std::array<const Shape*, 12>& shape_table() {
  static const std::array<const Shape*, 12> t = {
      &shape::bind_rq(),  &shape::bind_res(),     &shape::unbind_rq(), &shape::search_rq(),
      &shape::search_entry(), &shape::search_done(), &shape::mod_rq(),    &shape::mod_res(),
      &shape::add_rq(),   &shape::add_res(),      &shape::del_rq(),    &shape::del_res(),
  };
  return t;
}

// Unbind and delete requests are primitive; everything else constructed.
bool is_primitive_op(int n) { return n == 2 || n == 10; }

bool is_result_op(int n) { return n == 1 || n == 5 || n == 7 || n == 9 || n == 11; }

constexpr std::uint8_t kFilterAnd = 0xa0;
constexpr std::uint8_t kFilterOr = 0xa1;
constexpr std::uint8_t kFilterNot = 0xa2;
constexpr std::uint8_t kFilterEquality = 0xa3;
constexpr std::uint8_t kFilterPresent = 0x87;
constexpr std::uint8_t kSimpleAuth = 0x80;
constexpr std::uint8_t kSaslAuth = 0xa3;
constexpr std::uint8_t kReferral = 0xa3;
constexpr std::uint8_t kServerSaslCreds = 0x87;
constexpr std::uint8_t kSaslCredentials = 0x04;

Value str(std::string s) { return Value::str(std::move(s)); }
Value labelled(const char* label, Value v) { return Value::assoc(label, std::move(v)); }

}  // namespace

std::optional<int> application_tag(const Shape& s) {
  const auto& t = shape_table();
  for (int i = 0; i < 12; ++i)
    if (*t[i] == s) return i;
  return std::nullopt;
}

std::optional<Shape> response_shape_for(const Shape& rq) {
  if (rq == shape::bind_rq()) return shape::bind_res();
  if (rq == shape::search_rq()) return shape::search_done();
  if (rq == shape::mod_rq()) return shape::mod_res();
  if (rq == shape::add_rq()) return shape::add_res();
  if (rq == shape::del_rq()) return shape::del_res();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Filters

bool Filter::supported() const {
  if (kind == Kind::Unsupported) return false;
  for (const auto& c : children)
    if (!c.supported()) return false;
  return true;
}

Value filter_to_value(const Filter& f) {
  switch (f.kind) {
    case Filter::Kind::Present:
      return labelled("present", str(f.attr));
    case Filter::Kind::Equality:
      return labelled("equalityMatch", Value::seq({labelled("attributeDesc", str(f.attr)),
                                                    labelled("assertionValue", str(f.value))}));
    case Filter::Kind::And:
    case Filter::Kind::Or: {
      ValueSeq items;
      for (const auto& c : f.children) items.push_back(filter_to_value(c));
      return labelled(f.kind == Filter::Kind::And ? "and" : "or", Value::seq(std::move(items)));
    }
    case Filter::Kind::Not:
      return labelled("not", filter_to_value(f.children.at(0)));
    case Filter::Kind::Unsupported:
      return labelled("unsupported", str(f.value));
  }
  return {};
}

std::optional<Filter> filter_from_value(const Value& v) {
  const auto* a = v.as_assoc();
  if (!a) return std::nullopt;
  const Value& in = *a->inner;
  if (a->label == "present" || a->label == "unsupported") {
    const auto* s = in.as_string();
    if (!s) return std::nullopt;
    if (a->label == "present") return Filter::present(*s);
    return Filter{Filter::Kind::Unsupported, {}, *s, {}};
  }
  if (a->label == "equalityMatch") {
    const auto* items = in.as_seq();
    if (!items) return std::nullopt;
    auto attr = lookup_assoc(*items, "attributeDesc");
    auto val = lookup_assoc(*items, "assertionValue");
    if (!attr || !val || !attr->as_string() || !val->as_string()) return std::nullopt;
    return Filter::equality(*attr->as_string(), *val->as_string());
  }
  if (a->label == "and" || a->label == "or") {
    const auto* items = in.as_seq();
    if (!items || items->empty()) return std::nullopt;
    std::vector<Filter> cs;
    for (const auto& item : *items) {
      auto c = filter_from_value(item);
      if (!c) return std::nullopt;
      cs.push_back(std::move(*c));
    }
    return a->label == "and" ? Filter::all_of(std::move(cs)) : Filter::any_of(std::move(cs));
  }
  if (a->label == "not") {
    auto c = filter_from_value(in);
    if (!c) return std::nullopt;
    return Filter::negate(std::move(*c));
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builders and views

namespace {

Value attributes_value(const AttributeList& attrs) {
  ValueSeq items;
  items.reserve(attrs.size());
  for (const auto& [type, vals] : attrs) {
    ValueSeq vs;
    vs.reserve(vals.size());
    for (const auto& v : vals) vs.push_back(str(v));
    items.push_back(Value::assoc(type, Value::seq(std::move(vs))));
  }
  return Value::seq(std::move(items));
}

std::optional<AttributeValues> string_list(const Value& v) {
  const auto* items = v.as_seq();
  if (!items) return std::nullopt;
  AttributeValues out;
  out.reserve(items->size());
  for (const auto& item : *items) {
    const auto* s = item.as_string();
    if (!s) return std::nullopt;
    out.push_back(*s);
  }
  return out;
}

}  // namespace

Message bind_request(std::int64_t id, std::string name, std::string password, int version) {
  return Message(shape::bind_rq(),
                 {labelled("version", Value::integer(version)), labelled("name", str(std::move(name))),
                  labelled("authentication", labelled("simple", str(std::move(password))))},
                 id);
}

Message sasl_bind_request(std::int64_t id, std::string name, std::string mechanism) {
  return Message(
      shape::bind_rq(),
      {labelled("version", Value::integer(3)), labelled("name", str(std::move(name))),
       labelled("authentication",
                labelled("sasl", Value::seq({labelled("mechanism", str(std::move(mechanism)))})))},
      id);
}

Message unbind_request(std::int64_t id) { return Message(shape::unbind_rq(), {}, id); }

Message search_request(std::int64_t id, const SearchRequest& rq) {
  ValueSeq attrs;
  for (const auto& a : rq.attributes) attrs.push_back(str(a));
  return Message(shape::search_rq(),
                 {labelled("baseObject", str(rq.base)),
                  labelled("scope", Value::enumerated(static_cast<int>(rq.scope))),
                  labelled("derefAliases", Value::enumerated(rq.deref_aliases)),
                  labelled("sizeLimit", Value::integer(rq.size_limit)),
                  labelled("timeLimit", Value::integer(rq.time_limit)),
                  labelled("typesOnly", Value::boolean(rq.types_only)),
                  labelled("filter", filter_to_value(rq.filter)),
                  labelled("attributes", Value::seq(std::move(attrs)))},
                 id);
}

Message search_entry(std::int64_t id, std::string dn, const AttributeList& attrs) {
  return Message(shape::search_entry(),
                 {labelled("objectName", str(std::move(dn))),
                  labelled("attributes", attributes_value(attrs))},
                 id);
}

Message add_request(std::int64_t id, std::string dn, const AttributeList& attrs) {
  return Message(shape::add_rq(),
                 {labelled("entry", str(std::move(dn))), labelled("attributes", attributes_value(attrs))},
                 id);
}

Message modify_request(std::int64_t id, std::string dn, const std::vector<Change>& changes) {
  ValueSeq cs;
  for (const auto& c : changes) {
    ValueSeq vs;
    for (const auto& v : c.modification.second) vs.push_back(str(v));
    cs.push_back(Value::seq({labelled("operation", Value::enumerated(static_cast<int>(c.op))),
                             Value::assoc(c.modification.first, Value::seq(std::move(vs)))}));
  }
  return Message(shape::mod_rq(),
                 {labelled("entry", str(std::move(dn))), labelled("changes", Value::seq(std::move(cs)))},
                 id);
}

Message delete_request(std::int64_t id, std::string dn) {
  return Message(shape::del_rq(), {labelled("entry", str(std::move(dn)))}, id);
}

Message result(const Shape& shape, std::int64_t id, ResultCode code, std::string matched_dn,
               std::string diagnostic) {
  return Message(shape,
                 {labelled("resultCode", Value::enumerated(static_cast<int>(code))),
                  labelled("matchedDN", str(std::move(matched_dn))),
                  labelled("diagnosticMessage", str(std::move(diagnostic)))},
                 id);
}

std::optional<SearchRequest> as_search_request(const Message& m) {
  SearchRequest rq;
  auto base = lookup_assoc(m, "baseObject");
  auto scope = lookup_assoc(m, "scope");
  auto filter = lookup_assoc(m, "filter");
  if (!base || !base->as_string() || !scope || !scope->as_enumerated() || !filter)
    return std::nullopt;
  rq.base = *base->as_string();
  const auto sc = *scope->as_enumerated();
  if (sc < 0 || sc > 2) return std::nullopt;
  rq.scope = static_cast<SearchScope>(sc);
  auto f = filter_from_value(*filter);
  if (!f) return std::nullopt;
  rq.filter = std::move(*f);
  if (auto v = lookup_assoc(m, "derefAliases"); v && v->as_enumerated())
    rq.deref_aliases = static_cast<int>(*v->as_enumerated());
  if (auto v = lookup_assoc(m, "sizeLimit"); v && v->as_integer()) rq.size_limit = *v->as_integer();
  if (auto v = lookup_assoc(m, "timeLimit"); v && v->as_integer()) rq.time_limit = *v->as_integer();
  if (auto v = lookup_assoc(m, "typesOnly"); v && v->as_boolean()) rq.types_only = *v->as_boolean();
  if (auto v = lookup_assoc(m, "attributes")) {
    auto names = string_list(*v);
    if (!names) return std::nullopt;
    rq.attributes = std::move(*names);
  }
  return rq;
}

std::optional<AttributeList> as_attribute_list(const Value& v) {
  const auto* items = v.as_seq();
  if (!items) return std::nullopt;
  AttributeList out;
  for (const auto& item : *items) {
    const auto* a = item.as_assoc();
    if (!a) return std::nullopt;
    auto vals = string_list(*a->inner);
    if (!vals) return std::nullopt;
    out.emplace_back(a->label, std::move(*vals));
  }
  return out;
}

std::optional<std::vector<Change>> as_changes(const Value& v) {
  const auto* items = v.as_seq();
  if (!items) return std::nullopt;
  std::vector<Change> out;
  for (const auto& item : *items) {
    const auto* parts = item.as_seq();
    if (!parts || parts->size() != 2) return std::nullopt;
    auto op = lookup_assoc(*parts, "operation");
    if (!op || !op->as_enumerated()) return std::nullopt;
    const auto code = *op->as_enumerated();
    if (code < 0 || code > 2) return std::nullopt;
    const auto* mod = (*parts)[1].as_assoc();
    if (!mod) return std::nullopt;
    auto vals = string_list(*mod->inner);
    if (!vals) return std::nullopt;
    out.push_back({static_cast<ModOp>(code), {mod->label, std::move(*vals)}});
  }
  return out;
}

std::optional<ResultCode> result_code(const Message& m) {
  auto v = lookup_assoc(m, "resultCode");
  if (!v || !v->as_enumerated()) return std::nullopt;
  return static_cast<ResultCode>(*v->as_enumerated());
}

std::optional<std::string> string_value(const Message& m, std::string_view label) {
  auto v = lookup_assoc(m, label);
  if (!v || !v->as_string()) return std::nullopt;
  return *v->as_string();
}

// ---------------------------------------------------------------------------
// Decoding

CodecError::CodecError(Kind kind, const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
      kind_(kind),
      offset_(offset) {}

namespace {

using ber::Reader;
using ber::Tlv;

[[noreturn]] void malformed(const std::string& what, std::size_t offset) {
  throw CodecError(CodecError::Kind::MalformedBer, what, offset);
}

void expect_end(const Reader& r, const char* what) {
  if (!r.at_end()) malformed(std::string("unexpected trailing data in ") + what, r.offset());
}

Value decode_filter(const Tlv& t, int depth) {
  if (depth > 64) malformed("filter nested too deeply", t.offset);
  switch (t.tag) {
    case kFilterAnd:
    case kFilterOr: {
      ValueSeq items;
      Reader r = ber::enter(t);
      while (!r.at_end()) items.push_back(decode_filter(r.next(), depth + 1));
      if (items.empty()) {
        return labelled("unsupported", str(std::string(t.whole.begin(), t.whole.end())));
      }
      return labelled(t.tag == kFilterAnd ? "and" : "or", Value::seq(std::move(items)));
    }
    case kFilterNot: {
      Reader r = ber::enter(t);
      Value inner = decode_filter(r.next(), depth + 1);
      expect_end(r, "not filter");
      return labelled("not", std::move(inner));
    }
    case kFilterEquality: {
      Reader r = ber::enter(t);
      auto attr = ber::decode_string(r.expect(ber::tag::kOctetString, "attributeDesc"));
      auto val = ber::decode_string(r.expect(ber::tag::kOctetString, "assertionValue"));
      expect_end(r, "equality filter");
      return labelled("equalityMatch", Value::seq({labelled("attributeDesc", str(std::move(attr))),
                                                    labelled("assertionValue", str(std::move(val)))}));
    }
    case kFilterPresent:
      return labelled("present", str(std::string(t.content.begin(), t.content.end())));
    case 0xa4:  // substrings
    case 0xa5:  // greaterOrEqual
    case 0xa6:  // lessOrEqual
    case 0xa8:  // approxMatch
    case 0xa9:  // extensibleMatch
      return labelled("unsupported", str(std::string(t.whole.begin(), t.whole.end())));
    default:
      malformed("unknown filter choice", t.offset);
  }
}

Value decode_partial_attributes(const Tlv& seq) {
  ValueSeq items;
  Reader r = ber::enter(seq);
  while (!r.at_end()) {
    Tlv attr = r.expect(ber::tag::kSequence, "attribute");
    Reader ar = ber::enter(attr);
    std::string type = ber::decode_string(ar.expect(ber::tag::kOctetString, "attribute type"));
    Tlv set = ar.expect(ber::tag::kSet, "attribute values");
    expect_end(ar, "attribute");
    ValueSeq vals;
    Reader vr = ber::enter(set);
    while (!vr.at_end())
      vals.push_back(str(ber::decode_string(vr.expect(ber::tag::kOctetString, "attribute value"))));
    items.push_back(Value::assoc(std::move(type), Value::seq(std::move(vals))));
  }
  return Value::seq(std::move(items));
}

ValueSeq decode_result(Reader& r, bool bind_response) {
  ValueSeq out;
  out.push_back(labelled("resultCode", Value::enumerated(ber::decode_integer(
                                           r.expect(ber::tag::kEnumerated, "resultCode")))));
  out.push_back(labelled("matchedDN", str(ber::decode_string(r.expect(ber::tag::kOctetString, "matchedDN")))));
  out.push_back(labelled("diagnosticMessage",
                         str(ber::decode_string(r.expect(ber::tag::kOctetString, "diagnosticMessage")))));
  // Referrals and SASL server credentials are accepted and dropped.
  if (r.peek_tag() == kReferral) r.next();
  if (bind_response && r.peek_tag() == kServerSaslCreds) r.next();
  expect_end(r, "LDAPResult");
  return out;
}

ValueSeq decode_op(int n, const Tlv& op) {
  ValueSeq out;
  if (n == 2) {
    if (!op.content.empty()) malformed("unbind request must be empty", op.offset);
    return out;
  }
  if (n == 10) {
    out.push_back(labelled("entry", str(std::string(op.content.begin(), op.content.end()))));
    return out;
  }
  Reader r = ber::enter(op);
  if (is_result_op(n)) return decode_result(r, n == 1);
  switch (n) {
    case 0: {
      out.push_back(labelled("version", Value::integer(ber::decode_integer(
                                            r.expect(ber::tag::kInteger, "version")))));
      out.push_back(labelled("name", str(ber::decode_string(r.expect(ber::tag::kOctetString, "name")))));
      const std::size_t at = r.offset();
      Tlv auth = r.next();
      if (auth.tag == kSimpleAuth) {
        out.push_back(labelled("authentication",
                               labelled("simple", str(std::string(auth.content.begin(), auth.content.end())))));
      } else if (auth.tag == kSaslAuth) {
        Reader sr = ber::enter(auth);
        ValueSeq sasl;
        sasl.push_back(labelled("mechanism", str(ber::decode_string(sr.expect(ber::tag::kOctetString, "mechanism")))));
        if (sr.peek_tag() == kSaslCredentials)
          sasl.push_back(labelled("credentials", str(ber::decode_string(sr.next()))));
        expect_end(sr, "sasl credentials");
        out.push_back(labelled("authentication", labelled("sasl", Value::seq(std::move(sasl)))));
      } else {
        malformed("unknown authentication choice", at);
      }
      expect_end(r, "bind request");
      return out;
    }
    case 3: {
      out.push_back(labelled("baseObject", str(ber::decode_string(r.expect(ber::tag::kOctetString, "baseObject")))));
      Tlv scope = r.expect(ber::tag::kEnumerated, "scope");
      const auto sc = ber::decode_integer(scope);
      if (sc < 0 || sc > 2) malformed("invalid search scope", scope.offset);
      out.push_back(labelled("scope", Value::enumerated(sc)));
      out.push_back(labelled("derefAliases", Value::enumerated(ber::decode_integer(
                                                 r.expect(ber::tag::kEnumerated, "derefAliases")))));
      out.push_back(labelled("sizeLimit", Value::integer(ber::decode_integer(
                                              r.expect(ber::tag::kInteger, "sizeLimit")))));
      out.push_back(labelled("timeLimit", Value::integer(ber::decode_integer(
                                              r.expect(ber::tag::kInteger, "timeLimit")))));
      out.push_back(labelled("typesOnly", Value::boolean(ber::decode_boolean(
                                              r.expect(ber::tag::kBoolean, "typesOnly")))));
      out.push_back(labelled("filter", decode_filter(r.next(), 0)));
      Tlv attrs = r.expect(ber::tag::kSequence, "attributes");
      ValueSeq names;
      Reader ar = ber::enter(attrs);
      while (!ar.at_end())
        names.push_back(str(ber::decode_string(ar.expect(ber::tag::kOctetString, "attribute selector"))));
      out.push_back(labelled("attributes", Value::seq(std::move(names))));
      expect_end(r, "search request");
      return out;
    }
    case 4:
    case 8: {
      const char* dn_label = n == 4 ? "objectName" : "entry";
      out.push_back(labelled(dn_label, str(ber::decode_string(r.expect(ber::tag::kOctetString, dn_label)))));
      out.push_back(labelled("attributes", decode_partial_attributes(r.expect(ber::tag::kSequence, "attributes"))));
      expect_end(r, n == 4 ? "search entry" : "add request");
      return out;
    }
    case 6: {
      out.push_back(labelled("entry", str(ber::decode_string(r.expect(ber::tag::kOctetString, "object")))));
      Tlv changes = r.expect(ber::tag::kSequence, "changes");
      ValueSeq cs;
      Reader cr = ber::enter(changes);
      while (!cr.at_end()) {
        Tlv change = cr.expect(ber::tag::kSequence, "change");
        Reader ch = ber::enter(change);
        Tlv op = ch.expect(ber::tag::kEnumerated, "operation");
        const auto code = ber::decode_integer(op);
        if (code < 0 || code > 2) malformed("invalid modify operation", op.offset);
        Tlv mod = ch.expect(ber::tag::kSequence, "modification");
        expect_end(ch, "change");
        // Reuse the partial-attribute decoder on a one-element list.
        Reader mr = ber::enter(mod);
        std::string type = ber::decode_string(mr.expect(ber::tag::kOctetString, "modification type"));
        Tlv set = mr.expect(ber::tag::kSet, "modification values");
        expect_end(mr, "modification");
        ValueSeq vals;
        Reader vr = ber::enter(set);
        while (!vr.at_end())
          vals.push_back(str(ber::decode_string(vr.expect(ber::tag::kOctetString, "value"))));
        cs.push_back(Value::seq({labelled("operation", Value::enumerated(code)),
                                 Value::assoc(std::move(type), Value::seq(std::move(vals)))}));
      }
      out.push_back(labelled("changes", Value::seq(std::move(cs))));
      expect_end(r, "modify request");
      return out;
    }
    default:
      break;
  }
  malformed("unhandled operation", op.offset);
}

}  // namespace

Message decode(ber::ByteView frame, std::size_t max_frame) {
  if (frame.size() > max_frame)
    throw CodecError(CodecError::Kind::OversizeFrame,
                     "frame of " + std::to_string(frame.size()) + " bytes exceeds maximum", 0);
  try {
    if (frame.empty()) malformed("empty frame", 0);
    if (frame[0] != ber::tag::kSequence) malformed("expected LDAPMessage SEQUENCE", 0);
    Reader top(frame, 0);
    Tlv msg = top.next();
    if (!top.at_end()) malformed("trailing bytes after LDAPMessage", top.offset());

    Reader r = ber::enter(msg);
    Tlv id_tlv = r.expect(ber::tag::kInteger, "messageID");
    const std::int64_t id = ber::decode_integer(id_tlv);
    if (id < 0 || id > 0x7fffffff) malformed("messageID out of range", id_tlv.offset);

    if (r.at_end()) malformed("missing protocolOp", r.offset());
    Tlv op = r.next();
    if ((op.tag & ber::tag::kClassMask) != ber::tag::kApplication)
      malformed("protocolOp is not an application tag", op.offset);
    const int n = op.tag & ber::tag::kNumberMask;
    if (n >= 12)
      throw CodecError(CodecError::Kind::UnknownApplicationTag,
                       "unsupported LDAP operation [APPLICATION " + std::to_string(n) + "]", op.offset);
    if (op.constructed() == is_primitive_op(n))
      malformed("wrong primitive/constructed form for protocolOp", op.offset);
    if (!r.at_end()) {
      const std::size_t at = r.offset();
      if (r.peek_tag() == 0xa0)
        throw CodecError(CodecError::Kind::UnknownApplicationTag, "LDAP controls not supported", at);
      malformed("trailing data after protocolOp", at);
    }
    return Message(*shape_table()[n], decode_op(n, op), id);
  } catch (const ber::Error& e) {
    throw CodecError(CodecError::Kind::MalformedBer, e.what(), e.offset());
  }
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

[[noreturn]] void missing(const std::string& label) {
  throw CodecError(CodecError::Kind::MissingValue, "missing or mistyped value '" + label + "'");
}

const Value& need(const Message& m, const char* label, std::optional<Value>& slot) {
  slot = lookup_assoc(m, label);
  if (!slot) missing(label);
  return *slot;
}

const std::string& need_string(const Message& m, const char* label, std::optional<Value>& slot) {
  const auto* s = need(m, label, slot).as_string();
  if (!s) missing(label);
  return *s;
}

void write_string_set(ber::Writer& w, const Value& v, const std::string& label) {
  const auto* vals = v.as_seq();
  if (!vals) missing(label);
  w.open(ber::tag::kSet);
  for (const auto& x : *vals) {
    const auto* s = x.as_string();
    if (!s) missing(label);
    w.octet_string(*s);
  }
  w.close();
}

void write_attribute_list(ber::Writer& w, const Value& v, const char* label) {
  const auto* items = v.as_seq();
  if (!items) missing(label);
  w.open(ber::tag::kSequence);
  for (const auto& item : *items) {
    const auto* a = item.as_assoc();
    if (!a) missing(label);
    w.open(ber::tag::kSequence);
    w.octet_string(a->label);
    write_string_set(w, *a->inner, a->label);
    w.close();
  }
  w.close();
}

void write_filter(ber::Writer& w, const Value& v, int depth) {
  if (depth > 64) missing("filter");
  const auto* a = v.as_assoc();
  if (!a) missing("filter");
  const Value& in = *a->inner;
  if (a->label == "present") {
    if (!in.as_string()) missing("filter.present");
    w.string(kFilterPresent, *in.as_string());
  } else if (a->label == "equalityMatch") {
    const auto* items = in.as_seq();
    if (!items) missing("filter.equalityMatch");
    auto attr = lookup_assoc(*items, "attributeDesc");
    auto val = lookup_assoc(*items, "assertionValue");
    if (!attr || !val || !attr->as_string() || !val->as_string()) missing("filter.equalityMatch");
    w.open(kFilterEquality);
    w.octet_string(*attr->as_string());
    w.octet_string(*val->as_string());
    w.close();
  } else if (a->label == "and" || a->label == "or") {
    const auto* items = in.as_seq();
    if (!items || items->empty()) missing("filter." + a->label);
    w.open(a->label == "and" ? kFilterAnd : kFilterOr);
    for (const auto& item : *items) write_filter(w, item, depth + 1);
    w.close();
  } else if (a->label == "not") {
    w.open(kFilterNot);
    write_filter(w, in, depth + 1);
    w.close();
  } else if (a->label == "unsupported") {
    const auto* raw = in.as_string();
    if (!raw || raw->empty()) missing("filter.unsupported");
    w.raw(ber::ByteView(reinterpret_cast<const std::uint8_t*>(raw->data()), raw->size()));
  } else {
    missing("filter");
  }
}

void write_result(ber::Writer& w, const Message& m) {
  std::optional<Value> slot;
  const auto code = need(m, "resultCode", slot).as_enumerated();
  if (!code) missing("resultCode");
  w.integer(ber::tag::kEnumerated, *code);
  w.octet_string(need_string(m, "matchedDN", slot));
  w.octet_string(need_string(m, "diagnosticMessage", slot));
}

}  // namespace

WireFrame encode(const Message& msg) {
  const auto n = application_tag(msg.shape());
  if (!n)
    throw CodecError(CodecError::Kind::UnknownShape,
                     "shape '" + msg.shape().name() + "' has no LDAP encoding");
  std::optional<Value> slot;
  ber::Writer w;
  w.open(ber::tag::kSequence);
  w.integer(ber::tag::kInteger, msg.correlation_id());
  const std::uint8_t op_tag = static_cast<std::uint8_t>(
      ber::tag::kApplication | (is_primitive_op(*n) ? 0 : ber::tag::kConstructed) | *n);
  if (*n == 2) {
    w.primitive(op_tag, {});
  } else if (*n == 10) {
    w.string(op_tag, need_string(msg, "entry", slot));
  } else {
    w.open(op_tag);
    if (is_result_op(*n)) {
      write_result(w, msg);
    } else {
      switch (*n) {
        case 0: {
          const auto version = need(msg, "version", slot).as_integer();
          if (!version) missing("version");
          w.integer(ber::tag::kInteger, *version);
          w.octet_string(need_string(msg, "name", slot));
          const auto* auth = need(msg, "authentication", slot).as_assoc();
          if (!auth) missing("authentication");
          if (auth->label == "simple" && auth->inner->as_string()) {
            w.string(kSimpleAuth, *auth->inner->as_string());
          } else if (auth->label == "sasl" && auth->inner->as_seq()) {
            const auto& parts = *auth->inner->as_seq();
            auto mech = lookup_assoc(parts, "mechanism");
            if (!mech || !mech->as_string()) missing("authentication.sasl.mechanism");
            w.open(kSaslAuth);
            w.octet_string(*mech->as_string());
            if (auto cred = lookup_assoc(parts, "credentials")) {
              if (!cred->as_string()) missing("authentication.sasl.credentials");
              w.octet_string(*cred->as_string());
            }
            w.close();
          } else {
            missing("authentication");
          }
          break;
        }
        case 3: {
          w.octet_string(need_string(msg, "baseObject", slot));
          const auto scope = need(msg, "scope", slot).as_enumerated();
          if (!scope) missing("scope");
          w.integer(ber::tag::kEnumerated, *scope);
          const auto deref = need(msg, "derefAliases", slot).as_enumerated();
          if (!deref) missing("derefAliases");
          w.integer(ber::tag::kEnumerated, *deref);
          const auto size = need(msg, "sizeLimit", slot).as_integer();
          if (!size) missing("sizeLimit");
          w.integer(ber::tag::kInteger, *size);
          const auto time = need(msg, "timeLimit", slot).as_integer();
          if (!time) missing("timeLimit");
          w.integer(ber::tag::kInteger, *time);
          const auto types = need(msg, "typesOnly", slot).as_boolean();
          if (!types) missing("typesOnly");
          w.boolean(*types);
          write_filter(w, need(msg, "filter", slot), 0);
          const auto* attrs = need(msg, "attributes", slot).as_seq();
          if (!attrs) missing("attributes");
          w.open(ber::tag::kSequence);
          for (const auto& a : *attrs) {
            if (!a.as_string()) missing("attributes");
            w.octet_string(*a.as_string());
          }
          w.close();
          break;
        }
        case 4:
        case 8: {
          w.octet_string(need_string(msg, *n == 4 ? "objectName" : "entry", slot));
          write_attribute_list(w, need(msg, "attributes", slot), "attributes");
          break;
        }
        case 6: {
          w.octet_string(need_string(msg, "entry", slot));
          const auto* changes = need(msg, "changes", slot).as_seq();
          if (!changes) missing("changes");
          w.open(ber::tag::kSequence);
          for (const auto& c : *changes) {
            const auto* parts = c.as_seq();
            if (!parts || parts->size() != 2) missing("changes");
            auto op = lookup_assoc(*parts, "operation");
            const auto* mod = (*parts)[1].as_assoc();
            if (!op || !op->as_enumerated() || !mod) missing("changes");
            w.open(ber::tag::kSequence);
            w.integer(ber::tag::kEnumerated, *op->as_enumerated());
            w.open(ber::tag::kSequence);
            w.octet_string(mod->label);
            write_string_set(w, *mod->inner, mod->label);
            w.close();
            w.close();
          }
          w.close();
          break;
        }
        default:
          break;
      }
    }
    w.close();
  }
  w.close();
  return WireFrame{std::move(w).take()};
}

// ---------------------------------------------------------------------------
// Framing

FrameSplit frame_stream(ber::ByteView buffer, std::size_t max_frame) {
  FrameSplit out;
  std::size_t pos = 0;
  while (pos < buffer.size()) {
    if (buffer[pos] != ber::tag::kSequence)
      throw CodecError(CodecError::Kind::MalformedHeader, "frame does not start with SEQUENCE", pos);
    ber::Header h;
    try {
      h = ber::read_header(buffer.subspan(pos), pos);
    } catch (const ber::Error& e) {
      throw CodecError(CodecError::Kind::MalformedHeader, e.what(), e.offset());
    }
    if (h.status == ber::HeaderStatus::NeedMore) break;
    if (h.content_len > max_frame || h.header_len + h.content_len > max_frame)
      throw CodecError(CodecError::Kind::FrameExceedsMax,
                       "frame length " + std::to_string(h.content_len) + " exceeds maximum " +
                           std::to_string(max_frame),
                       pos);
    const std::size_t total = h.header_len + static_cast<std::size_t>(h.content_len);
    if (buffer.size() - pos < total) break;
    const auto bytes = buffer.subspan(pos, total);
    out.frames.push_back(WireFrame{ber::Bytes(bytes.begin(), bytes.end())});
    pos += total;
  }
  out.consumed = pos;
  return out;
}

std::pair<std::vector<WireFrame>, ber::Bytes> frame_stream(const ber::Bytes& buffer,
                                                           std::size_t max_frame) {
  auto split = frame_stream(ber::ByteView(buffer), max_frame);
  ber::Bytes rest(buffer.begin() + static_cast<std::ptrdiff_t>(split.consumed), buffer.end());
  return {std::move(split.frames), std::move(rest)};
}

}  // namespace svcemu::ldap
