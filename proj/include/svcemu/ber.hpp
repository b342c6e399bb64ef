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

// Minimal ASN.1 BER reader/writer: low-tag-number form, definite lengths.

#ifndef SVCEMU_BER_HPP_
#define SVCEMU_BER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svcemu::ber {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

namespace tag {
inline constexpr std::uint8_t kBoolean = 0x01;
inline constexpr std::uint8_t kInteger = 0x02;
inline constexpr std::uint8_t kOctetString = 0x04;
inline constexpr std::uint8_t kNull = 0x05;
inline constexpr std::uint8_t kEnumerated = 0x0a;
inline constexpr std::uint8_t kSequence = 0x30;
inline constexpr std::uint8_t kSet = 0x31;

inline constexpr std::uint8_t kClassMask = 0xc0;
inline constexpr std::uint8_t kApplication = 0x40;
inline constexpr std::uint8_t kContext = 0x80;
inline constexpr std::uint8_t kConstructed = 0x20;
inline constexpr std::uint8_t kNumberMask = 0x1f;
}  // namespace tag

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

struct Tlv {
  std::uint8_t tag = 0;
  std::size_t offset = 0;          // absolute offset of the tag byte
  std::size_t content_offset = 0;  // absolute offset of the first content byte
  ByteView content;
  ByteView whole;  // tag + length + content

  bool constructed() const noexcept { return (tag & tag::kConstructed) != 0; }
};

enum class HeaderStatus { Complete, NeedMore };

struct Header {
  HeaderStatus status = HeaderStatus::NeedMore;
  std::uint8_t tag = 0;
  std::size_t header_len = 0;
  std::uint64_t content_len = 0;
};

/// Parses tag + length at the start of `in`. Returns NeedMore when the
/// header itself is incomplete. Throws Error (offsets relative to `base`)
/// for high-tag-number form, indefinite or over-long lengths.
inline Header read_header(ByteView in, std::size_t base = 0) {
  Header h;
  if (in.size() < 2) return h;
  h.tag = in[0];
  if ((h.tag & tag::kNumberMask) == tag::kNumberMask)
    throw Error("high-tag-number form not supported", base);
  const std::uint8_t first = in[1];
  if (first < 0x80) {
    h.content_len = first;
    h.header_len = 2;
    h.status = HeaderStatus::Complete;
    return h;
  }
  if (first == 0x80) throw Error("indefinite length not supported", base + 1);
  const std::size_t n = first & 0x7f;
  if (n > 8 || first == 0xff) throw Error("length field too long", base + 1);
  if (in.size() < 2 + n) return h;
  std::uint64_t len = 0;
  for (std::size_t i = 0; i < n; ++i) len = (len << 8) | in[2 + i];
  h.content_len = len;
  h.header_len = 2 + n;
  h.status = HeaderStatus::Complete;
  return h;
}

/// Sequential reader over the content of one constructed TLV.
class Reader {
 public:
  Reader(ByteView data, std::size_t base) : data_(data), base_(base) {}

  bool at_end() const noexcept { return pos_ >= data_.size(); }
  std::size_t offset() const noexcept { return base_ + pos_; }

  std::optional<std::uint8_t> peek_tag() const {
    if (at_end()) return std::nullopt;
    return data_[pos_];
  }

  Tlv next() {
    if (at_end()) throw Error("unexpected end of data", offset());
    const ByteView rest = data_.subspan(pos_);
    const Header h = read_header(rest, offset());
    if (h.status != HeaderStatus::Complete) throw Error("truncated header", offset());
    if (h.content_len > rest.size() - h.header_len)
      throw Error("length exceeds enclosing data", offset());
    Tlv t;
    t.tag = h.tag;
    t.offset = offset();
    t.content_offset = offset() + h.header_len;
    t.content = rest.subspan(h.header_len, static_cast<std::size_t>(h.content_len));
    t.whole = rest.subspan(0, h.header_len + static_cast<std::size_t>(h.content_len));
    pos_ += t.whole.size();
    return t;
  }

  Tlv expect(std::uint8_t want, const char* what) {
    const std::size_t at = offset();
    if (at_end()) throw Error(std::string("missing ") + what, at);
    Tlv t = next();
    if (t.tag != want) throw Error(std::string("unexpected tag for ") + what, at);
    return t;
  }

 private:
  ByteView data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

inline Reader enter(const Tlv& t) { return Reader(t.content, t.content_offset); }

inline std::int64_t decode_integer(const Tlv& t) {
  if (t.constructed()) throw Error("integer must be primitive", t.offset);
  if (t.content.empty() || t.content.size() > 8) throw Error("bad integer length", t.offset);
  std::uint64_t v = (t.content[0] & 0x80) ? ~std::uint64_t{0} : 0;
  for (auto b : t.content) v = (v << 8) | b;
  return static_cast<std::int64_t>(v);
}

inline bool decode_boolean(const Tlv& t) {
  if (t.constructed() || t.content.size() != 1) throw Error("bad boolean", t.offset);
  return t.content[0] != 0;
}

inline std::string decode_string(const Tlv& t) {
  if (t.constructed()) throw Error("constructed string not supported", t.offset);
  return std::string(t.content.begin(), t.content.end());
}

/// Writes nested TLVs; lengths are patched on close in minimal form.
class Writer {
 public:
  void open(std::uint8_t tag) {
    out_.push_back(tag);
    out_.push_back(0);
    stack_.push_back(out_.size());
  }

  void close() {
    const std::size_t start = stack_.back();
    stack_.pop_back();
    const std::size_t len = out_.size() - start;
    if (len < 0x80) {
      out_[start - 1] = static_cast<std::uint8_t>(len);
      return;
    }
    std::uint8_t buf[8];
    std::size_t n = 0;
    for (std::size_t v = len; v; v >>= 8) buf[n++] = static_cast<std::uint8_t>(v & 0xff);
    out_[start - 1] = static_cast<std::uint8_t>(0x80 | n);
    out_.insert(out_.begin() + static_cast<std::ptrdiff_t>(start), n, 0);
    for (std::size_t i = 0; i < n; ++i) out_[start + i] = buf[n - 1 - i];
  }

  void primitive(std::uint8_t tag, ByteView content) {
    open(tag);
    out_.insert(out_.end(), content.begin(), content.end());
    close();
  }

  void string(std::uint8_t tag, std::string_view s) {
    primitive(tag, ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  void octet_string(std::string_view s) { string(tag::kOctetString, s); }

  void integer(std::uint8_t tag, std::int64_t v) {
    std::uint8_t buf[8];
    for (int i = 7; i >= 0; --i) {
      buf[i] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
    // Drop redundant leading sign octets.
    std::size_t skip = 0;
    while (skip < 7 && ((buf[skip] == 0x00 && !(buf[skip + 1] & 0x80)) ||
                        (buf[skip] == 0xff && (buf[skip + 1] & 0x80))))
      ++skip;
    primitive(tag, ByteView(buf + skip, 8 - skip));
  }

  void boolean(bool b) {
    const std::uint8_t v = b ? 0xff : 0x00;
    primitive(tag::kBoolean, ByteView(&v, 1));
  }

  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
  std::vector<std::size_t> stack_;
};

}  // namespace svcemu::ber

#endif  // SVCEMU_BER_HPP_
