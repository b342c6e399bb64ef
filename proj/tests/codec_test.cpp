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

#include <gtest/gtest.h>

#include "support/generators.hpp"

namespace svcemu::ldap {
namespace {

ber::Bytes hex(std::string_view s) {
  ber::Bytes out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(s.substr(i, 2)), nullptr, 16)));
  return out;
}

CodecError::Kind decode_error(const ber::Bytes& b, std::size_t* offset = nullptr) {
  try {
    decode(ber::ByteView(b));
  } catch (const CodecError& e) {
    if (offset) *offset = e.offset();
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return CodecError::Kind::MissingValue;
}

// Reference vectors produced by tests/oracle/ldap_vectors.py (pyasn1 with the
// ldap3 RFC 4511 schema).
struct Vector {
  const char* name;
  const char* bytes;
  Message message;
  bool encode_exact = true;
};

std::vector<Vector> reference_vectors() {
  SearchRequest subtree;
  subtree.base = "o=acme";
  subtree.scope = SearchScope::kWholeSubtree;

  SearchRequest eq;
  eq.base = "ou=people,o=acme";
  eq.scope = SearchScope::kSingleLevel;
  eq.size_limit = 10;
  eq.types_only = true;
  eq.filter = Filter::all_of({Filter::equality("uid", "u1"), Filter::negate(Filter::present("sn"))});
  eq.attributes = {"cn", "userPassword"};

  const std::string lg = "uid=lg-0,ou=people,o=acme";
  return {
      {"bind_anonymous", "300c020101600702010304008000", bind_request(1, "", "")},
      {"bind_admin", "3021020102601c020103040f636e3d61646d696e2c6f3d61636d658006736563726574",
       bind_request(2, "cn=admin,o=acme", "secret")},
      {"bind_res", "300c02010161070a010004000400", result(shape::bind_res(), 1, ResultCode::kSuccess)},
      {"unbind", "30050201074200", unbind_request(7)},
      {"search_subtree", "302b020102632604066f3d61636d650a01020a0100020100020100010100870b6f626a656374436c6173733000",
       search_request(2, subtree)},
      {"search_equality",
       "304d020106634804106f753d70656f706c652c6f3d61636d650a01010a010002010a020100010101a011a309040375696404027531a2048702"
       "736e30120402636e040c7573657250617373776f7264",
       search_request(6, eq), false},
      {"search_entry",
       "304b020102644604177569643d75302c6f753d70656f706c652c6f3d61636d65302b300b0403756964310404027530301c040b6f626a6563"
       "74436c617373310d0403746f700406706572736f6e",
       search_entry(2, "uid=u0,ou=people,o=acme", {{"uid", {"u0"}}, {"objectClass", {"top", "person"}}})},
      {"search_done", "301902010265140a012004066f3d61636d6504076e6f2073756368",
       result(shape::search_done(), 2, ResultCode::kNoSuchObject, "o=acme", "no such")},
      {"add",
       "303d020103683804197569643d6c672d302c6f753d70656f706c652c6f3d61636d65301b300d0403756964310604046c672d30300a040263"
       "6e310404024c47",
       add_request(3, lg, {{"uid", {"lg-0"}}, {"cn", {"LG"}}})},
      {"add_res", "300c02010369070a014404000400", result(shape::add_res(), 3, ResultCode::kEntryAlreadyExists)},
      {"modify",
       "3051020105664c04197569643d6c672d302c6f753d70656f706c652c6f3d61636d65302f30200a0102301b040c7573657250617373776f72"
       "64310b04096368616e6765642d30300b0a010130060402636e3100",
       modify_request(5, lg, {{ModOp::kReplace, {"userPassword", {"changed-0"}}}, {ModOp::kDelete, {"cn", {}}}})},
      {"mod_res", "300c02010567070a010004000400", result(shape::mod_res(), 5, ResultCode::kSuccess)},
      {"delete", "301f0202012c4a197569643d6c672d302c6f753d70656f706c652c6f3d61636d65", delete_request(300, lg)},
      {"del_res", "300d0202012c6b070a014204000400", result(shape::del_res(), 300, ResultCode::kNotAllowedOnNonLeaf)},
  };
}

TEST(CodecVectors, DecodeMatchesReference) {
  for (const auto& v : reference_vectors()) {
    const auto bytes = hex(v.bytes);
    EXPECT_TRUE(messages_equal(decode(ber::ByteView(bytes)), v.message)) << v.name;
  }
}

TEST(CodecVectors, EncodeMatchesReference) {
  for (const auto& v : reference_vectors()) {
    if (!v.encode_exact) continue;
    EXPECT_EQ(encode(v.message).bytes, hex(v.bytes)) << v.name;
  }
}

// The reference encoder writes BOOLEAN TRUE as 01; output uses the canonical
// FF and input accepts any non-zero octet.
TEST(CodecVectors, BooleanTrueIsCanonical) {
  for (const auto& v : reference_vectors()) {
    if (v.encode_exact) continue;
    auto want = hex(v.bytes);
    const auto got = encode(v.message).bytes;
    ASSERT_EQ(got.size(), want.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i] == want[i]) continue;
      ++diffs;
      EXPECT_EQ(want[i], 0x01);
      EXPECT_EQ(got[i], 0xff);
      EXPECT_EQ(got[i - 2], ber::tag::kBoolean);
    }
    EXPECT_EQ(diffs, 1u) << v.name;
  }
}

TEST(CodecVectors, AllTwelveShapesCovered) {
  std::set<std::string> shapes;
  for (const auto& v : reference_vectors()) shapes.insert(v.message.shape().name());
  EXPECT_EQ(shapes.size(), 12u);
}

TEST(Decode, AnonymousBindFields) {
  const auto m = decode(ber::ByteView(hex("300c020101600702010304008000")));
  EXPECT_EQ(m.shape(), shape::bind_rq());
  EXPECT_EQ(m.correlation_id(), 1);
  EXPECT_EQ(*lookup_assoc(m, "version"), Value::integer(3));
  EXPECT_EQ(string_value(m, "name"), "");
}

TEST(Decode, SetTagAtTopIsMalformed) {
  std::size_t offset = 99;
  EXPECT_EQ(decode_error(hex("3103020101"), &offset), CodecError::Kind::MalformedBer);
  EXPECT_EQ(offset, 0u);
}

TEST(Decode, UnknownApplicationTag) {
  // abandonRequest [APPLICATION 16]
  EXPECT_EQ(decode_error(hex("3006020101500101")), CodecError::Kind::UnknownApplicationTag);
  // extendedRequest [APPLICATION 23]
  EXPECT_EQ(decode_error(hex("30050201017700")), CodecError::Kind::UnknownApplicationTag);
  // Declared length overruns the frame.
  EXPECT_EQ(decode_error(hex("30050201017704")), CodecError::Kind::MalformedBer);
}

TEST(Decode, TruncationNamesOffset) {
  auto b = hex("300c020101600702010304008000");
  b.pop_back();
  std::size_t offset = 0;
  EXPECT_EQ(decode_error(b, &offset), CodecError::Kind::MalformedBer);
}

TEST(Decode, TrailingBytesRejected) {
  auto b = hex("30050201074200");
  b.push_back(0);
  EXPECT_EQ(decode_error(b), CodecError::Kind::MalformedBer);
}

TEST(Decode, OversizeFrame) {
  const auto b = hex("300c020101600702010304008000");
  try {
    decode(ber::ByteView(b), 8);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::OversizeFrame);
  }
}

TEST(Decode, NonMinimalLengthAccepted) {
  // Outer length in long form (81 0c) is tolerated on input.
  const auto m = decode(ber::ByteView(hex("30810c020101600702010304008000")));
  EXPECT_TRUE(messages_equal(m, bind_request(1, "", "")));
  EXPECT_EQ(encode(m).bytes, hex("300c020101600702010304008000"));
}

TEST(Decode, IndefiniteLengthRejected) {
  EXPECT_EQ(decode_error(hex("3080020107420000000")), CodecError::Kind::MalformedBer);
}

TEST(Decode, SaslBindDecodes) {
  const auto m = sasl_bind_request(4, "", "EXTERNAL");
  EXPECT_TRUE(messages_equal(decode(encode(m)), m));
}

TEST(Decode, SubstringFilterSurfacesAsUnsupported) {
  // (cn=a*) as a substrings filter [4]; search_substring reference vector.
  const auto b = hex("3023020102631e04000a01020a0100020100020100010100a4090402636e30038001613000");
  const auto m = decode(ber::ByteView(b));
  const auto rq = as_search_request(m);
  ASSERT_TRUE(rq);
  EXPECT_EQ(rq->filter.kind, Filter::Kind::Unsupported);
  EXPECT_FALSE(rq->filter.supported());
  EXPECT_EQ(encode(m).bytes, b);
}

TEST(Encode, UnknownShape) {
  try {
    encode(Message(Shape("HttpGet"), {}, 1));
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::UnknownShape);
  }
}

TEST(Encode, MissingRequiredValue) {
  try {
    encode(Message(shape::del_rq(), {}, 1));
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::MissingValue);
    EXPECT_NE(std::string(e.what()).find("entry"), std::string::npos);
  }
}

TEST(Encode, LongFormLengthIsMinimal) {
  const auto f = encode(search_entry(1, std::string(300, 'x'), {}));
  EXPECT_EQ(f.bytes[0], 0x30);
  EXPECT_EQ(f.bytes[1], 0x82);
  const auto g = encode(search_entry(1, std::string(120, 'x'), {}));
  EXPECT_EQ(g.bytes[1], 0x81);
}

TEST(ApplicationTags, Table) {
  const char* names[] = {"BindRq", "BindRes", "UnbindRq", "SearchRq", "SearchEntry", "SearchDone",
                         "ModRq",  "ModRes",  "AddRq",    "AddRes",   "DelRq",       "DelRes"};
  for (int i = 0; i < 12; ++i) EXPECT_EQ(application_tag(Shape(names[i])), i);
  EXPECT_FALSE(application_tag(Shape("HttpGet")));
  EXPECT_EQ(response_shape_for(shape::search_rq()), shape::search_done());
  EXPECT_FALSE(response_shape_for(shape::unbind_rq()));
}

// ---- frame_stream -------------------------------------------------------------

TEST(FrameStream, TwoConcatenatedFrames) {
  auto buf = hex("30050201074200" "300c02010161070a010004000400");
  auto [frames, rest] = frame_stream(buf, kDefaultMaxFrame);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].bytes, hex("30050201074200"));
  EXPECT_TRUE(rest.empty());
}

TEST(FrameStream, SplitAtByteThree) {
  const auto whole = hex("300c020101600702010304008000");
  ber::Bytes first(whole.begin(), whole.begin() + 3);
  auto [f1, rest1] = frame_stream(first, kDefaultMaxFrame);
  EXPECT_TRUE(f1.empty());
  EXPECT_EQ(rest1.size(), 3u);
  rest1.insert(rest1.end(), whole.begin() + 3, whole.end());
  auto [f2, rest2] = frame_stream(rest1, kDefaultMaxFrame);
  ASSERT_EQ(f2.size(), 1u);
  EXPECT_EQ(f2[0].bytes, whole);
  EXPECT_TRUE(rest2.empty());
}

TEST(FrameStream, LengthTwoToThirtyExceedsMax) {
  const auto buf = hex("3084400000000201");
  try {
    frame_stream(buf, kDefaultMaxFrame);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::FrameExceedsMax);
  }
}

TEST(FrameStream, IndefiniteLengthIsMalformedHeader) {
  try {
    frame_stream(hex("30800201"), kDefaultMaxFrame);
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.kind(), CodecError::Kind::MalformedHeader);
  }
}

TEST(FrameStream, EmptyBuffer) {
  auto [frames, rest] = frame_stream(ber::Bytes{}, kDefaultMaxFrame);
  EXPECT_TRUE(frames.empty());
  EXPECT_TRUE(rest.empty());
}

// ---- properties ---------------------------------------------------------------

TEST(CodecProperty, RoundTripGeneratedMessages) {
  testgen::Rng rng(2026);
  for (int i = 0; i < 3000; ++i) {
    const Message m = testgen::random_ldap_message(rng);
    const WireFrame f = encode(m);
    ASSERT_EQ(f.bytes[0], 0x30);
    const Message back = decode(f);
    ASSERT_TRUE(messages_equal(back, m)) << "iteration " << i;
    ASSERT_EQ(encode(back).bytes, f.bytes);
  }
}

TEST(CodecProperty, RandomBytesYieldStructuredErrors) {
  testgen::Rng rng(77);
  for (int i = 0; i < 20000; ++i) {
    auto b = testgen::random_bytes(rng, 64);
    ber::Bytes bytes(b.begin(), b.end());
    if (!bytes.empty() && testgen::coin(rng)) bytes[0] = 0x30;
    try {
      decode(ber::ByteView(bytes));
    } catch (const CodecError&) {
    }
  }
}

TEST(CodecProperty, MutatedFramesYieldStructuredErrors) {
  testgen::Rng rng(78);
  for (int i = 0; i < 20000; ++i) {
    auto bytes = encode(testgen::random_ldap_message(rng)).bytes;
    for (int k = testgen::uniform(rng, 1, 3); k > 0; --k) {
      const auto pos = static_cast<std::size_t>(testgen::uniform(rng, 0, static_cast<int>(bytes.size()) - 1));
      switch (testgen::uniform(rng, 0, 2)) {
        case 0: bytes[pos] = static_cast<std::uint8_t>(testgen::uniform(rng, 0, 255)); break;
        case 1: bytes.resize(pos + 1); break;
        default: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(pos), static_cast<std::uint8_t>(rng())); break;
      }
    }
    try {
      decode(ber::ByteView(bytes));
    } catch (const CodecError&) {
    }
  }
}

TEST(CodecProperty, FrameStreamIsChunkingInvariant) {
  testgen::Rng rng(79);
  for (int round = 0; round < 200; ++round) {
    ber::Bytes stream;
    std::vector<ber::Bytes> want;
    for (int n = testgen::uniform(rng, 1, 6); n > 0; --n) {
      auto b = encode(testgen::random_ldap_message(rng)).bytes;
      stream.insert(stream.end(), b.begin(), b.end());
      want.push_back(std::move(b));
    }
    ber::Bytes buffer;
    std::vector<ber::Bytes> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const auto len = std::min<std::size_t>(stream.size() - pos, static_cast<std::size_t>(testgen::uniform(rng, 1, 40)));
      buffer.insert(buffer.end(), stream.begin() + static_cast<std::ptrdiff_t>(pos),
                    stream.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
      auto [frames, rest] = frame_stream(buffer, kDefaultMaxFrame);
      for (auto& f : frames) got.push_back(std::move(f.bytes));
      buffer = std::move(rest);
    }
    EXPECT_TRUE(buffer.empty());
    ASSERT_EQ(got, want);
  }
}

}  // namespace
}  // namespace svcemu::ldap
