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

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "svcemu/protocol.hpp"

namespace svcemu {
namespace {

enum class Tok { Name, Zero, Receive, Bang, Dot, Plus, Extend, LParen, RParen, Equals, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const int l = line;
    const int k = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      out.push_back({Tok::Name, std::string(src.substr(i, j - i)), l, k});
      advance(j - i);
      continue;
    }
    if (c == '|' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::Extend, "|>", l, k});
      advance(2);
      continue;
    }
    Tok t;
    switch (c) {
      case '0': t = Tok::Zero; break;
      case '?': t = Tok::Receive; break;
      case '!': t = Tok::Bang; break;
      case '.': t = Tok::Dot; break;
      case '+': t = Tok::Plus; break;
      case '(': t = Tok::LParen; break;
      case ')': t = Tok::RParen; break;
      case '=': t = Tok::Equals; break;
      default:
        throw SpecError(SpecError::Kind::Syntax, std::string("unexpected character '") + c + "'",
                        l, k);
    }
    out.push_back({t, std::string(1, c), l, k});
    advance(1);
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

bool is_keyword(const std::string& s) { return s == "in" || s == "and" || s == "x"; }

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ProtocolSpec parse_spec() {
    std::map<std::string, ProtocolTerm> decls;
    if (!peek_name("in")) {
      for (;;) {
        const Token& name = expect_identifier();
        if (decls.count(name.text))
          fail("duplicate declaration of '" + name.text + "'", name);
        expect(Tok::Equals, "'='");
        decls.emplace(name.text, parse_product());
        if (peek_name("and")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    if (!peek_name("in")) fail("expected 'in'", cur());
    ++pos_;
    ProtocolTerm root = parse_product();
    if (cur().kind != Tok::End) fail("unexpected trailing input '" + cur().text + "'", cur());
    return ProtocolSpec(std::move(decls), std::move(root));
  }

 private:
  const Token& cur() const { return toks_[pos_]; }

  bool peek_name(const char* kw) const { return cur().kind == Tok::Name && cur().text == kw; }

  [[noreturn]] static void fail(const std::string& what, const Token& at) {
    throw SpecError(SpecError::Kind::Syntax, what, at.line, at.column);
  }

  const Token& expect(Tok kind, const char* what) {
    if (cur().kind != kind)
      fail(std::string("expected ") + what + ", found '" + cur().text + "'", cur());
    return toks_[pos_++];
  }

  const Token& expect_identifier() {
    const Token& t = expect(Tok::Name, "a name");
    if (is_keyword(t.text)) fail("'" + t.text + "' is reserved", t);
    return t;
  }

  ProtocolTerm parse_product() {
    ProtocolTerm lhs = parse_extend();
    while (peek_name("x")) {
      ++pos_;
      lhs = ProtocolTerm::product(std::move(lhs), parse_extend());
    }
    return lhs;
  }

  ProtocolTerm parse_extend() {
    ProtocolTerm lhs = parse_choice();
    while (cur().kind == Tok::Extend) {
      ++pos_;
      lhs = ProtocolTerm::extend(std::move(lhs), parse_choice());
    }
    return lhs;
  }

  ProtocolTerm parse_choice() {
    const Token start = cur();
    ProtocolTerm lhs = parse_unary();
    while (cur().kind == Tok::Plus) {
      ++pos_;
      const Token rhs_start = cur();
      ProtocolTerm rhs = parse_unary();
      if (!lhs.is_interaction())
        throw SpecError(SpecError::Kind::InvalidChoice,
                        "choice operand '" + to_string(lhs) + "' is not an interaction",
                        start.line, start.column);
      if (!rhs.is_interaction())
        throw SpecError(SpecError::Kind::InvalidChoice,
                        "choice operand '" + to_string(rhs) + "' is not an interaction",
                        rhs_start.line, rhs_start.column);
      lhs = ProtocolTerm::choice(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ProtocolTerm parse_unary() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Zero:
        ++pos_;
        return ProtocolTerm::inaction();
      case Tok::LParen: {
        ++pos_;
        ProtocolTerm inner = parse_product();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Receive:
      case Tok::Bang: {
        const Direction dir = t.kind == Tok::Receive ? Direction::Receive : Direction::Transmit;
        ++pos_;
        const Token& shape = expect(Tok::Name, "a message shape");
        bool contractive = false;
        if (cur().kind == Tok::Bang) {
          ++pos_;
          contractive = true;
        }
        expect(Tok::Dot, "'.'");
        Event ev{dir, Shape(shape.text)};
        ProtocolTerm cont = parse_unary();
        return contractive ? ProtocolTerm::contr_prefix(std::move(ev), std::move(cont))
                           : ProtocolTerm::std_prefix(std::move(ev), std::move(cont));
      }
      case Tok::Name:
        return ProtocolTerm::var(expect_identifier().text);
      default:
        fail("expected a protocol term, found '" + t.text + "'", t);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ProtocolSpec parse_protocol(std::string_view text) { return Parser(tokenize(text)).parse_spec(); }

}  // namespace svcemu
