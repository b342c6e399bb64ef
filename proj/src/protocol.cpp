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

#include "svcemu/protocol.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

namespace svcemu {

std::ostream& operator<<(std::ostream& os, const Event& e) {
  return os << (e.direction == Direction::Receive ? '?' : '!') << e.shape.name();
}

std::string to_string(const Event& e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

namespace {

std::string position_suffix(int line, int column) {
  if (line <= 0) return {};
  return " at " + std::to_string(line) + ":" + std::to_string(column);
}

}  // namespace

SpecError::SpecError(Kind kind, const std::string& what, int line, int column)
    : std::runtime_error(what + position_suffix(line, column)),
      kind_(kind),
      line_(line),
      column_(column) {}

struct ProtocolTerm::Node {
  Kind kind = Kind::Inaction;
  std::optional<Event> event;
  std::vector<ProtocolTerm> children;
  std::string name;
};

ProtocolTerm::ProtocolTerm(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

ProtocolTerm::ProtocolTerm() : ProtocolTerm(inaction()) {}

ProtocolTerm ProtocolTerm::inaction() {
  static const auto node = std::make_shared<const Node>();
  return ProtocolTerm(node);
}

ProtocolTerm ProtocolTerm::std_prefix(Event event, ProtocolTerm continuation) {
  return ProtocolTerm(std::make_shared<const Node>(
      Node{Kind::Std, std::move(event), {std::move(continuation)}, {}}));
}

ProtocolTerm ProtocolTerm::contr_prefix(Event event, ProtocolTerm continuation) {
  return ProtocolTerm(std::make_shared<const Node>(
      Node{Kind::Contr, std::move(event), {std::move(continuation)}, {}}));
}

ProtocolTerm ProtocolTerm::choice(ProtocolTerm left, ProtocolTerm right) {
  if (!left.is_interaction() || !right.is_interaction()) {
    throw SpecError(SpecError::Kind::InvalidChoice,
                    "choice operands must be interactions, got '" + to_string(left) + "' + '" +
                        to_string(right) + "'");
  }
  return ProtocolTerm(std::make_shared<const Node>(
      Node{Kind::Choice, std::nullopt, {std::move(left), std::move(right)}, {}}));
}

ProtocolTerm ProtocolTerm::product(ProtocolTerm p1, ProtocolTerm p2) {
  if (p1.is_inaction()) return p2;
  if (p2.is_inaction()) return p1;
  return ProtocolTerm(std::make_shared<const Node>(
      Node{Kind::Product, std::nullopt, {std::move(p1), std::move(p2)}, {}}));
}

ProtocolTerm ProtocolTerm::extend(ProtocolTerm base, ProtocolTerm extension) {
  if (extension.is_inaction()) return base;
  return ProtocolTerm(std::make_shared<const Node>(
      Node{Kind::Extend, std::nullopt, {std::move(base), std::move(extension)}, {}}));
}

ProtocolTerm ProtocolTerm::var(std::string name) {
  return ProtocolTerm(
      std::make_shared<const Node>(Node{Kind::Var, std::nullopt, {}, std::move(name)}));
}

ProtocolTerm::Kind ProtocolTerm::kind() const noexcept { return node_->kind; }

bool ProtocolTerm::is_interaction() const noexcept {
  const auto k = kind();
  return k == Kind::Std || k == Kind::Contr || k == Kind::Choice;
}

const Event& ProtocolTerm::event() const {
  if (!node_->event) throw std::logic_error("protocol term has no event");
  return *node_->event;
}

const ProtocolTerm& ProtocolTerm::continuation() const {
  if (kind() != Kind::Std && kind() != Kind::Contr)
    throw std::logic_error("protocol term has no continuation");
  return node_->children[0];
}

const ProtocolTerm& ProtocolTerm::left() const {
  if (node_->children.size() != 2) throw std::logic_error("protocol term is not binary");
  return node_->children[0];
}

const ProtocolTerm& ProtocolTerm::right() const {
  if (node_->children.size() != 2) throw std::logic_error("protocol term is not binary");
  return node_->children[1];
}

const std::string& ProtocolTerm::name() const {
  if (kind() != Kind::Var) throw std::logic_error("protocol term is not a variable");
  return node_->name;
}

bool operator==(const ProtocolTerm& a, const ProtocolTerm& b) {
  if (a.node_ == b.node_) return true;
  return a.node_->kind == b.node_->kind && a.node_->event == b.node_->event &&
         a.node_->name == b.node_->name && a.node_->children == b.node_->children;
}

namespace {

// Binding strength for printing: higher binds tighter.
int strength(ProtocolTerm::Kind k) {
  switch (k) {
    case ProtocolTerm::Kind::Product:
      return 0;
    case ProtocolTerm::Kind::Extend:
      return 1;
    case ProtocolTerm::Kind::Choice:
      return 2;
    default:
      return 3;
  }
}

void print(std::ostream& os, const ProtocolTerm& t, int min_strength) {
  const bool parens = strength(t.kind()) < min_strength;
  if (parens) os << '(';
  switch (t.kind()) {
    case ProtocolTerm::Kind::Inaction:
      os << '0';
      break;
    case ProtocolTerm::Kind::Var:
      os << t.name();
      break;
    case ProtocolTerm::Kind::Std:
    case ProtocolTerm::Kind::Contr:
      os << t.event();
      if (t.kind() == ProtocolTerm::Kind::Contr) os << '!';
      os << '.';
      print(os, t.continuation(), 3);
      break;
    case ProtocolTerm::Kind::Choice:
      print(os, t.left(), 2);
      os << " + ";
      print(os, t.right(), 3);
      break;
    case ProtocolTerm::Kind::Extend:
      print(os, t.left(), 1);
      os << " |> ";
      print(os, t.right(), 2);
      break;
    case ProtocolTerm::Kind::Product:
      print(os, t.left(), 0);
      os << " x ";
      print(os, t.right(), 1);
      break;
  }
  if (parens) os << ')';
}

}  // namespace

std::ostream& operator<<(std::ostream& os, const ProtocolTerm& t) {
  print(os, t, 0);
  return os;
}

std::string to_string(const ProtocolTerm& t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

// ---------------------------------------------------------------------------
// ProtocolSpec

namespace {

void collect_vars(const ProtocolTerm& t, bool unguarded_only, std::set<std::string>& out,
                  std::set<Event>* alphabet) {
  using K = ProtocolTerm::Kind;
  switch (t.kind()) {
    case K::Inaction:
      return;
    case K::Var:
      out.insert(t.name());
      return;
    case K::Std:
    case K::Contr:
      if (alphabet) alphabet->insert(t.event());
      if (!unguarded_only) collect_vars(t.continuation(), false, out, alphabet);
      return;
    default:
      collect_vars(t.left(), unguarded_only, out, alphabet);
      collect_vars(t.right(), unguarded_only, out, alphabet);
  }
}

}  // namespace

ProtocolSpec::ProtocolSpec(std::map<std::string, ProtocolTerm> declarations, ProtocolTerm root)
    : decls_(std::move(declarations)), root_(std::move(root)) {
  // Closedness, and the alphabet as a by-product.
  std::set<std::string> referenced;
  collect_vars(root_, false, referenced, &alphabet_);
  for (const auto& [name, body] : decls_) collect_vars(body, false, referenced, &alphabet_);
  for (const auto& v : referenced) {
    if (!decls_.count(v))
      throw SpecError(SpecError::Kind::UnboundVariable, "unbound protocol variable '" + v + "'");
  }

  // Guardedness: the graph of unguarded variable references must be acyclic.
  std::map<std::string, std::set<std::string>> unguarded;
  for (const auto& [name, body] : decls_) collect_vars(body, true, unguarded[name], nullptr);

  enum class Mark { None, Active, Done };
  std::map<std::string, Mark> mark;
  std::function<void(const std::string&, std::vector<std::string>&)> visit =
      [&](const std::string& v, std::vector<std::string>& path) {
        auto& m = mark[v];
        if (m == Mark::Done) return;
        path.push_back(v);
        if (m == Mark::Active) {
          std::string cycle;
          auto it = std::find(path.begin(), path.end(), v);
          for (; it != path.end(); ++it) cycle += (cycle.empty() ? "" : " -> ") + *it;
          throw SpecError(SpecError::Kind::UnguardedRecursion,
                          "unguarded recursion through " + cycle);
        }
        m = Mark::Active;
        for (const auto& w : unguarded[v]) visit(w, path);
        m = Mark::Done;
        path.pop_back();
      };
  for (const auto& [name, body] : decls_) {
    std::vector<std::string> path;
    visit(name, path);
  }
}

const ProtocolTerm& ProtocolSpec::unfold(const std::string& name) const {
  auto it = decls_.find(name);
  if (it == decls_.end())
    throw SpecError(SpecError::Kind::UnboundVariable, "unbound protocol variable '" + name + "'");
  return it->second;
}

std::set<Shape> ProtocolSpec::received_shapes() const {
  std::set<Shape> out;
  for (const auto& e : alphabet_)
    if (e.direction == Direction::Receive) out.insert(e.shape);
  return out;
}

std::ostream& operator<<(std::ostream& os, const ProtocolSpec& spec) {
  bool first = true;
  for (const auto& [name, body] : spec.declarations()) {
    os << (first ? "" : "\nand ") << name << " = " << body;
    first = false;
  }
  if (!first) os << '\n';
  return os << "in " << spec.root();
}

// ---------------------------------------------------------------------------
// Semantics

std::vector<Transition> successors(const ProtocolSpec& spec, const ProtocolTerm& term,
                                   const Event& event) {
  using K = ProtocolTerm::Kind;
  std::vector<Transition> out;
  switch (term.kind()) {
    case K::Inaction:
      break;
    case K::Std:
    case K::Contr:
      if (term.event() == event) out.push_back({term.continuation(), term.kind() == K::Contr});
      break;
    case K::Choice: {
      out = successors(spec, term.left(), event);
      auto rhs = successors(spec, term.right(), event);
      out.insert(out.end(), rhs.begin(), rhs.end());
      break;
    }
    case K::Var:
      out = successors(spec, spec.unfold(term.name()), event);
      break;
    case K::Product:
      for (auto& t : successors(spec, term.left(), event))
        out.push_back({ProtocolTerm::product(std::move(t.next), term.right()), false});
      for (auto& t : successors(spec, term.right(), event))
        out.push_back({ProtocolTerm::product(term.left(), std::move(t.next)), false});
      break;
    case K::Extend:
      for (auto& t : successors(spec, term.left(), event)) {
        if (t.contracted) {
          out.push_back({std::move(t.next), true});
        } else {
          out.push_back({ProtocolTerm::extend(std::move(t.next), term.right()), false});
        }
      }
      for (auto& t : successors(spec, term.right(), event))
        out.push_back({ProtocolTerm::extend(term.left(), std::move(t.next)), false});
      break;
  }
  return out;
}

StepOutcome step(const ProtocolSpec& spec, const ProtocolTerm& term, const Event& event,
                 StepPolicy policy) {
  auto moves = successors(spec, term, event);
  StepOutcome r;
  if (moves.empty()) return r;
  if (policy == StepPolicy::Strict && moves.size() > 1) {
    r.kind = StepOutcome::Kind::Ambiguous;
    r.count = moves.size();
    return r;
  }
  r.kind = StepOutcome::Kind::Progress;
  r.next = std::move(moves.front().next);
  r.contracted = moves.front().contracted;
  return r;
}

namespace {

void first_events(const ProtocolSpec& spec, const ProtocolTerm& t, std::set<Event>& out) {
  using K = ProtocolTerm::Kind;
  switch (t.kind()) {
    case K::Inaction:
      return;
    case K::Std:
    case K::Contr:
      out.insert(t.event());
      return;
    case K::Var:
      first_events(spec, spec.unfold(t.name()), out);
      return;
    default:
      first_events(spec, t.left(), out);
      first_events(spec, t.right(), out);
  }
}

void explore(const ProtocolSpec& spec, const ProtocolTerm& t, std::size_t remaining,
             Trace& prefix, std::set<Trace>& out) {
  out.insert(prefix);
  if (remaining == 0) return;
  for (const auto& e : spec.alphabet()) {
    for (const auto& move : successors(spec, t, e)) {
      prefix.push_back(e);
      explore(spec, move.next, remaining - 1, prefix, out);
      prefix.pop_back();
    }
  }
}

}  // namespace

std::set<Event> enabled_events(const ProtocolSpec& spec, const ProtocolTerm& term) {
  std::set<Event> out;
  first_events(spec, term, out);
  return out;
}

std::set<Trace> enumerate_traces(const ProtocolSpec& spec, const ProtocolTerm& from,
                                 std::size_t max_depth) {
  std::set<Trace> out;
  Trace prefix;
  explore(spec, from, max_depth, prefix, out);
  return out;
}

std::set<Trace> enumerate_traces(const ProtocolSpec& spec, std::size_t max_depth) {
  return enumerate_traces(spec, spec.root(), max_depth);
}

// ---------------------------------------------------------------------------
// LDAP

std::string_view ldap_protocol_text() {
  return R"(# LDAP directory server protocol, server perspective.
# Contractive BindRq/UnbindRq terminate any pending operations.
Base = ?UnbindRq!.0
     + ?BindRq!.!BindRes.Base
     + ?SearchRq.(Base |> Search)
     + ?ModRq.(Base |> !ModRes.0)
     + ?AddRq.(Base |> !AddRes.0)
     + ?DelRq.(Base |> !DelRes.0)
and
Search = !SearchEntry.Search + !SearchDone.0
in Base
)";
}

ProtocolSpec build_ldap_protocol() {
  using T = ProtocolTerm;
  const auto rx = [](const char* s) { return Event::receive(s); };
  const auto tx = [](const char* s) { return Event::transmit(s); };
  const T base = T::var("Base");
  const T search = T::var("Search");

  auto responding = [&](const char* rq, const char* res) {
    return T::std_prefix(rx(rq), T::extend(base, T::std_prefix(tx(res), T::inaction())));
  };

  T body = T::contr_prefix(rx("UnbindRq"), T::inaction());
  body = T::choice(body, T::contr_prefix(rx("BindRq"), T::std_prefix(tx("BindRes"), base)));
  body = T::choice(body, T::std_prefix(rx("SearchRq"), T::extend(base, search)));
  body = T::choice(body, responding("ModRq", "ModRes"));
  body = T::choice(body, responding("AddRq", "AddRes"));
  body = T::choice(body, responding("DelRq", "DelRes"));

  const T search_body =
      T::choice(T::std_prefix(tx("SearchEntry"), search), T::std_prefix(tx("SearchDone"), T::inaction()));

  return ProtocolSpec({{"Base", body}, {"Search", search_body}}, base);
}

}  // namespace svcemu
