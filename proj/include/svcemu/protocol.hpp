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

// Protocol algebra: interaction terms with choice, product (independent
// parallelism) and extension (subservient parallelism), recursive
// declarations, and a small-step semantics used for conformance checking.
//
// Operational rules (after normalising Product(0,P)=P, Product(P,0)=P and
// Extend(B,0)=B):
//   Std(e,P)   --e--> P
//   Contr(e,P) --e--> P, with the contracted flag raised
//   Choice     takes e in whichever operand enables it, drops the other
//   Var        unfolds once, then steps
//   Product    steps one side; the contracted flag stops here
//   Extend(B,E)
//     E --e--> E'                   gives Extend(B,E')
//     B --e--> B' (not contracted)  gives Extend(B',E)
//     B --e--> B' (contracted)      gives B', E is discarded and the flag
//                                   keeps propagating outwards
// When several branches apply, first-match prefers the left/base operand.

#ifndef SVCEMU_PROTOCOL_HPP_
#define SVCEMU_PROTOCOL_HPP_

#include <cstddef>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "svcemu/message.hpp"

namespace svcemu {

/// Direction from the modelled service's point of view.
enum class Direction { Receive, Transmit };

struct Event {
  Direction direction;
  Shape shape;

  static Event receive(std::string shape) { return {Direction::Receive, Shape(std::move(shape))}; }
  static Event transmit(std::string shape) { return {Direction::Transmit, Shape(std::move(shape))}; }

  friend bool operator==(const Event&, const Event&) = default;
  friend auto operator<=>(const Event&, const Event&) = default;
};

std::ostream& operator<<(std::ostream& os, const Event& e);
std::string to_string(const Event& e);

using Trace = std::vector<Event>;

class SpecError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnboundVariable, UnguardedRecursion, InvalidChoice };

  SpecError(Kind kind, const std::string& what, int line = 0, int column = 0);

  Kind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

/// Immutable protocol term. Cheap to copy; subterms are shared.
class ProtocolTerm {
 public:
  enum class Kind { Inaction, Std, Contr, Choice, Product, Extend, Var };

  /// Defaults to inaction.
  ProtocolTerm();

  static ProtocolTerm inaction();
  static ProtocolTerm std_prefix(Event event, ProtocolTerm continuation);
  static ProtocolTerm contr_prefix(Event event, ProtocolTerm continuation);
  /// Throws SpecError(InvalidChoice) unless both operands are interaction
  /// terms (Std, Contr or Choice).
  static ProtocolTerm choice(ProtocolTerm left, ProtocolTerm right);
  static ProtocolTerm product(ProtocolTerm p1, ProtocolTerm p2);
  static ProtocolTerm extend(ProtocolTerm base, ProtocolTerm extension);
  static ProtocolTerm var(std::string name);

  Kind kind() const noexcept;
  bool is_inaction() const noexcept { return kind() == Kind::Inaction; }
  bool is_interaction() const noexcept;

  // Valid for Std/Contr.
  const Event& event() const;
  const ProtocolTerm& continuation() const;
  // Valid for Choice/Product/Extend (base = left, extension = right).
  const ProtocolTerm& left() const;
  const ProtocolTerm& right() const;
  // Valid for Var.
  const std::string& name() const;

  friend bool operator==(const ProtocolTerm& a, const ProtocolTerm& b);

 private:
  struct Node;
  explicit ProtocolTerm(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Prints in the protocol DSL syntax.
std::ostream& operator<<(std::ostream& os, const ProtocolTerm& t);
std::string to_string(const ProtocolTerm& t);

/// Closed, guarded set of recursive declarations plus a root term.
class ProtocolSpec {
 public:
  /// Validates closedness and guardedness; throws SpecError.
  ProtocolSpec(std::map<std::string, ProtocolTerm> declarations, ProtocolTerm root);

  const std::map<std::string, ProtocolTerm>& declarations() const noexcept { return decls_; }
  const ProtocolTerm& root() const noexcept { return root_; }

  /// Body of `name`; throws SpecError(UnboundVariable).
  const ProtocolTerm& unfold(const std::string& name) const;

  /// Every event occurring syntactically in the root or a declaration.
  const std::set<Event>& alphabet() const noexcept { return alphabet_; }
  /// Shapes of all receive events; these need dispatch bindings.
  std::set<Shape> received_shapes() const;

  friend bool operator==(const ProtocolSpec& a, const ProtocolSpec& b) {
    return a.decls_ == b.decls_ && a.root_ == b.root_;
  }

 private:
  std::map<std::string, ProtocolTerm> decls_;
  ProtocolTerm root_;
  std::set<Event> alphabet_;
};

std::ostream& operator<<(std::ostream& os, const ProtocolSpec& spec);

struct Transition {
  ProtocolTerm next;
  bool contracted = false;
};

enum class StepPolicy { FirstMatch, Strict };

struct StepOutcome {
  enum class Kind { Progress, NoTransition, Ambiguous };
  Kind kind = Kind::NoTransition;
  ProtocolTerm next;        // Progress only
  bool contracted = false;  // Progress only
  std::size_t count = 0;    // Ambiguous only: number of enabled branches

  bool progressed() const noexcept { return kind == Kind::Progress; }
};

/// All transitions of `term` on `event`, leftmost/base-first.
std::vector<Transition> successors(const ProtocolSpec& spec, const ProtocolTerm& term,
                                   const Event& event);

StepOutcome step(const ProtocolSpec& spec, const ProtocolTerm& term, const Event& event,
                 StepPolicy policy = StepPolicy::FirstMatch);

/// Events with at least one transition from `term`, computed structurally.
std::set<Event> enabled_events(const ProtocolSpec& spec, const ProtocolTerm& term);

/// Every event sequence of length <= max_depth reachable from `from`,
/// exploring all branches (including ambiguous alternatives).
std::set<Trace> enumerate_traces(const ProtocolSpec& spec, const ProtocolTerm& from,
                                 std::size_t max_depth);
std::set<Trace> enumerate_traces(const ProtocolSpec& spec, std::size_t max_depth);

/// Parses the protocol DSL:
///   Spec := [Decl ("and" Decl)*] "in" Term
///   Decl := NAME "=" Term
///   Term := Term "x" Term | Term "|>" Term | Term "+" Term
///         | ("?"|"!") SHAPE ["!"] "." Term | NAME | "0" | "(" Term ")"
/// Precedence (tightest first): prefix, "+", "|>", "x". "#" starts a comment.
ProtocolSpec parse_protocol(std::string_view text);

/// The LDAP directory server protocol.
ProtocolSpec build_ldap_protocol();

/// DSL text equivalent to build_ldap_protocol().
std::string_view ldap_protocol_text();

}  // namespace svcemu

#endif  // SVCEMU_PROTOCOL_HPP_
