#pragma once

// The pChart document: state tree, variables, transitions, queries and
// editor geometry, plus its `.pchart` JSON format and structural validation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pchart/errors.hpp"
#include "pchart/expr.hpp"
#include "pchart/rational.hpp"

namespace pchart {

using StateId = std::int64_t;
using TransId = std::int64_t;
using PseudoId = std::int64_t;

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

struct Rect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  Point center() const { return {x + w / 2, y + h / 2}; }
  bool operator==(const Rect&) const = default;
};

// Open-interior overlap: touching edges do not count.
bool overlaps(const Rect& a, const Rect& b);
bool contains(const Rect& outer, const Rect& inner);
bool contains(const Rect& r, Point p);

enum class StateKind { Basic, Xor, And };
std::string_view to_string(StateKind k);

struct VarDecl {
  std::string name;
  VarType type;
  Expr init = Expr::int_lit(0);
  std::optional<std::string> comment;
  bool operator==(const VarDecl&) const = default;
};

struct State {
  StateId id = 0;
  std::string name;
  StateKind kind = StateKind::Basic;
  std::vector<StateId> children;
  std::optional<StateId> initial;
  std::vector<VarDecl> variables;
  std::optional<Expr> invariant;
  std::optional<Rational> cost_rate;
  std::optional<std::string> comment;
  Rect box;
  bool operator==(const State&) const = default;
};

struct Branch;

// One transition body: a target state, or a probabilistic / conditional
// pseudo-state splitting into further connections.
struct TransitionTree {
  enum class Kind { Goto, Prob, Cond };
  Kind kind = Kind::Goto;

  // Goto
  StateId target = 0;
  std::vector<Assignment> actions;
  Rational cost;
  std::vector<Point> waypoints;

  // Prob / Cond
  PseudoId node = 0;
  Point at;
  std::vector<Branch> branches;
  std::vector<TransitionTree> otherwise;  // Cond else branch, zero or one element

  static TransitionTree go(StateId target, std::vector<Assignment> actions = {}, Rational cost = {});
  bool has_else() const { return !otherwise.empty(); }
};

struct Branch {
  Rational prob;               // Prob
  std::optional<Expr> guard;   // Cond
  TransitionTree tree;
};

bool operator==(const TransitionTree& a, const TransitionTree& b);
bool operator==(const Branch& a, const Branch& b);

struct Transition {
  TransId id = 0;
  StateId source = 0;
  Trigger trigger;
  std::optional<Expr> guard;
  TransitionTree body;
  std::optional<std::string> comment;
  bool operator==(const Transition&) const = default;
};

enum class QueryKind { Pmin, Pmax, Emin, Emax };
std::string_view to_string(QueryKind k);
std::optional<QueryKind> parse_query_kind(std::string_view s);

struct Query {
  std::int64_t id = 0;
  QueryKind kind = QueryKind::Pmax;
  StateId target = 0;
  StateId attached_to = 0;
  bool operator==(const Query&) const = default;
};

struct Chart {
  std::string name;
  StateId root = 0;
  std::map<StateId, State> states;
  std::map<TransId, Transition> transitions;
  std::vector<Query> queries;
  std::int64_t next_id = 1;
  // Manually positioned connection labels, keyed by connection id.
  std::map<std::string, Rect> manual_labels;

  bool operator==(const Chart&) const = default;

  const State& state(StateId id) const;
  State& state(StateId id);
  bool has_state(StateId id) const { return states.count(id) != 0; }

  // Structural helpers; they assume a valid tree.
  std::optional<StateId> parent(StateId id) const;
  std::vector<StateId> path_from_root(StateId id) const;  // root first, id last
  int depth(StateId id) const;
  bool is_ancestor(StateId ancestor, StateId of) const;    // strict
  std::vector<StateId> preorder() const;
  std::optional<StateId> find_state(std::string_view name_or_path) const;
  std::string qualified_name(StateId id) const;           // root.A.B
  std::int64_t allocate_id() { return next_id++; }
};

// ---------------------------------------------------------------- errors

class JsonSyntax : public Error {
 public:
  JsonSyntax(std::size_t line, std::size_t col, const std::string& detail);
  std::size_t line() const noexcept { return line_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t line_, col_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string path, const std::string& reason);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string object_id;  // "s3", "t7", "p9", "q2", "c7", or "chart"
  std::string message;
  std::string rule;
};

std::string to_string(const Diagnostic& d);

class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(std::vector<Diagnostic> diagnostics);
  const std::string& object_id() const { return diagnostics_.front().object_id; }
  const std::string& rule() const { return diagnostics_.front().rule; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// ---------------------------------------------------------------- operations

// Parses and validates; throws JsonSyntax, SchemaViolation or InvariantViolation.
Chart parse_chart(std::string_view text);
// Parses without running validate().
Chart parse_chart_unchecked(std::string_view text);
// Canonical, deterministic document (sorted keys, sorted ids, LF endings).
std::string serialize_chart(const Chart& chart);

// Transition from its label text and document-format body; a goto body takes
// actions and cost from the label. Throws SyntaxError or SchemaViolation.
Transition make_transition(TransId id, StateId source, std::string_view label, const nlohmann::json& body);
// Label text as stored in the document.
std::string label_text(const Transition& t);
nlohmann::json body_json(const TransitionTree& body);

std::vector<Diagnostic> validate(const Chart& chart);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

// Conjunction of the invariants of `s` and its ancestors, outermost first.
Expr accumulated_invariant(const Chart& chart, StateId s);
// Variables visible in `s`: its own and its ancestors'.
TypeEnv scope_env(const Chart& chart, StateId s);

// ---------------------------------------------------------------- connections

// One drawn edge of a transition: source state or pseudo-state to a state or
// pseudo-state. Ids: "c<transId>" for the first connection of a transition,
// "c<pseudoId>.<branchIndex>" for branches (the else branch has the last index).
struct Connection {
  std::string id;
  TransId transition = 0;
  StateId from_state = 0;                 // valid when from_pseudo is empty
  std::optional<PseudoId> from_pseudo;
  StateId to_state = 0;
  std::optional<PseudoId> to_pseudo;
  std::vector<Point> waypoints;
  std::string label;
};

struct PseudoNode {
  PseudoId id = 0;
  TransId transition = 0;
  bool probabilistic = true;
  Point at;
};

std::vector<Connection> connections(const Chart& chart);
std::vector<PseudoNode> pseudo_nodes(const Chart& chart);

inline std::string state_object_id(StateId id) { return "s" + std::to_string(id); }
inline std::string transition_object_id(TransId id) { return "t" + std::to_string(id); }
inline std::string pseudo_object_id(PseudoId id) { return "p" + std::to_string(id); }

}  // namespace pchart
