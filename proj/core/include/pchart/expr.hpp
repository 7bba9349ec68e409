#pragma once

// Expression and transition-label language: guards, actions, invariants,
// timing triggers and costs. Grammar is documented in docs/grammar.md.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pchart/errors.hpp"
#include "pchart/rational.hpp"

namespace pchart {

enum class UnaryOp { Neg, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

std::string_view to_string(BinaryOp op);

// Immutable expression tree with structural equality. Copies share nodes.
class Expr {
 public:
  enum class Kind { IntLit, BoolLit, Var, Unary, Binary };

  static Expr int_lit(std::int64_t value);
  static Expr bool_lit(bool value);
  static Expr var(std::string name);
  static Expr unary(UnaryOp op, Expr arg);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  // Convenience builders used by the compiler.
  static Expr conj(std::span<const Expr> parts);  // `true` when empty
  static Expr disj(std::span<const Expr> parts);  // `false` when empty
  static Expr negate(Expr e);

  Kind kind() const;
  std::int64_t int_value() const;
  bool bool_value() const;
  const std::string& name() const;
  UnaryOp unary_op() const;
  BinaryOp binary_op() const;
  const Expr& arg() const;
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool is_true() const { return kind() == Kind::BoolLit && bool_value(); }
  bool is_false() const { return kind() == Kind::BoolLit && !bool_value(); }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Pretty-printer; parse_expr(to_string(e)) == e.
std::string to_string(const Expr& e);

// ---------------------------------------------------------------- types

struct VarType {
  enum class Kind { Bool, Int };
  Kind kind = Kind::Int;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static VarType boolean() { return {Kind::Bool, 0, 1}; }
  static VarType range(std::int64_t lo, std::int64_t hi) { return {Kind::Int, lo, hi}; }
  bool operator==(const VarType&) const = default;
};

enum class ExprType { Bool, Int };

using TypeEnv = std::map<std::string, VarType, std::less<>>;
using Value = std::variant<std::int64_t, bool>;
using Valuation = std::map<std::string, Value, std::less<>>;

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found);
  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

class TypeError : public Error {
 public:
  TypeError(const std::string& node, ExprType expected, ExprType found);
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& name)
      : Error("UnknownVariable", "unknown variable '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

Expr parse_expr(std::string_view text);
ExprType typecheck(const Expr& e, const TypeEnv& env);
Value eval(const Expr& e, const Valuation& v);

// Floored integer division and modulo; both throw EvalError for a zero divisor.
std::int64_t floor_div(std::int64_t a, std::int64_t b);
std::int64_t floor_mod(std::int64_t a, std::int64_t b);

bool is_reserved_word(std::string_view word);
bool is_identifier(std::string_view word);

// Free variables in first-occurrence order.
std::vector<std::string> free_variables(const Expr& e);
// Replaces variables by name; names absent from the map are kept.
Expr rename_variables(const Expr& e, const std::map<std::string, std::string, std::less<>>& renaming);
// Evaluates a variable-free expression.
Value eval_constant(const Expr& e);

// Expression lowered to a stack program over integer slots (bools are 0/1),
// used on the hot paths of interpretation and state-space construction.
class SlotExpr {
 public:
  SlotExpr() = default;
  // `slot_of` maps names to indices; unknown names throw UnknownVariable.
  SlotExpr(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of);

  std::int64_t eval(std::span<const std::int64_t> values) const;
  bool holds(std::span<const std::int64_t> values) const { return eval(values) != 0; }

 private:
  enum class Op : std::uint8_t { Push, Load, Neg, Not, Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
  struct Instr {
    Op op;
    std::int64_t arg;
  };
  void emit(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of);
  std::vector<Instr> code_;
};

// ---------------------------------------------------------------- labels

struct Trigger {
  enum class Kind { Event, After, AfterNondet, AfterUniform, AfterExponential };
  Kind kind = Kind::Event;
  std::string event;     // Event
  std::int64_t lo = 0;   // After: n; intervals: lower bound
  std::int64_t hi = 0;   // After: n; intervals: upper bound
  Rational rate;         // AfterExponential

  static Trigger on_event(std::string name) { return {Kind::Event, std::move(name), 0, 0, {}}; }
  static Trigger after(std::int64_t n) { return {Kind::After, {}, n, n, {}}; }
  static Trigger after_nondet(std::int64_t lo, std::int64_t hi) { return {Kind::AfterNondet, {}, lo, hi, {}}; }
  static Trigger after_uniform(std::int64_t lo, std::int64_t hi) { return {Kind::AfterUniform, {}, lo, hi, {}}; }
  static Trigger after_exponential(Rational rate) { return {Kind::AfterExponential, {}, 0, 0, rate}; }

  bool is_timed() const { return kind != Kind::Event; }
  bool operator==(const Trigger&) const = default;
};

struct Assignment {
  std::string target;
  Expr value;
  bool operator==(const Assignment&) const = default;
};

struct TransitionLabel {
  Trigger trigger;
  std::optional<Expr> guard;
  std::vector<Assignment> actions;
  std::optional<Rational> cost;
  bool operator==(const TransitionLabel&) const = default;
};

// `trigger [guard] / a1, a2 $ cost`
TransitionLabel parse_label(std::string_view text);
// `x := e, y := f` (may be empty text)
std::vector<Assignment> parse_actions(std::string_view text);
// `name : bool = e` or `name : lo..hi = e`
struct VarDeclSyntax {
  std::string name;
  VarType type;
  Expr init;
};
VarDeclSyntax parse_var_decl(std::string_view text);

std::string to_string(const Trigger& t);
std::string to_string(const TransitionLabel& l);
std::string to_string(std::span<const Assignment> actions);

}  // namespace pchart
