#include <functional>
#include <random>

#include <doctest.h>

#include "pchart/expr.hpp"

using namespace pchart;

namespace {

std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
bool as_bool(const Value& v) { return std::get<bool>(v); }

// Big-step reference evaluator; nullopt for a zero divisor.
std::optional<Value> reference_eval(const Expr& e, const Valuation& env) {
  switch (e.kind()) {
    case Expr::Kind::IntLit: return Value(e.int_value());
    case Expr::Kind::BoolLit: return Value(e.bool_value());
    case Expr::Kind::Var: return env.at(e.name());
    case Expr::Kind::Unary: {
      auto a = reference_eval(e.arg(), env);
      if (!a) return std::nullopt;
      if (e.unary_op() == UnaryOp::Neg) return Value(-as_int(*a));
      return Value(!as_bool(*a));
    }
    case Expr::Kind::Binary: break;
  }
  auto l = reference_eval(e.lhs(), env);
  if (!l) return std::nullopt;
  BinaryOp op = e.binary_op();
  if (op == BinaryOp::And && !as_bool(*l)) return Value(false);
  if (op == BinaryOp::Or && as_bool(*l)) return Value(true);
  auto r = reference_eval(e.rhs(), env);
  if (!r) return std::nullopt;
  switch (op) {
    case BinaryOp::And:
    case BinaryOp::Or: return Value(as_bool(*r));
    case BinaryOp::Eq: return Value(*l == *r);
    case BinaryOp::Ne: return Value(*l != *r);
    default: break;
  }
  std::int64_t a = as_int(*l), b = as_int(*r);
  switch (op) {
    case BinaryOp::Add: return Value(a + b);
    case BinaryOp::Sub: return Value(a - b);
    case BinaryOp::Mul: return Value(a * b);
    case BinaryOp::Div:
    case BinaryOp::Mod: {
      if (b == 0) return std::nullopt;
      std::int64_t q = a / b;
      if (a % b != 0 && ((a < 0) != (b < 0))) --q;
      return op == BinaryOp::Div ? Value(q) : Value(a - q * b);
    }
    case BinaryOp::Lt: return Value(a < b);
    case BinaryOp::Le: return Value(a <= b);
    case BinaryOp::Gt: return Value(a > b);
    case BinaryOp::Ge: return Value(a >= b);
    default: return std::nullopt;
  }
}

struct Gen {
  std::mt19937_64 rng;
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  Expr integer(int depth) {
    if (depth == 0 || pick(4) == 0) {
      switch (pick(3)) {
        case 0: return Expr::int_lit(pick(11) - 5);
        case 1: return Expr::var("x");
        default: return Expr::var("y");
      }
    }
    if (pick(6) == 0) return Expr::unary(UnaryOp::Neg, integer(depth - 1));
    static const BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Mod};
    return Expr::binary(ops[pick(5)], integer(depth - 1), integer(depth - 1));
  }

  Expr boolean(int depth) {
    if (depth == 0 || pick(5) == 0) return pick(2) ? Expr::var("b") : Expr::bool_lit(pick(2) == 1);
    switch (pick(4)) {
      case 0: return Expr::unary(UnaryOp::Not, boolean(depth - 1));
      case 1: return Expr::binary(pick(2) ? BinaryOp::And : BinaryOp::Or, boolean(depth - 1), boolean(depth - 1));
      case 2: return Expr::binary(pick(2) ? BinaryOp::Eq : BinaryOp::Ne, boolean(depth - 1), boolean(depth - 1));
      default: {
        static const BinaryOp cmp[] = {BinaryOp::Eq, BinaryOp::Ne, BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge};
        return Expr::binary(cmp[pick(6)], integer(depth - 1), integer(depth - 1));
      }
    }
  }
};

const TypeEnv kEnv{{"x", VarType::range(0, 3)}, {"y", VarType::range(-2, 2)}, {"b", VarType::boolean()}};

}  // namespace

TEST_CASE("precedence") {
  Expr e = parse_expr("x + 1 <= 3 and not b");
  Expr want = Expr::binary(
      BinaryOp::And,
      Expr::binary(BinaryOp::Le, Expr::binary(BinaryOp::Add, Expr::var("x"), Expr::int_lit(1)), Expr::int_lit(3)),
      Expr::unary(UnaryOp::Not, Expr::var("b")));
  CHECK(e == want);
  CHECK(as_int(eval_constant(parse_expr("7 mod 3"))) == 1);
  CHECK(as_int(eval_constant(parse_expr("2 + 3 * 4"))) == 14);
  CHECK(as_int(eval_constant(parse_expr("10 - 4 - 3"))) == 3);
}

TEST_CASE("syntax errors") {
  CHECK_THROWS_AS(parse_expr("x < y < z"), SyntaxError);
  CHECK_THROWS_AS(parse_expr("x +"), SyntaxError);
  CHECK_THROWS_AS(parse_expr("(x"), SyntaxError);
  CHECK_THROWS_AS(parse_expr("and"), SyntaxError);
  CHECK_THROWS_AS(parse_label("uniform [1,0]"), SyntaxError);
  CHECK_THROWS_AS(parse_label("E [x<"), SyntaxError);
  try {
    parse_expr("x + ");
    FAIL("no error");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 4);
    CHECK_FALSE(e.expected().empty());
  }
}

TEST_CASE("typecheck") {
  CHECK(typecheck(parse_expr("x + 1"), kEnv) == ExprType::Int);
  CHECK(typecheck(parse_expr("x < 2 or b"), kEnv) == ExprType::Bool);
  CHECK_THROWS_AS(typecheck(parse_expr("x and true"), kEnv), TypeError);
  CHECK_THROWS_AS(typecheck(parse_expr("y"), TypeEnv{}), UnknownVariable);
  CHECK_THROWS_AS(typecheck(parse_expr("b + 1"), kEnv), TypeError);
}

TEST_CASE("evaluation") {
  CHECK(as_int(eval(parse_expr("(-7) div 2"), {})) == -4);
  CHECK(as_int(eval(parse_expr("(-7) mod 2"), {})) == 1);
  CHECK(as_int(eval(parse_expr("x*x"), {{"x", std::int64_t{3}}})) == 9);
  CHECK_THROWS_AS(eval(parse_expr("1 div 0"), {}), EvalError);
  CHECK_THROWS_AS(eval(parse_expr("1 mod 0"), {}), EvalError);
  CHECK(floor_div(7, -2) == -4);
  CHECK(floor_mod(7, -2) == -1);
}

TEST_CASE("identifiers and reserved words") {
  for (const char* w : {"and", "or", "not", "div", "mod", "true", "false", "after", "uniform", "exp"}) {
    CHECK(is_reserved_word(w));
    CHECK_FALSE(is_identifier(w));
  }
  CHECK(is_identifier("_x1"));
  CHECK_FALSE(is_identifier("1x"));
  CHECK(free_variables(parse_expr("y + x * y")) == std::vector<std::string>{"y", "x"});
  CHECK(rename_variables(parse_expr("x + y"), {{"x", "z"}}) == parse_expr("z + y"));
}

TEST_CASE("labels") {
  TransitionLabel l = parse_label("E [x < 3] / x := x + 1 $ 2");
  CHECK(l.trigger == Trigger::on_event("E"));
  REQUIRE(l.guard);
  CHECK(*l.guard == parse_expr("x < 3"));
  REQUIRE(l.actions.size() == 1);
  CHECK(l.actions[0].target == "x");
  CHECK(l.actions[0].value == parse_expr("x + 1"));
  CHECK(l.cost == Rational(2));

  TransitionLabel n = parse_label("after [2,5]");
  CHECK(n.trigger == Trigger::after_nondet(2, 5));
  CHECK_FALSE(n.guard);
  CHECK(n.actions.empty());
  CHECK_FALSE(n.cost);

  CHECK(parse_label("after 3").trigger == Trigger::after(3));
  CHECK(parse_label("uniform [1, 4]").trigger == Trigger::after_uniform(1, 4));
  CHECK(parse_label("exp 1/2").trigger == Trigger::after_exponential(Rational(1, 2)));
  CHECK(parse_actions("").empty());
  CHECK(parse_actions("x := 1, y := x").size() == 2);

  for (const char* text : {"E", "E [x < 3] / x := x + 1 $ 2", "after [2, 5]", "tick / x := 0, y := 1",
                           "uniform [1, 3] $ 1/2"})
    CHECK(parse_label(to_string(parse_label(text))) == parse_label(text));
}

TEST_CASE("variable declarations") {
  VarDeclSyntax d = parse_var_decl("x : 0..9 = 2");
  CHECK(d.name == "x");
  CHECK(d.type == VarType::range(0, 9));
  CHECK(d.init == Expr::int_lit(2));
  CHECK(parse_var_decl("on : bool = false").type == VarType::boolean());
  CHECK_THROWS_AS(parse_var_decl("x : 5..1 = 0"), SyntaxError);
}

TEST_CASE("property: print then parse is the identity") {
  Gen g{std::mt19937_64(11)};
  for (int i = 0; i < 2000; ++i) {
    Expr e = i % 2 ? g.boolean(4) : g.integer(4);
    CHECK_MESSAGE(parse_expr(to_string(e)) == e, to_string(e));
  }
}

TEST_CASE("property: eval and slot programs agree with the reference evaluator") {
  Gen g{std::mt19937_64(12)};
  std::vector<std::string> names{"x", "y", "b"};
  auto slot_of = [&](std::string_view n) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return i;
    return std::nullopt;
  };
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Expr e = i % 2 ? g.boolean(4) : g.integer(4);
    ExprType t = typecheck(e, kEnv);
    SlotExpr se(e, slot_of);
    for (std::int64_t x = 0; x <= 3; ++x)
      for (std::int64_t y = -2; y <= 2; ++y)
        for (int b = 0; b < 2; ++b) {
          Valuation env{{"x", x}, {"y", y}, {"b", b == 1}};
          auto want = reference_eval(e, env);
          std::int64_t slots[] = {x, y, b};
          if (!want) {
            CHECK_THROWS_AS(eval(e, env), EvalError);
            CHECK_THROWS_AS(se.eval(slots), EvalError);
            continue;
          }
          Value got = eval(e, env);
          CHECK(got == *want);
          std::int64_t flat = t == ExprType::Bool ? (as_bool(got) ? 1 : 0) : as_int(got);
          CHECK(se.eval(slots) == flat);
          ++checked;
        }
  }
  CHECK(checked > 1000);
}
