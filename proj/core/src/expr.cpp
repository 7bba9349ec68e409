#include "pchart/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <set>
#include <sstream>

namespace pchart {

struct Expr::Node {
  Kind kind;
  std::int64_t value = 0;  // IntLit / BoolLit
  std::string name;        // Var
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  std::optional<Expr> a;
  std::optional<Expr> b;
};

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "div";
    case BinaryOp::Mod: return "mod";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "/=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
  }
  return "?";
}

Expr Expr::int_lit(std::int64_t value) {
  return Expr(std::make_shared<const Node>(Node{Kind::IntLit, value, {}, {}, {}, {}, {}}));
}

Expr Expr::bool_lit(bool value) {
  return Expr(std::make_shared<const Node>(Node{Kind::BoolLit, value ? 1 : 0, {}, {}, {}, {}, {}}));
}

Expr Expr::var(std::string name) {
  return Expr(std::make_shared<const Node>(Node{Kind::Var, 0, std::move(name), {}, {}, {}, {}}));
}

Expr Expr::unary(UnaryOp op, Expr arg) {
  // Negative literals have a single representation: IntLit(-n).
  if (op == UnaryOp::Neg && arg.kind() == Kind::IntLit && arg.int_value() != INT64_MIN)
    return int_lit(-arg.int_value());
  return Expr(std::make_shared<const Node>(Node{Kind::Unary, 0, {}, op, {}, std::move(arg), {}}));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Kind::Binary, 0, {}, {}, op, std::move(lhs), std::move(rhs)}));
}

Expr Expr::conj(std::span<const Expr> parts) {
  std::optional<Expr> acc;
  for (const auto& p : parts) {
    if (p.is_true()) continue;
    acc = acc ? binary(BinaryOp::And, *acc, p) : p;
  }
  return acc ? *acc : bool_lit(true);
}

Expr Expr::disj(std::span<const Expr> parts) {
  std::optional<Expr> acc;
  for (const auto& p : parts) {
    if (p.is_false()) continue;
    acc = acc ? binary(BinaryOp::Or, *acc, p) : p;
  }
  return acc ? *acc : bool_lit(false);
}

Expr Expr::negate(Expr e) {
  if (e.kind() == Kind::BoolLit) return bool_lit(!e.bool_value());
  if (e.kind() == Kind::Unary && e.unary_op() == UnaryOp::Not) return e.arg();
  return unary(UnaryOp::Not, std::move(e));
}

Expr::Kind Expr::kind() const { return node_->kind; }
std::int64_t Expr::int_value() const { return node_->value; }
bool Expr::bool_value() const { return node_->value != 0; }
const std::string& Expr::name() const { return node_->name; }
UnaryOp Expr::unary_op() const { return node_->uop; }
BinaryOp Expr::binary_op() const { return node_->bop; }
const Expr& Expr::arg() const { return *node_->a; }
const Expr& Expr::lhs() const { return *node_->a; }
const Expr& Expr::rhs() const { return *node_->b; }

bool operator==(const Expr& x, const Expr& y) {
  if (x.node_ == y.node_) return true;
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case Expr::Kind::IntLit:
    case Expr::Kind::BoolLit: return x.node_->value == y.node_->value;
    case Expr::Kind::Var: return x.name() == y.name();
    case Expr::Kind::Unary: return x.unary_op() == y.unary_op() && x.arg() == y.arg();
    case Expr::Kind::Binary:
      return x.binary_op() == y.binary_op() && x.lhs() == y.lhs() && x.rhs() == y.rhs();
  }
  return false;
}

// ---------------------------------------------------------------- printing

namespace {

enum Prec { kOr = 1, kAnd = 2, kNot = 3, kCmp = 4, kAdd = 5, kMul = 6, kNeg = 7, kAtom = 8 };

int prec_of(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kOr;
    case BinaryOp::And: return kAnd;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return kCmp;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kAdd;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return kMul;
  }
  return kAtom;
}

int prec_of(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Binary: return prec_of(e.binary_op());
    case Expr::Kind::Unary: return e.unary_op() == UnaryOp::Not ? kNot : kNeg;
    default: return kAtom;
  }
}

bool is_logical(BinaryOp op) { return op == BinaryOp::And || op == BinaryOp::Or; }

void print(std::ostringstream& out, const Expr& e);

void print_child(std::ostringstream& out, const Expr& child, bool parens) {
  if (parens) out << '(';
  print(out, child);
  if (parens) out << ')';
}

bool needs_parens(BinaryOp parent, const Expr& child, bool right) {
  int pp = prec_of(parent);
  int cp = prec_of(child);
  if (cp < pp) return true;
  if (is_logical(parent) && child.kind() == Expr::Kind::Binary) {
    // keep `a and b and c` flat, bracket everything else under a connective
    if (child.binary_op() == parent && !right) return false;
    return true;
  }
  if (cp == pp && (right || pp == kCmp)) return true;
  return false;
}

void print(std::ostringstream& out, const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::IntLit: out << e.int_value(); break;
    case Expr::Kind::BoolLit: out << (e.bool_value() ? "true" : "false"); break;
    case Expr::Kind::Var: out << e.name(); break;
    case Expr::Kind::Unary: {
      const Expr& a = e.arg();
      if (e.unary_op() == UnaryOp::Not) {
        out << "not ";
        print_child(out, a, a.kind() == Expr::Kind::Binary && prec_of(a) <= kCmp);
      } else {
        out << '-';
        print_child(out, a, a.kind() == Expr::Kind::Binary || a.kind() == Expr::Kind::Unary ||
                                (a.kind() == Expr::Kind::IntLit && a.int_value() < 0));
      }
      break;
    }
    case Expr::Kind::Binary:
      print_child(out, e.lhs(), needs_parens(e.binary_op(), e.lhs(), false));
      out << ' ' << to_string(e.binary_op()) << ' ';
      print_child(out, e.rhs(), needs_parens(e.binary_op(), e.rhs(), true));
      break;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream out;
  print(out, e);
  return out.str();
}

// ---------------------------------------------------------------- errors

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string_view type_name(ExprType t) { return t == ExprType::Bool ? "bool" : "int"; }

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found)
    : Error("SyntaxError", "syntax error at " + std::to_string(position) + ": expected " + join(expected, " or ") +
                               ", found " + found),
      position_(position),
      expected_(std::move(expected)) {}

TypeError::TypeError(const std::string& node, ExprType expected, ExprType found)
    : Error("TypeError", "type error in '" + node + "': expected " + std::string(type_name(expected)) +
                             ", found " + std::string(type_name(found))) {}

// ---------------------------------------------------------------- lexer

namespace {

constexpr std::array<std::string_view, 10> kReserved = {"and", "or",    "not",     "div", "mod",
                                                        "true", "false", "after", "uniform", "exp"};

enum class Tok {
  End, Int, Ident, Keyword, LParen, RParen, LBrack, RBrack, Comma, Slash, Assign, Colon, Dollar,
  Plus, Minus, Star, Eq, Ne, Lt, Le, Gt, Ge, Dot, DotDot
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({Tok::Int, std::string(s.substr(start, i - start)), start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      std::string word(s.substr(start, i - start));
      Tok k = is_reserved_word(word) ? Tok::Keyword : Tok::Ident;
      out.push_back({k, std::move(word), start});
      continue;
    }
    auto two = s.substr(i, 2);
    auto push2 = [&](Tok k) {
      out.push_back({k, std::string(two), start});
      i += 2;
    };
    if (two == ":=") { push2(Tok::Assign); continue; }
    if (two == "..") { push2(Tok::DotDot); continue; }
    if (two == "/=") { push2(Tok::Ne); continue; }
    if (two == "<=") { push2(Tok::Le); continue; }
    if (two == ">=") { push2(Tok::Ge); continue; }
    Tok k;
    switch (c) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '[': k = Tok::LBrack; break;
      case ']': k = Tok::RBrack; break;
      case ',': k = Tok::Comma; break;
      case '/': k = Tok::Slash; break;
      case ':': k = Tok::Colon; break;
      case '$': k = Tok::Dollar; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '=': k = Tok::Eq; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '.': k = Tok::Dot; break;
      default: throw SyntaxError(start, {"token"}, "'" + std::string(1, c) + "'");
    }
    out.push_back({k, std::string(1, c), start});
    ++i;
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_keyword(std::string_view w) const { return at(Tok::Keyword) && peek().text == w; }

  Token take() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(peek().pos, std::move(expected), describe(peek()));
  }

  Token expect(Tok k, const char* what) {
    if (!at(k)) fail({what});
    return take();
  }

  void expect_keyword(std::string_view w) {
    if (!at_keyword(w)) fail({"'" + std::string(w) + "'"});
    take();
  }

  void expect_end() {
    if (!at(Tok::End)) fail({"end of input"});
  }

  std::int64_t integer() {
    Token t = expect(Tok::Int, "integer");
    std::int64_t v = 0;
    for (char c : t.text) {
      if (__builtin_mul_overflow(v, 10, &v) || __builtin_add_overflow(v, c - '0', &v))
        throw SyntaxError(t.pos, {"integer literal in range"}, describe(t));
    }
    return v;
  }

  std::int64_t signed_integer() {
    bool neg = false;
    if (at(Tok::Minus)) {
      take();
      neg = true;
    }
    std::int64_t v = integer();
    return neg ? -v : v;
  }

  // INT ('/' INT | '.' INT)?
  Rational rational() {
    std::size_t pos = peek().pos;
    bool neg = false;
    if (at(Tok::Minus)) {
      take();
      neg = true;
    }
    Token whole = expect(Tok::Int, "number");
    std::string text = (neg ? "-" : "") + whole.text;
    if (at(Tok::Slash) && peek(1).kind == Tok::Int) {
      take();
      text += "/" + take().text;
    } else if (at(Tok::Dot) && peek(1).kind == Tok::Int) {
      take();
      text += "." + take().text;
    }
    try {
      return Rational::parse(text);
    } catch (const std::exception&) {
      throw SyntaxError(pos, {"rational number"}, "'" + text + "'");
    }
  }

  Expr expr() { return disjunction(); }

  Expr disjunction() {
    Expr e = conjunction();
    while (at_keyword("or")) {
      take();
      e = Expr::binary(BinaryOp::Or, e, conjunction());
    }
    return e;
  }

  Expr conjunction() {
    Expr e = negation();
    while (at_keyword("and")) {
      take();
      e = Expr::binary(BinaryOp::And, e, negation());
    }
    return e;
  }

  Expr negation() {
    if (at_keyword("not")) {
      take();
      return Expr::unary(UnaryOp::Not, negation());
    }
    return comparison();
  }

  static std::optional<BinaryOp> relop(Tok k) {
    switch (k) {
      case Tok::Eq: return BinaryOp::Eq;
      case Tok::Ne: return BinaryOp::Ne;
      case Tok::Lt: return BinaryOp::Lt;
      case Tok::Le: return BinaryOp::Le;
      case Tok::Gt: return BinaryOp::Gt;
      case Tok::Ge: return BinaryOp::Ge;
      default: return std::nullopt;
    }
  }

  Expr comparison() {
    Expr e = additive();
    if (auto op = relop(peek().kind)) {
      take();
      e = Expr::binary(*op, e, additive());
      if (relop(peek().kind)) fail({"'and'", "'or'", "')'", "end of comparison"});
    }
    return e;
  }

  Expr additive() {
    Expr e = multiplicative();
    for (;;) {
      if (at(Tok::Plus)) {
        take();
        e = Expr::binary(BinaryOp::Add, e, multiplicative());
      } else if (at(Tok::Minus)) {
        take();
        e = Expr::binary(BinaryOp::Sub, e, multiplicative());
      } else {
        return e;
      }
    }
  }

  Expr multiplicative() {
    Expr e = unary();
    for (;;) {
      if (at(Tok::Star)) {
        take();
        e = Expr::binary(BinaryOp::Mul, e, unary());
      } else if (at_keyword("div")) {
        take();
        e = Expr::binary(BinaryOp::Div, e, unary());
      } else if (at_keyword("mod")) {
        take();
        e = Expr::binary(BinaryOp::Mod, e, unary());
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (at(Tok::Minus)) {
      take();
      return Expr::unary(UnaryOp::Neg, unary());
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int: return Expr::int_lit(integer());
      case Tok::Ident: return Expr::var(take().text);
      case Tok::Keyword:
        if (t.text == "true" || t.text == "false") {
          bool v = take().text == "true";
          return Expr::bool_lit(v);
        }
        break;
      case Tok::LParen: {
        take();
        Expr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default: break;
    }
    fail({"integer", "identifier", "'true'", "'false'", "'('", "'-'", "'not'"});
  }

  Trigger trigger() {
    const Token& t = peek();
    if (t.kind == Tok::Ident) return Trigger::on_event(take().text);
    if (at_keyword("after")) {
      take();
      if (at(Tok::LBrack)) {
        auto [lo, hi, pos] = interval();
        if (lo <= 0 || lo > hi) throw SyntaxError(pos, {"interval with 0 < lo <= hi"}, describe_interval(lo, hi));
        return Trigger::after_nondet(lo, hi);
      }
      std::size_t pos = peek().pos;
      std::int64_t n = integer();
      if (n <= 0) throw SyntaxError(pos, {"positive tick count"}, std::to_string(n));
      return Trigger::after(n);
    }
    if (at_keyword("uniform")) {
      take();
      auto [lo, hi, pos] = interval();
      if (lo <= 0 || lo > hi) throw SyntaxError(pos, {"interval with 0 < lo <= hi"}, describe_interval(lo, hi));
      return Trigger::after_uniform(lo, hi);
    }
    if (at_keyword("exp")) {
      take();
      std::size_t pos = peek().pos;
      Rational r = rational();
      if (r <= Rational(0)) throw SyntaxError(pos, {"positive rate"}, r.to_string());
      return Trigger::after_exponential(r);
    }
    fail({"event name", "'after'", "'uniform'", "'exp'"});
  }

  static std::string describe_interval(std::int64_t lo, std::int64_t hi) {
    return "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
  }

  std::tuple<std::int64_t, std::int64_t, std::size_t> interval() {
    std::size_t pos = peek().pos;
    expect(Tok::LBrack, "'['");
    std::int64_t lo = signed_integer();
    expect(Tok::Comma, "','");
    std::int64_t hi = signed_integer();
    expect(Tok::RBrack, "']'");
    return {lo, hi, pos};
  }

  std::vector<Assignment> actions() {
    std::vector<Assignment> out;
    std::set<std::string> seen;
    for (;;) {
      Token target = expect(Tok::Ident, "assignment target");
      if (!seen.insert(target.text).second)
        throw SyntaxError(target.pos, {"distinct assignment target"}, describe(target));
      expect(Tok::Assign, "':='");
      out.push_back({target.text, expr()});
      if (!at(Tok::Comma)) return out;
      take();
    }
  }

  TransitionLabel label() {
    TransitionLabel l;
    l.trigger = trigger();
    if (at(Tok::LBrack)) {
      take();
      l.guard = expr();
      expect(Tok::RBrack, "']'");
    }
    if (at(Tok::Slash)) {
      take();
      l.actions = actions();
    }
    if (at(Tok::Dollar)) {
      take();
      std::size_t pos = peek().pos;
      l.cost = rational();
      if (*l.cost < Rational(0)) throw SyntaxError(pos, {"nonnegative cost"}, l.cost->to_string());
    }
    if (!at(Tok::End)) fail({"'['", "'/'", "'$'", "end of label"});
    return l;
  }

  VarDeclSyntax var_decl() {
    Token name = expect(Tok::Ident, "variable name");
    expect(Tok::Colon, "':'");
    VarType type;
    if (at(Tok::Ident) && peek().text == "bool") {
      take();
      type = VarType::boolean();
    } else {
      std::size_t pos = peek().pos;
      std::int64_t lo = signed_integer();
      expect(Tok::DotDot, "'..'");
      std::int64_t hi = signed_integer();
      if (lo > hi) throw SyntaxError(pos, {"range with lo <= hi"}, describe_interval(lo, hi));
      type = VarType::range(lo, hi);
    }
    expect(Tok::Eq, "'='");
    Expr init = expr();
    expect_end();
    return {name.text, type, init};
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_reserved_word(std::string_view word) {
  return std::find(kReserved.begin(), kReserved.end(), word) != kReserved.end();
}

bool is_identifier(std::string_view word) {
  if (word.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(word[0])) || word[0] == '_')) return false;
  for (char c : word)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return !is_reserved_word(word);
}

Expr parse_expr(std::string_view text) {
  Parser p(text);
  Expr e = p.expr();
  p.expect_end();
  return e;
}

TransitionLabel parse_label(std::string_view text) {
  Parser p(text);
  return p.label();
}

std::vector<Assignment> parse_actions(std::string_view text) {
  Parser p(text);
  if (p.at(Tok::End)) return {};
  auto out = p.actions();
  p.expect_end();
  return out;
}

VarDeclSyntax parse_var_decl(std::string_view text) {
  Parser p(text);
  return p.var_decl();
}

// ---------------------------------------------------------------- typing

ExprType typecheck(const Expr& e, const TypeEnv& env) {
  auto require = [&](const Expr& sub, ExprType want) {
    ExprType got = typecheck(sub, env);
    if (got != want) throw TypeError(to_string(sub), want, got);
  };
  switch (e.kind()) {
    case Expr::Kind::IntLit: return ExprType::Int;
    case Expr::Kind::BoolLit: return ExprType::Bool;
    case Expr::Kind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) throw UnknownVariable(e.name());
      return it->second.kind == VarType::Kind::Bool ? ExprType::Bool : ExprType::Int;
    }
    case Expr::Kind::Unary:
      if (e.unary_op() == UnaryOp::Not) {
        require(e.arg(), ExprType::Bool);
        return ExprType::Bool;
      }
      require(e.arg(), ExprType::Int);
      return ExprType::Int;
    case Expr::Kind::Binary:
      switch (e.binary_op()) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod:
          require(e.lhs(), ExprType::Int);
          require(e.rhs(), ExprType::Int);
          return ExprType::Int;
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
          require(e.lhs(), ExprType::Int);
          require(e.rhs(), ExprType::Int);
          return ExprType::Bool;
        case BinaryOp::Eq:
        case BinaryOp::Ne: {
          ExprType l = typecheck(e.lhs(), env);
          require(e.rhs(), l);
          return ExprType::Bool;
        }
        case BinaryOp::And:
        case BinaryOp::Or:
          require(e.lhs(), ExprType::Bool);
          require(e.rhs(), ExprType::Bool);
          return ExprType::Bool;
      }
  }
  return ExprType::Int;
}

// ---------------------------------------------------------------- evaluation

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  if (b == 0) throw EvalError("division by zero");
  if (a == INT64_MIN && b == -1) throw EvalError("integer overflow");
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) throw EvalError("modulo by zero");
  if (b == -1) return 0;
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

namespace {

std::int64_t checked(BinaryOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  bool overflow = false;
  switch (op) {
    case BinaryOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
    case BinaryOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
    case BinaryOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
    case BinaryOp::Div: return floor_div(a, b);
    case BinaryOp::Mod: return floor_mod(a, b);
    default: break;
  }
  if (overflow) throw EvalError("integer overflow");
  return r;
}

std::int64_t as_int(const Value& v, const Expr& e) {
  if (auto p = std::get_if<std::int64_t>(&v)) return *p;
  throw TypeError(to_string(e), ExprType::Int, ExprType::Bool);
}

bool as_bool(const Value& v, const Expr& e) {
  if (auto p = std::get_if<bool>(&v)) return *p;
  throw TypeError(to_string(e), ExprType::Bool, ExprType::Int);
}

}  // namespace

Value eval(const Expr& e, const Valuation& v) {
  switch (e.kind()) {
    case Expr::Kind::IntLit: return e.int_value();
    case Expr::Kind::BoolLit: return e.bool_value();
    case Expr::Kind::Var: {
      auto it = v.find(e.name());
      if (it == v.end()) throw UnknownVariable(e.name());
      return it->second;
    }
    case Expr::Kind::Unary:
      if (e.unary_op() == UnaryOp::Not) return !as_bool(eval(e.arg(), v), e.arg());
      return checked(BinaryOp::Sub, 0, as_int(eval(e.arg(), v), e.arg()));
    case Expr::Kind::Binary: {
      BinaryOp op = e.binary_op();
      if (op == BinaryOp::And) {
        if (!as_bool(eval(e.lhs(), v), e.lhs())) return false;
        return as_bool(eval(e.rhs(), v), e.rhs());
      }
      if (op == BinaryOp::Or) {
        if (as_bool(eval(e.lhs(), v), e.lhs())) return true;
        return as_bool(eval(e.rhs(), v), e.rhs());
      }
      Value l = eval(e.lhs(), v);
      Value r = eval(e.rhs(), v);
      if (op == BinaryOp::Eq || op == BinaryOp::Ne) {
        if (l.index() != r.index())
          throw TypeError(to_string(e.rhs()), l.index() == 0 ? ExprType::Int : ExprType::Bool,
                          r.index() == 0 ? ExprType::Int : ExprType::Bool);
        return (l == r) == (op == BinaryOp::Eq);
      }
      std::int64_t a = as_int(l, e.lhs());
      std::int64_t b = as_int(r, e.rhs());
      switch (op) {
        case BinaryOp::Lt: return a < b;
        case BinaryOp::Le: return a <= b;
        case BinaryOp::Gt: return a > b;
        case BinaryOp::Ge: return a >= b;
        default: return checked(op, a, b);
      }
    }
  }
  return false;
}

Value eval_constant(const Expr& e) { return eval(e, Valuation{}); }

std::vector<std::string> free_variables(const Expr& e) {
  std::vector<std::string> out;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    switch (x.kind()) {
      case Expr::Kind::Var:
        if (std::find(out.begin(), out.end(), x.name()) == out.end()) out.push_back(x.name());
        break;
      case Expr::Kind::Unary: walk(x.arg()); break;
      case Expr::Kind::Binary:
        walk(x.lhs());
        walk(x.rhs());
        break;
      default: break;
    }
  };
  walk(e);
  return out;
}

Expr rename_variables(const Expr& e, const std::map<std::string, std::string, std::less<>>& renaming) {
  switch (e.kind()) {
    case Expr::Kind::Var: {
      auto it = renaming.find(e.name());
      return it == renaming.end() ? e : Expr::var(it->second);
    }
    case Expr::Kind::Unary: return Expr::unary(e.unary_op(), rename_variables(e.arg(), renaming));
    case Expr::Kind::Binary:
      return Expr::binary(e.binary_op(), rename_variables(e.lhs(), renaming), rename_variables(e.rhs(), renaming));
    default: return e;
  }
}

// ---------------------------------------------------------------- slot programs

SlotExpr::SlotExpr(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of) {
  emit(e, slot_of);
}

void SlotExpr::emit(const Expr& e, const std::function<std::optional<std::size_t>(std::string_view)>& slot_of) {
  switch (e.kind()) {
    case Expr::Kind::IntLit: code_.push_back({Op::Push, e.int_value()}); return;
    case Expr::Kind::BoolLit: code_.push_back({Op::Push, e.bool_value() ? 1 : 0}); return;
    case Expr::Kind::Var: {
      auto slot = slot_of(e.name());
      if (!slot) throw UnknownVariable(e.name());
      code_.push_back({Op::Load, static_cast<std::int64_t>(*slot)});
      return;
    }
    case Expr::Kind::Unary:
      emit(e.arg(), slot_of);
      code_.push_back({e.unary_op() == UnaryOp::Neg ? Op::Neg : Op::Not, 0});
      return;
    case Expr::Kind::Binary: {
      BinaryOp op = e.binary_op();
      if (op == BinaryOp::And || op == BinaryOp::Or) {
        // short circuit: the jump instruction keeps the deciding value on the stack
        emit(e.lhs(), slot_of);
        std::size_t jump = code_.size();
        code_.push_back({op == BinaryOp::And ? Op::And : Op::Or, 0});
        emit(e.rhs(), slot_of);
        code_[jump].arg = static_cast<std::int64_t>(code_.size());
        return;
      }
      emit(e.lhs(), slot_of);
      emit(e.rhs(), slot_of);
      static constexpr std::array<Op, 11> kOps = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Mod, Op::Eq,
                                                  Op::Ne,  Op::Lt,  Op::Le,  Op::Gt,  Op::Ge};
      code_.push_back({kOps[static_cast<std::size_t>(op)], 0});
      return;
    }
  }
}

std::int64_t SlotExpr::eval(std::span<const std::int64_t> values) const {
  std::int64_t stack[64];
  std::vector<std::int64_t> big;
  std::int64_t* st = stack;
  if (code_.size() > 64) {
    big.resize(code_.size());
    st = big.data();
  }
  std::size_t sp = 0;
  for (std::size_t pc = 0; pc < code_.size(); ++pc) {
    const Instr& in = code_[pc];
    switch (in.op) {
      case Op::Push: st[sp++] = in.arg; break;
      case Op::Load: st[sp++] = values[static_cast<std::size_t>(in.arg)]; break;
      case Op::Neg: st[sp - 1] = checked(BinaryOp::Sub, 0, st[sp - 1]); break;
      case Op::Not: st[sp - 1] = st[sp - 1] ? 0 : 1; break;
      case Op::And:
        if (!st[sp - 1]) pc = static_cast<std::size_t>(in.arg) - 1;
        else --sp;
        break;
      case Op::Or:
        if (st[sp - 1]) pc = static_cast<std::size_t>(in.arg) - 1;
        else --sp;
        break;
      default: {
        std::int64_t b = st[--sp];
        std::int64_t a = st[sp - 1];
        std::int64_t r = 0;
        switch (in.op) {
          case Op::Add: r = checked(BinaryOp::Add, a, b); break;
          case Op::Sub: r = checked(BinaryOp::Sub, a, b); break;
          case Op::Mul: r = checked(BinaryOp::Mul, a, b); break;
          case Op::Div: r = floor_div(a, b); break;
          case Op::Mod: r = floor_mod(a, b); break;
          case Op::Eq: r = a == b; break;
          case Op::Ne: r = a != b; break;
          case Op::Lt: r = a < b; break;
          case Op::Le: r = a <= b; break;
          case Op::Gt: r = a > b; break;
          case Op::Ge: r = a >= b; break;
          default: break;
        }
        st[sp - 1] = r;
      }
    }
  }
  return sp ? st[sp - 1] : 0;
}

// ---------------------------------------------------------------- label printing

std::string to_string(const Trigger& t) {
  switch (t.kind) {
    case Trigger::Kind::Event: return t.event;
    case Trigger::Kind::After: return "after " + std::to_string(t.lo);
    case Trigger::Kind::AfterNondet: return "after [" + std::to_string(t.lo) + ", " + std::to_string(t.hi) + "]";
    case Trigger::Kind::AfterUniform: return "uniform [" + std::to_string(t.lo) + ", " + std::to_string(t.hi) + "]";
    case Trigger::Kind::AfterExponential: return "exp " + t.rate.to_string();
  }
  return {};
}

std::string to_string(std::span<const Assignment> actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ", ";
    out += actions[i].target + " := " + to_string(actions[i].value);
  }
  return out;
}

std::string to_string(const TransitionLabel& l) {
  std::string out = to_string(l.trigger);
  if (l.guard) out += " [" + to_string(*l.guard) + "]";
  if (!l.actions.empty()) out += " / " + to_string(std::span<const Assignment>(l.actions));
  if (l.cost) out += " $ " + l.cost->to_string();
  return out;
}

}  // namespace pchart
