#include "pchart/codegen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace pchart {

namespace {

enum class Dialect { C, Prism };

const std::set<std::string, std::less<>>& c_keywords() {
  static const std::set<std::string, std::less<>> k{
      "auto",   "break",  "case",     "char",   "const",    "continue", "default",  "do",     "double",
      "else",   "enum",   "extern",   "float",  "for",      "goto",     "if",       "inline", "int",
      "long",   "register", "restrict", "return", "short",  "signed",   "sizeof",   "static", "struct",
      "switch", "typedef", "union",   "unsigned", "void",   "volatile", "while",    "bool",   "main",
      "printf", "puts",   "fgets",    "strcmp", "int64_t",  "true",     "false",    "pc_div", "pc_mod"};
  return k;
}

const std::set<std::string, std::less<>>& prism_keywords() {
  static const std::set<std::string, std::less<>> k{
      "A",      "bool",     "clock",   "const",  "ctmc",    "C",       "double",  "dtmc",    "E",
      "endinit", "endinvariant", "endmodule", "endrewards", "endsystem", "false", "formula", "filter",
      "func",   "F",        "global",  "G",      "init",    "invariant", "I",     "int",     "label",
      "max",    "mdp",      "min",     "module", "X",       "nondeterministic", "Pmax", "Pmin", "P",
      "probabilistic", "prob", "pta",   "rate",   "rewards", "Rmax",    "Rmin",    "R",       "S",
      "stochastic", "system", "true",  "U",      "W",       "floor",   "ceil",    "mod",     "pow",
      "log",    "advance"};
  return k;
}

std::string mangle(const std::string& n, Dialect d) {
  const auto& kw = d == Dialect::C ? c_keywords() : prism_keywords();
  return kw.count(n) ? n + "_" : n;
}

std::string int_text(std::int64_t v, Dialect d) {
  std::string s = std::to_string(v);
  if (d == Dialect::C && (v > 2147483647LL || v < -2147483647LL)) s += "LL";
  return s;
}

struct Printer {
  Dialect d;
  bool* uses_div = nullptr;
  bool* uses_mod = nullptr;

  std::string op_text(BinaryOp op) const {
    switch (op) {
      case BinaryOp::Add: return " + ";
      case BinaryOp::Sub: return " - ";
      case BinaryOp::Mul: return " * ";
      case BinaryOp::Eq: return d == Dialect::C ? " == " : "=";
      case BinaryOp::Ne: return d == Dialect::C ? " != " : "!=";
      case BinaryOp::Lt: return d == Dialect::C ? " < " : "<";
      case BinaryOp::Le: return d == Dialect::C ? " <= " : "<=";
      case BinaryOp::Gt: return d == Dialect::C ? " > " : ">";
      case BinaryOp::Ge: return d == Dialect::C ? " >= " : ">=";
      case BinaryOp::And: return d == Dialect::C ? " && " : " & ";
      case BinaryOp::Or: return d == Dialect::C ? " || " : " | ";
      default: return "?";
    }
  }

  std::string sub(const Expr& e) const {
    std::string s = top(e);
    if (e.kind() == Expr::Kind::Binary) {
      BinaryOp op = e.binary_op();
      bool call = op == BinaryOp::Div || op == BinaryOp::Mod;
      if (!call) return "(" + s + ")";
    }
    if (e.kind() == Expr::Kind::IntLit && e.int_value() < 0) return "(" + s + ")";
    return s;
  }

  std::string top(const Expr& e) const {
    switch (e.kind()) {
      case Expr::Kind::IntLit: return int_text(e.int_value(), d);
      case Expr::Kind::BoolLit:
        if (d == Dialect::C) return e.bool_value() ? "1" : "0";
        return e.bool_value() ? "true" : "false";
      case Expr::Kind::Var: return mangle(e.name(), d);
      case Expr::Kind::Unary:
        return (e.unary_op() == UnaryOp::Neg ? "-" : "!") + sub(e.arg());
      case Expr::Kind::Binary: {
        BinaryOp op = e.binary_op();
        if (op == BinaryOp::Div) {
          if (d == Dialect::C) {
            if (uses_div) *uses_div = true;
            return "pc_div(" + top(e.lhs()) + ", " + top(e.rhs()) + ")";
          }
          return "floor(" + sub(e.lhs()) + "/" + sub(e.rhs()) + ")";
        }
        if (op == BinaryOp::Mod) {
          if (d == Dialect::C && uses_mod) *uses_mod = true;
          return (d == Dialect::C ? "pc_mod(" : "mod(") + top(e.lhs()) + ", " + top(e.rhs()) + ")";
        }
        return sub(e.lhs()) + op_text(op) + sub(e.rhs());
      }
    }
    return "";
  }
};

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string one_line(const std::string& s) {
  std::string out = s;
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

std::vector<std::string> comment_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// Identifier-safe unique name per chart state: the plain name when unique, else the qualified path.
std::map<StateId, std::string> state_labels(const GCProgram& p, const Chart& chart) {
  std::map<std::string, int> count;
  for (const auto& [id, st] : chart.states) ++count[lower_ascii(st.name)];
  std::map<StateId, std::string> out;
  for (const auto& [id, st] : chart.states) {
    std::string n = count[lower_ascii(st.name)] == 1 ? st.name : p.state_names.at(id);
    for (char& c : n)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') c = '_';
    out[id] = n;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- priority elimination

std::vector<Expr> strengthened_guards(const GCProgram& p) {
  std::vector<Expr> out;
  for (const auto& c : p.commands) {
    if (c.time_advance) {
      out.push_back(c.guard);
      continue;
    }
    std::vector<Expr> parts{c.guard};
    for (const auto& o : p.commands)
      if (!o.time_advance && o.event == c.event && o.priority > c.priority) parts.push_back(Expr::negate(o.guard));
    out.push_back(Expr::conj(parts));
  }
  return out;
}

std::string prism_action(const GuardedCommand& c) { return c.time_advance ? "advance" : c.event; }

// ---------------------------------------------------------------- C

CCodeUnit gen_c(const GCProgram& p, const Chart& chart) {
  for (const auto& c : p.commands)
    if (c.outcomes.size() != 1) throw ProbabilisticChart(c.id);

  CCodeUnit u;
  u.name = p.name;
  const std::string& n = p.name;
  bool uses_div = false, uses_mod = false;
  Printer pr{Dialect::C, &uses_div, &uses_mod};
  const auto& vars = p.variables();
  auto vname = [&](const std::string& v) { return mangle(v, Dialect::C); };
  std::map<std::string, std::size_t, std::less<>> slot;
  for (std::size_t i = 0; i < vars.size(); ++i) slot[vars[i].name] = i;

  // event functions
  std::vector<std::string> events;
  for (const auto& e : p.events)
    if (e != "tick") events.push_back(e);
  for (const auto& e : events) u.event_functions.push_back(n + "_event_" + e);

  auto body_for = [&](const std::string& event) {
    std::ostringstream o;
    o << "  " << n << "_err = 0;\n";
    bool first = true;
    for (const auto& c : p.commands) {
      if (c.event != event) continue;
      o << (first ? "  if (" : " else if (") << pr.top(c.guard) << ") {\n";
      first = false;
      if (c.comment)
        for (const auto& l : comment_lines(*c.comment)) o << "    // " << l << "\n";
      const auto& ups = c.outcomes.front().updates;
      int err = c.source_trans ? static_cast<int>(*c.source_trans) : -1;
      auto range_check = [&](const std::string& val, const ProgramVar& v) {
        if (v.type.kind != VarType::Kind::Int) return;
        o << "    if (" << val << " < " << int_text(v.type.lo, Dialect::C) << " || " << val << " > "
          << int_text(v.type.hi, Dialect::C) << ") {\n      " << n << "_err = " << err << ";\n      return;\n    }\n";
      };
      if (ups.size() == 1 && vars[slot.at(ups[0].target)].type.kind == VarType::Kind::Bool) {
        o << "    " << vname(ups[0].target) << " = " << pr.top(ups[0].value) << ";\n";
      } else if (ups.size() == 1 && vars[slot.at(ups[0].target)].role != VarRole::Data) {
        o << "    " << vname(ups[0].target) << " = " << pr.top(ups[0].value) << ";\n";
      } else if (!ups.empty()) {
        for (std::size_t i = 0; i < ups.size(); ++i) {
          const auto& v = vars[slot.at(ups[i].target)];
          o << "    " << (v.type.kind == VarType::Kind::Bool ? "bool" : "int64_t") << " n" << i << " = " << pr.top(ups[i].value)
            << ";\n";
        }
        for (std::size_t i = 0; i < ups.size(); ++i) {
          const auto& v = vars[slot.at(ups[i].target)];
          if (v.role == VarRole::Data) range_check("n" + std::to_string(i), v);
        }
        for (std::size_t i = 0; i < ups.size(); ++i) o << "    " << vname(ups[i].target) << " = n" << i << ";\n";
      }
      o << "  }";
    }
    if (!first) o << "\n";
    return o.str();
  };

  // header
  {
    std::string guard;
    for (char c : n) guard += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::ostringstream h;
    h << "#ifndef " << guard << "_H\n#define " << guard << "_H\n\n";
    h << "void " << n << "_init(void);\n";
    for (const auto& f : u.event_functions) h << "void " << f << "(void);\n";
    h << "void " << n << "_tick(void);\n";
    h << "// transition id of the step rejected by a range check, 0 when the last step succeeded\n";
    h << "int " << n << "_error(void);\n";
    h << "void " << n << "_dump_state(void);\n";
    h << "\n#endif\n";
    u.header = h.str();
  }

  std::ostringstream fns;
  fns << "void " << n << "_init(void) {\n";
  for (const auto& v : vars) fns << "  " << vname(v.name) << " = " << v.init << ";\n";
  fns << "  " << n << "_err = 0;\n}\n";
  for (const auto& e : events) fns << "\nvoid " << n << "_event_" << e << "(void) {\n" << body_for(e) << "}\n";
  fns << "\nvoid " << n << "_tick(void) {\n" << body_for("tick") << "}\n";
  fns << "\nint " << n << "_error(void) {\n  return " << n << "_err;\n}\n";
  fns << "\nvoid " << n << "_dump_state(void) {\n";
  for (const auto& v : vars) fns << "  printf(\"" << v.name << "=%lld\\n\", (long long)" << vname(v.name) << ");\n";
  fns << "}\n";

  std::ostringstream s;
  s << "#include \"" << n << ".h\"\n\n#include <stdbool.h>\n#include <stdint.h>\n#include <stdio.h>\n\n";
  if (uses_div)
    s << "static int64_t pc_div(int64_t a, int64_t b) {\n  int64_t q;\n  if (b == 0) return 0;\n  q = a / b;\n"
         "  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;\n  return q;\n}\n\n";
  if (uses_mod)
    s << "static int64_t pc_mod(int64_t a, int64_t b) {\n  int64_t r;\n  if (b == 0) return 0;\n  r = a % b;\n"
         "  if (r != 0 && ((r < 0) != (b < 0))) r += b;\n  return r;\n}\n\n";
  for (const auto& v : vars) {
    if (v.comment)
      for (const auto& l : comment_lines(*v.comment)) s << "// " << l << "\n";
    s << "static " << (v.type.kind == VarType::Kind::Bool ? "bool " : "int64_t ") << vname(v.name) << " = " << v.init << ";";
    if (v.role == VarRole::Region) {
      s << "  // " << p.state_names.at(v.owner) << ":";
      for (const auto& [child, enc] : p.regions.encoding)
        if (enc.first == slot.at(v.name)) s << " " << enc.second << "=" << chart.state(child).name;
    } else if (v.role == VarRole::Clock) {
      s << "  // clock of " << p.state_names.at(v.owner);
    } else if (v.role == VarRole::Deadline) {
      s << "  // deadline of " << p.state_names.at(v.owner);
    }
    s << "\n";
  }
  s << "static int " << n << "_err = 0;\n\n" << fns.str();
  u.source = s.str();

  std::ostringstream m;
  m << "#include <stdio.h>\n#include <string.h>\n\n#include \"" << n << ".h\"\n\n";
  m << "// One event name per line; \"reset\" restarts the chart. Prints the state after every event.\n";
  m << "int main(void) {\n  char line[256];\n  " << n << "_init();\n";
  m << "  while (fgets(line, sizeof line, stdin)) {\n    line[strcspn(line, \"\\r\\n\")] = 0;\n";
  m << "    if (line[0] == 0) continue;\n";
  m << "    if (strcmp(line, \"reset\") == 0) {\n      " << n << "_init();\n      continue;\n    }\n";
  bool first = true;
  for (const auto& e : events) {
    m << (first ? "    if" : "    else if") << " (strcmp(line, \"" << e << "\") == 0) " << n << "_event_" << e << "();\n";
    first = false;
  }
  m << (first ? "    if" : "    else if") << " (strcmp(line, \"tick\") == 0) " << n << "_tick();\n";
  m << "    if (" << n << "_error() != 0) printf(\"error=%d\\n\", " << n << "_error());\n";
  m << "    " << n << "_dump_state();\n    puts(\"--\");\n  }\n  return 0;\n}\n";
  u.harness = m.str();
  return u;
}

// ---------------------------------------------------------------- PRISM

PrismUnit gen_prism(const GCProgram& p, const Chart& chart) {
  PrismUnit u;
  u.name = p.name;
  Printer pr{Dialect::Prism};
  const auto& vars = p.variables();
  auto vname = [&](const std::string& v) { return mangle(v, Dialect::Prism); };
  std::map<std::string, std::size_t, std::less<>> slot;
  for (std::size_t i = 0; i < vars.size(); ++i) slot[vars[i].name] = i;
  auto labels = state_labels(p, chart);
  auto guards = strengthened_guards(p);

  std::ostringstream m;
  m << "// chart " << p.name << "\nmdp\n\nmodule " << mangle(p.name, Dialect::Prism) << "\n";
  for (const auto& v : vars) {
    if (v.comment)
      for (const auto& l : comment_lines(*v.comment)) m << "  // " << l << "\n";
    m << "  " << vname(v.name) << " : ";
    if (v.type.kind == VarType::Kind::Bool) m << "bool init " << (v.init ? "true" : "false") << ";";
    else m << "[" << v.type.lo << ".." << v.type.hi << "] init " << v.init << ";";
    if (v.role == VarRole::Region) {
      m << " // " << p.state_names.at(v.owner) << ":";
      for (const auto& [child, enc] : p.regions.encoding)
        if (enc.first == slot.at(v.name)) m << " " << enc.second << "=" << chart.state(child).name;
    } else if (v.role == VarRole::Clock) {
      m << " // clock of " << p.state_names.at(v.owner);
    } else if (v.role == VarRole::Deadline) {
      m << " // deadline of " << p.state_names.at(v.owner);
    }
    m << "\n";
  }
  for (const auto& c : p.commands) {
    m << "\n";
    if (c.comment)
      for (const auto& l : comment_lines(*c.comment)) m << "  // " << l << "\n";
    m << "  [" << prism_action(c) << "] " << pr.top(guards[static_cast<std::size_t>(c.id - 1)]) << " -> ";
    for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
      const auto& o = c.outcomes[i];
      if (i) m << " + ";
      if (c.outcomes.size() > 1) m << o.prob.to_decimal_or_fraction() << ":";
      if (o.updates.empty()) {
        m << "true";
        continue;
      }
      for (std::size_t k = 0; k < o.updates.size(); ++k) {
        if (k) m << "&";
        m << "(" << vname(o.updates[k].target) << "'=" << pr.top(o.updates[k].value) << ")";
      }
    }
    m << ";\n";
  }
  m << "endmodule\n";

  // labels for query targets
  std::set<StateId> targets;
  for (const auto& q : chart.queries) targets.insert(q.target);
  if (!targets.empty()) m << "\n";
  for (StateId t : targets) {
    Expr act = p.regions.activity.count(t) ? p.regions.activity.at(t) : Expr::bool_lit(false);
    m << "formula label_" << labels.at(t) << " = " << pr.top(act) << ";\n";
    m << "label \"" << lower_ascii(labels.at(t)) << "\" = label_" << labels.at(t) << ";\n";
  }

  // invariants
  std::vector<StateId> inv_states;
  for (StateId s : chart.preorder())
    if (chart.state(s).invariant) inv_states.push_back(s);
  if (!inv_states.empty()) {
    m << "\n";
    std::vector<std::string> all;
    for (StateId s : inv_states) {
      Expr own = rename_variables(*chart.state(s).invariant, p.regions.scope_renaming.at(s));
      Expr act = p.regions.activity.at(s);
      Expr holds = act.is_true() ? own : Expr::binary(BinaryOp::Or, Expr::negate(act), own);
      m << "formula inv_" << labels.at(s) << " = " << pr.top(holds) << ";\n";
      m << "label \"inv_ok_" << lower_ascii(labels.at(s)) << "\" = inv_" << labels.at(s) << ";\n";
      all.push_back("inv_" + labels.at(s));
    }
    m << "label \"inv_ok\" = ";
    for (std::size_t i = 0; i < all.size(); ++i) m << (i ? " & " : "") << all[i];
    m << ";\n";
  }

  // rewards
  bool any_cost = !p.cost_rates.empty();
  for (const auto& c : p.commands)
    for (const auto& o : c.outcomes)
      if (!o.cost.is_zero()) any_cost = true;
  bool cost_query = false;
  for (const auto& q : chart.queries)
    if (q.kind == QueryKind::Emin || q.kind == QueryKind::Emax) cost_query = true;
  if (any_cost || cost_query) {
    m << "\nrewards \"cost\"\n";
    for (const auto& c : p.commands) {
      Rational expected;
      for (const auto& o : c.outcomes) expected += o.prob * o.cost;
      if (expected.is_zero()) continue;
      m << "  [" << prism_action(c) << "] " << pr.top(guards[static_cast<std::size_t>(c.id - 1)]) << " : "
        << expected.to_decimal_or_fraction() << ";\n";
    }
    for (const auto& r : p.cost_rates)
      m << "  [advance] " << pr.top(r.active) << " : " << r.rate.to_decimal_or_fraction() << ";\n";
    m << "endrewards\n";
  }
  u.model = m.str();

  std::ostringstream props;
  props << "// properties of " << p.name << "\n";
  std::vector<Query> qs = chart.queries;
  std::sort(qs.begin(), qs.end(), [](const Query& a, const Query& b) { return a.id < b.id; });
  for (const auto& q : qs) {
    std::string lab = "\"" + lower_ascii(labels.at(q.target)) + "\"";
    props << "\n// q" << q.id << ": " << to_string(q.kind) << " " << p.state_names.at(q.target) << "\n";
    switch (q.kind) {
      case QueryKind::Pmin: props << "Pmin=? [ F " << lab << " ]\n"; break;
      case QueryKind::Pmax: props << "Pmax=? [ F " << lab << " ]\n"; break;
      case QueryKind::Emin: props << "Rmin=? [ F " << lab << " ]\n"; break;
      case QueryKind::Emax: props << "Rmax=? [ F " << lab << " ]\n"; break;
    }
  }
  for (StateId s : inv_states) {
    props << "\n// invariant of " << p.state_names.at(s) << ": " << one_line(to_string(*chart.state(s).invariant)) << "\n";
    props << "Pmax=? [ F !\"inv_ok_" << lower_ascii(labels.at(s)) << "\" ]\n";
  }
  u.properties = props.str();
  return u;
}

// ---------------------------------------------------------------- files

namespace {
std::filesystem::path put(const std::filesystem::path& dir, const std::string& file, const std::string& text) {
  std::filesystem::create_directories(dir);
  auto path = dir / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IOError", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("IOError", "cannot write " + path.string());
  return path;
}
}  // namespace

std::vector<std::filesystem::path> write_unit(const CCodeUnit& u, const std::filesystem::path& dir) {
  return {put(dir, u.name + ".h", u.header), put(dir, u.name + ".c", u.source), put(dir, u.name + "_harness.c", u.harness)};
}

std::vector<std::filesystem::path> write_unit(const PrismUnit& u, const std::filesystem::path& dir) {
  return {put(dir, u.name + ".prism", u.model), put(dir, u.name + ".props", u.properties)};
}

}  // namespace pchart
