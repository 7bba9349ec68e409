#include "pchart/chart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pchart {

using json = nlohmann::json;

// ---------------------------------------------------------------- geometry

bool overlaps(const Rect& a, const Rect& b) {
  return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

bool contains(const Rect& outer, const Rect& inner) {
  return inner.x >= outer.x && inner.y >= outer.y && inner.right() <= outer.right() &&
         inner.bottom() <= outer.bottom();
}

bool contains(const Rect& r, Point p) { return p.x >= r.x && p.x <= r.right() && p.y >= r.y && p.y <= r.bottom(); }

std::string_view to_string(StateKind k) {
  switch (k) {
    case StateKind::Basic: return "basic";
    case StateKind::Xor: return "xor";
    case StateKind::And: return "and";
  }
  return "?";
}

std::string_view to_string(QueryKind k) {
  switch (k) {
    case QueryKind::Pmin: return "Pmin";
    case QueryKind::Pmax: return "Pmax";
    case QueryKind::Emin: return "Emin";
    case QueryKind::Emax: return "Emax";
  }
  return "?";
}

std::optional<QueryKind> parse_query_kind(std::string_view s) {
  if (s == "Pmin") return QueryKind::Pmin;
  if (s == "Pmax") return QueryKind::Pmax;
  if (s == "Emin") return QueryKind::Emin;
  if (s == "Emax") return QueryKind::Emax;
  return std::nullopt;
}

TransitionTree TransitionTree::go(StateId target, std::vector<Assignment> actions, Rational cost) {
  TransitionTree t;
  t.kind = Kind::Goto;
  t.target = target;
  t.actions = std::move(actions);
  t.cost = cost;
  return t;
}

bool operator==(const TransitionTree& a, const TransitionTree& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == TransitionTree::Kind::Goto)
    return a.target == b.target && a.actions == b.actions && a.cost == b.cost && a.waypoints == b.waypoints;
  return a.node == b.node && a.at == b.at && a.branches == b.branches && a.otherwise == b.otherwise;
}

bool operator==(const Branch& a, const Branch& b) {
  return a.prob == b.prob && a.guard == b.guard && a.tree == b.tree;
}

// ---------------------------------------------------------------- structure

const State& Chart::state(StateId id) const {
  auto it = states.find(id);
  if (it == states.end()) throw UnknownState("#" + std::to_string(id));
  return it->second;
}

State& Chart::state(StateId id) {
  auto it = states.find(id);
  if (it == states.end()) throw UnknownState("#" + std::to_string(id));
  return it->second;
}

std::optional<StateId> Chart::parent(StateId id) const {
  for (const auto& [sid, s] : states)
    if (std::find(s.children.begin(), s.children.end(), id) != s.children.end()) return sid;
  return std::nullopt;
}

std::vector<StateId> Chart::path_from_root(StateId id) const {
  std::vector<StateId> path;
  std::optional<StateId> cur = id;
  while (cur) {
    if (std::find(path.begin(), path.end(), *cur) != path.end()) break;  // cycle guard
    path.push_back(*cur);
    cur = parent(*cur);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

int Chart::depth(StateId id) const { return static_cast<int>(path_from_root(id).size()) - 1; }

bool Chart::is_ancestor(StateId ancestor, StateId of) const {
  if (ancestor == of) return false;
  auto path = path_from_root(of);
  return std::find(path.begin(), path.end(), ancestor) != path.end();
}

std::vector<StateId> Chart::preorder() const {
  std::vector<StateId> out;
  std::set<StateId> seen;
  std::function<void(StateId)> walk = [&](StateId id) {
    if (!seen.insert(id).second || !has_state(id)) return;
    out.push_back(id);
    for (StateId c : state(id).children) walk(c);
  };
  walk(root);
  return out;
}

std::string Chart::qualified_name(StateId id) const {
  std::string out;
  for (StateId s : path_from_root(id)) {
    if (!out.empty()) out += '.';
    out += state(s).name;
  }
  return out;
}

std::optional<StateId> Chart::find_state(std::string_view key) const {
  if (!key.empty() && key.front() == '#') {
    try {
      StateId id = std::stoll(std::string(key.substr(1)));
      if (has_state(id)) return id;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  std::optional<StateId> found;
  bool qualified = key.find('.') != std::string_view::npos;
  for (const auto& [id, s] : states) {
    bool match = qualified ? qualified_name(id) == key : s.name == key;
    if (!match) continue;
    if (found) return std::nullopt;  // ambiguous
    found = id;
  }
  return found;
}

// ---------------------------------------------------------------- errors

namespace {

std::string position_text(std::size_t line, std::size_t col) {
  return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

JsonSyntax::JsonSyntax(std::size_t line, std::size_t col, const std::string& detail)
    : Error("JsonSyntax", "JSON syntax error at " + position_text(line, col) + ": " + detail), line_(line), col_(col) {}

SchemaViolation::SchemaViolation(std::string path, const std::string& reason)
    : Error("SchemaViolation", "schema violation at " + path + ": " + reason), path_(std::move(path)) {}

std::string to_string(const Diagnostic& d) {
  return std::string(d.severity == Severity::Error ? "error" : "warning") + " [" + d.object_id + "] " + d.message;
}

InvariantViolation::InvariantViolation(std::vector<Diagnostic> diagnostics)
    : Error("InvariantViolation", diagnostics.empty() ? "invalid chart" : "invalid chart: " + to_string(diagnostics.front())),
      diagnostics_(std::move(diagnostics)) {
  if (diagnostics_.empty()) diagnostics_.push_back({Severity::Error, "chart", "invalid chart", "unknown"});
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

// ---------------------------------------------------------------- parsing

namespace {

class Reader {
 public:
  [[noreturn]] static void fail(const std::string& path, const std::string& reason) { throw SchemaViolation(path, reason); }

  static const json& field(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "/" + key, "missing field");
    return *it;
  }

  static const json* optional_field(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  static std::int64_t integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
  }

  static double number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  static std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  static Rational rational(const json& v, const std::string& path) {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    std::string s = text(v, path);
    try {
      return Rational::parse(s);
    } catch (const std::exception&) {
      fail(path, "expected a constant rational such as \"1/2\", found \"" + s + "\"");
    }
  }

  static Expr expression(const json& v, const std::string& path) {
    std::string s = text(v, path);
    try {
      return parse_expr(s);
    } catch (const SyntaxError& e) {
      fail(path, e.what());
    }
  }

  static Rect rect(const json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected a rectangle {x, y, w, h}");
    return {number(field(v, path, "x"), path + "/x"), number(field(v, path, "y"), path + "/y"),
            number(field(v, path, "w"), path + "/w"), number(field(v, path, "h"), path + "/h")};
  }

  static Point point(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) fail(path, "expected a point [x, y]");
    return {number(v[0], path + "/0"), number(v[1], path + "/1")};
  }

  static std::optional<std::string> comment(const json& obj, const std::string& path) {
    if (auto c = optional_field(obj, "comment")) return text(*c, path + "/comment");
    return std::nullopt;
  }
};

StateKind parse_kind(const json& v, const std::string& path) {
  std::string k = Reader::text(v, path);
  if (k == "basic") return StateKind::Basic;
  if (k == "xor") return StateKind::Xor;
  if (k == "and") return StateKind::And;
  Reader::fail(path, "unknown state kind '" + k + "'");
}

VarDecl parse_var(const json& v, const std::string& path) {
  VarDecl d;
  d.name = Reader::text(Reader::field(v, path, "name"), path + "/name");
  std::string type = Reader::text(Reader::field(v, path, "type"), path + "/type");
  if (type == "bool") {
    d.type = VarType::boolean();
  } else if (type == "int") {
    d.type = VarType::range(Reader::integer(Reader::field(v, path, "lo"), path + "/lo"),
                            Reader::integer(Reader::field(v, path, "hi"), path + "/hi"));
  } else {
    Reader::fail(path + "/type", "expected \"bool\" or \"int\"");
  }
  d.init = Reader::expression(Reader::field(v, path, "init"), path + "/init");
  d.comment = Reader::comment(v, path);
  return d;
}

TransitionTree parse_tree(const json& v, const std::string& path, bool top_level) {
  TransitionTree t;
  std::string kind = Reader::text(Reader::field(v, path, "kind"), path + "/kind");
  if (kind == "goto") {
    t.kind = TransitionTree::Kind::Goto;
    t.target = Reader::integer(Reader::field(v, path, "target"), path + "/target");
    if (auto a = Reader::optional_field(v, "actions")) {
      if (top_level) Reader::fail(path + "/actions", "top-level actions belong in the transition label");
      std::string s = Reader::text(*a, path + "/actions");
      try {
        t.actions = parse_actions(s);
      } catch (const SyntaxError& e) {
        Reader::fail(path + "/actions", e.what());
      }
    }
    if (auto c = Reader::optional_field(v, "cost")) {
      if (top_level) Reader::fail(path + "/cost", "top-level cost belongs in the transition label");
      t.cost = Reader::rational(*c, path + "/cost");
    }
    if (auto w = Reader::optional_field(v, "waypoints")) {
      if (!w->is_array()) Reader::fail(path + "/waypoints", "expected an array of points");
      for (std::size_t i = 0; i < w->size(); ++i)
        t.waypoints.push_back(Reader::point((*w)[i], path + "/waypoints/" + std::to_string(i)));
    }
    return t;
  }
  if (kind != "prob" && kind != "cond") Reader::fail(path + "/kind", "expected goto, prob or cond");
  t.kind = kind == "prob" ? TransitionTree::Kind::Prob : TransitionTree::Kind::Cond;
  t.node = Reader::integer(Reader::field(v, path, "node"), path + "/node");
  t.at = Reader::point(Reader::field(v, path, "at"), path + "/at");
  const json& branches = Reader::field(v, path, "branches");
  if (!branches.is_array()) Reader::fail(path + "/branches", "expected an array");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    std::string bp = path + "/branches/" + std::to_string(i);
    const json& b = branches[i];
    Branch br;
    if (t.kind == TransitionTree::Kind::Prob) {
      br.prob = Reader::rational(Reader::field(b, bp, "prob"), bp + "/prob");
    } else {
      br.guard = Reader::expression(Reader::field(b, bp, "guard"), bp + "/guard");
    }
    br.tree = parse_tree(Reader::field(b, bp, "then"), bp + "/then", false);
    t.branches.push_back(std::move(br));
  }
  if (auto e = Reader::optional_field(v, "else")) {
    if (t.kind == TransitionTree::Kind::Prob) Reader::fail(path + "/else", "probabilistic nodes have no else branch");
    t.otherwise.push_back(parse_tree(*e, path + "/else", false));
  }
  return t;
}

std::size_t line_of(std::string_view text, std::size_t offset, std::size_t* col) {
  std::size_t line = 1, c = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      c = 1;
    } else {
      ++c;
    }
  }
  *col = c;
  return line;
}

}  // namespace

Chart parse_chart_unchecked(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    std::size_t line = line_of(text, offset, &col);
    throw JsonSyntax(line, col, e.what());
  }
  if (!doc.is_object()) throw SchemaViolation("", "document must be a JSON object");
  const json& version = Reader::field(doc, "", "formatVersion");
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw SchemaViolation("formatVersion", "unsupported format version, expected 1");

  Chart c;
  c.name = Reader::text(Reader::field(doc, "", "name"), "name");
  c.root = Reader::integer(Reader::field(doc, "", "root"), "root");
  c.next_id = Reader::integer(Reader::field(doc, "", "nextId"), "nextId");

  const json& states = Reader::field(doc, "", "states");
  if (!states.is_array()) throw SchemaViolation("states", "expected an array");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const json& s = states[i];
    std::string path = "states/" + std::to_string(i);
    State st;
    st.id = Reader::integer(Reader::field(s, path, "id"), path + "/id");
    st.name = Reader::text(Reader::field(s, path, "name"), path + "/name");
    path = "states/" + st.name;
    st.kind = parse_kind(Reader::field(s, path, "kind"), path + "/kind");
    if (auto ch = Reader::optional_field(s, "children")) {
      if (!ch->is_array()) Reader::fail(path + "/children", "expected an array of state ids");
      for (std::size_t k = 0; k < ch->size(); ++k)
        st.children.push_back(Reader::integer((*ch)[k], path + "/children/" + std::to_string(k)));
    }
    if (auto ini = Reader::optional_field(s, "initial")) {
      st.initial = Reader::integer(*ini, path + "/initial");
    } else if (st.kind == StateKind::Xor) {
      Reader::fail(path + "/initial", "xor state requires an initial child");
    }
    if (auto vars = Reader::optional_field(s, "variables")) {
      if (!vars->is_array()) Reader::fail(path + "/variables", "expected an array");
      for (std::size_t k = 0; k < vars->size(); ++k)
        st.variables.push_back(parse_var((*vars)[k], path + "/variables/" + std::to_string(k)));
    }
    if (auto inv = Reader::optional_field(s, "invariant")) st.invariant = Reader::expression(*inv, path + "/invariant");
    if (auto rate = Reader::optional_field(s, "costRate")) st.cost_rate = Reader::rational(*rate, path + "/costRate");
    st.comment = Reader::comment(s, path);
    st.box = Reader::rect(Reader::field(s, path, "box"), path + "/box");
    if (!c.states.emplace(st.id, st).second) Reader::fail(path + "/id", "duplicate state id");
  }

  if (auto trans = Reader::optional_field(doc, "transitions")) {
    if (!trans->is_array()) throw SchemaViolation("transitions", "expected an array");
    for (std::size_t i = 0; i < trans->size(); ++i) {
      const json& t = (*trans)[i];
      std::string path = "transitions/" + std::to_string(i);
      Transition tr;
      tr.id = Reader::integer(Reader::field(t, path, "id"), path + "/id");
      path = "transitions/" + std::to_string(tr.id);
      tr.source = Reader::integer(Reader::field(t, path, "source"), path + "/source");
      std::string label_text = Reader::text(Reader::field(t, path, "label"), path + "/label");
      TransitionLabel label;
      try {
        label = parse_label(label_text);
      } catch (const SyntaxError& e) {
        Reader::fail(path + "/label", e.what());
      }
      tr.trigger = label.trigger;
      tr.guard = label.guard;
      tr.body = parse_tree(Reader::field(t, path, "body"), path + "/body", true);
      if (tr.body.kind == TransitionTree::Kind::Goto) {
        tr.body.actions = label.actions;
        tr.body.cost = label.cost.value_or(Rational(0));
      } else if (!label.actions.empty() || label.cost) {
        Reader::fail(path + "/label", "actions and cost of a branching transition belong to its branches");
      }
      tr.comment = Reader::comment(t, path);
      if (!c.transitions.emplace(tr.id, tr).second) Reader::fail(path + "/id", "duplicate transition id");
    }
  }

  if (auto qs = Reader::optional_field(doc, "queries")) {
    if (!qs->is_array()) throw SchemaViolation("queries", "expected an array");
    for (std::size_t i = 0; i < qs->size(); ++i) {
      const json& q = (*qs)[i];
      std::string path = "queries/" + std::to_string(i);
      Query query;
      query.id = Reader::integer(Reader::field(q, path, "id"), path + "/id");
      std::string kind = Reader::text(Reader::field(q, path, "kind"), path + "/kind");
      auto k = parse_query_kind(kind);
      if (!k) Reader::fail(path + "/kind", "expected Pmin, Pmax, Emin or Emax");
      query.kind = *k;
      query.target = Reader::integer(Reader::field(q, path, "target"), path + "/target");
      query.attached_to = Reader::integer(Reader::field(q, path, "attachedTo"), path + "/attachedTo");
      c.queries.push_back(query);
    }
  }

  if (auto labels = Reader::optional_field(doc, "labels")) {
    if (!labels->is_object()) throw SchemaViolation("labels", "expected an object keyed by connection id");
    for (auto it = labels->begin(); it != labels->end(); ++it)
      c.manual_labels[it.key()] = Reader::rect(it.value(), "labels/" + it.key());
  }
  return c;
}

Chart parse_chart(std::string_view text) {
  Chart c = parse_chart_unchecked(text);
  auto diags = validate(c);
  if (has_errors(diags)) {
    std::vector<Diagnostic> errors;
    for (auto& d : diags)
      if (d.severity == Severity::Error) errors.push_back(d);
    throw InvariantViolation(std::move(errors));
  }
  return c;
}

// ---------------------------------------------------------------- serialization

namespace {

using ojson = nlohmann::ordered_json;

// Integral coordinates are written without a fraction.
ojson num(double v) {
  if (std::nearbyint(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  return v;
}
ojson rect_json(const Rect& r) { return ojson{{"x", num(r.x)}, {"y", num(r.y)}, {"w", num(r.w)}, {"h", num(r.h)}}; }
ojson point_json(const Point& p) { return ojson::array({num(p.x), num(p.y)}); }

ojson tree_json(const TransitionTree& t, bool top_level) {
  ojson j;
  if (t.kind == TransitionTree::Kind::Goto) {
    j["kind"] = "goto";
    j["target"] = t.target;
    if (!t.waypoints.empty()) {
      ojson w = ojson::array();
      for (const auto& p : t.waypoints) w.push_back(point_json(p));
      j["waypoints"] = w;
    }
    if (!top_level && !t.actions.empty()) j["actions"] = to_string(std::span<const Assignment>(t.actions));
    if (!top_level && !t.cost.is_zero()) j["cost"] = t.cost.to_string();
    return j;
  }
  bool prob = t.kind == TransitionTree::Kind::Prob;
  j["kind"] = prob ? "prob" : "cond";
  j["node"] = t.node;
  j["at"] = point_json(t.at);
  ojson branches = ojson::array();
  for (const auto& b : t.branches) {
    ojson bj;
    if (prob) bj["prob"] = b.prob.to_string();
    else bj["guard"] = to_string(*b.guard);
    bj["then"] = tree_json(b.tree, false);
    branches.push_back(bj);
  }
  j["branches"] = branches;
  if (t.has_else()) j["else"] = tree_json(t.otherwise.front(), false);
  return j;
}

TransitionLabel top_label(const Transition& t) {
  TransitionLabel l{t.trigger, t.guard, {}, std::nullopt};
  if (t.body.kind == TransitionTree::Kind::Goto) {
    l.actions = t.body.actions;
    if (!t.body.cost.is_zero()) l.cost = t.body.cost;
  }
  return l;
}

}  // namespace

std::string serialize_chart(const Chart& c) {
  ojson doc;
  doc["formatVersion"] = 1;
  doc["name"] = c.name;
  doc["root"] = c.root;
  doc["nextId"] = c.next_id;
  ojson states = ojson::array();
  for (const auto& [id, s] : c.states) {
    ojson j;
    j["id"] = id;
    j["name"] = s.name;
    j["kind"] = std::string(to_string(s.kind));
    j["box"] = rect_json(s.box);
    if (!s.children.empty()) j["children"] = s.children;
    if (s.initial) j["initial"] = *s.initial;
    if (!s.variables.empty()) {
      ojson vars = ojson::array();
      for (const auto& v : s.variables) {
        ojson vj;
        vj["name"] = v.name;
        vj["type"] = v.type.kind == VarType::Kind::Bool ? "bool" : "int";
        vj["init"] = to_string(v.init);
        if (v.type.kind == VarType::Kind::Int) {
          vj["lo"] = v.type.lo;
          vj["hi"] = v.type.hi;
        }
        if (v.comment) vj["comment"] = *v.comment;
        vars.push_back(vj);
      }
      j["variables"] = vars;
    }
    if (s.invariant) j["invariant"] = to_string(*s.invariant);
    if (s.cost_rate) j["costRate"] = s.cost_rate->to_string();
    if (s.comment) j["comment"] = *s.comment;
    states.push_back(j);
  }
  doc["states"] = states;
  ojson trans = ojson::array();
  for (const auto& [id, t] : c.transitions) {
    ojson j;
    j["id"] = id;
    j["source"] = t.source;
    j["label"] = to_string(top_label(t));
    j["body"] = tree_json(t.body, true);
    if (t.comment) j["comment"] = *t.comment;
    trans.push_back(j);
  }
  doc["transitions"] = trans;
  ojson queries = ojson::array();
  std::vector<Query> qs = c.queries;
  std::sort(qs.begin(), qs.end(), [](const Query& a, const Query& b) { return a.id < b.id; });
  for (const auto& q : qs)
    queries.push_back(ojson{{"id", q.id}, {"kind", std::string(to_string(q.kind))}, {"target", q.target}, {"attachedTo", q.attached_to}});
  doc["queries"] = queries;
  if (!c.manual_labels.empty()) {
    ojson labels = ojson::object();
    for (const auto& [k, r] : c.manual_labels) labels[k] = rect_json(r);
    doc["labels"] = labels;
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- validation

TypeEnv scope_env(const Chart& chart, StateId s) {
  TypeEnv env;
  for (StateId id : chart.path_from_root(s))
    for (const auto& v : chart.state(id).variables) env[v.name] = v.type;
  return env;
}

Expr accumulated_invariant(const Chart& chart, StateId s) {
  if (!chart.has_state(s)) throw UnknownState("#" + std::to_string(s));
  std::vector<Expr> parts;
  for (StateId id : chart.path_from_root(s))
    if (const auto& inv = chart.state(id).invariant) parts.push_back(*inv);
  return Expr::conj(parts);
}

namespace {

class Validator {
 public:
  explicit Validator(const Chart& c) : c_(c) {}

  std::vector<Diagnostic> run() {
    if (!is_identifier(c_.name)) error("chart", "chart-name", "chart name '" + c_.name + "' is not an identifier");
    if (!check_tree()) return out_;
    for (StateId id : order_) check_state(id);
    for (const auto& [id, t] : c_.transitions) check_transition(t);
    check_queries();
    check_ids();
    check_labels();
    return out_;
  }

 private:
  void error(std::string obj, std::string rule, std::string msg) {
    out_.push_back({Severity::Error, std::move(obj), std::move(msg), std::move(rule)});
  }

  std::string sname(StateId id) const {
    auto it = c_.states.find(id);
    return it == c_.states.end() ? "#" + std::to_string(id) : it->second.name;
  }

  bool check_tree() {
    if (c_.states.empty()) {
      error("chart", "root", "chart has no states");
      return false;
    }
    if (!c_.has_state(c_.root)) {
      error("chart", "root", "root state #" + std::to_string(c_.root) + " does not exist");
      return false;
    }
    bool ok = true;
    std::map<StateId, std::vector<StateId>> parents;
    for (const auto& [id, s] : c_.states) {
      if (s.id != id) {
        error(state_object_id(id), "state-id", "state id field does not match its key");
        ok = false;
      }
      for (StateId ch : s.children) {
        if (!c_.has_state(ch)) {
          error(state_object_id(id), "child-resolves", "child #" + std::to_string(ch) + " of " + s.name + " does not exist");
          ok = false;
        } else {
          parents[ch].push_back(id);
        }
      }
    }
    for (const auto& [id, s] : c_.states) {
      std::size_t n = parents[id].size();
      if (id == c_.root && n != 0) {
        error(state_object_id(id), "root-parent", "root state " + s.name + " has a parent");
        ok = false;
      } else if (id != c_.root && n != 1) {
        error(state_object_id(id), "single-parent",
              "state " + s.name + (n == 0 ? " is not a child of any state" : " has several parents"));
        ok = false;
      }
    }
    if (!ok) return false;
    // cycles and reachability
    std::set<StateId> seen;
    std::vector<StateId> stack{c_.root};
    while (!stack.empty()) {
      StateId id = stack.back();
      stack.pop_back();
      if (!seen.insert(id).second) {
        error(state_object_id(id), "acyclic", "state " + sname(id) + " is part of a cycle");
        return false;
      }
      order_.push_back(id);
      const auto& ch = c_.state(id).children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    for (const auto& [id, s] : c_.states) {
      if (!seen.count(id)) {
        error(state_object_id(id), "acyclic", "state " + s.name + " is not reachable from the root");
        ok = false;
      }
    }
    for (const auto& [ch, ps] : parents)
      if (!ps.empty()) parent_[ch] = ps.front();
    return ok;
  }

  std::vector<StateId> path(StateId id) const {
    std::vector<StateId> p{id};
    for (auto it = parent_.find(id); it != parent_.end(); it = parent_.find(it->second)) p.push_back(it->second);
    std::reverse(p.begin(), p.end());
    return p;
  }

  TypeEnv env_of(StateId id) const {
    TypeEnv env;
    for (StateId s : path(id))
      for (const auto& v : c_.state(s).variables) env[v.name] = v.type;
    return env;
  }

  void check_state(StateId id) {
    const State& s = c_.state(id);
    std::string obj = state_object_id(id);
    if (!is_identifier(s.name)) error(obj, "state-name", "state name '" + s.name + "' is not an identifier");
    std::set<std::string> names;
    for (StateId ch : s.children)
      if (!names.insert(c_.state(ch).name).second)
        error(state_object_id(ch), "sibling-names", "name clash: two children of " + s.name + " are named " + c_.state(ch).name);
    switch (s.kind) {
      case StateKind::Basic:
        if (!s.children.empty()) error(obj, "basic-leaf", "basic state " + s.name + " has children");
        if (s.initial) error(obj, "initial", "basic state " + s.name + " has an initial child");
        break;
      case StateKind::Xor:
        if (s.children.empty()) error(obj, "xor-children", "xor state " + s.name + " has no children");
        if (!s.initial || std::find(s.children.begin(), s.children.end(), *s.initial) == s.children.end())
          error(obj, "initial", "xor state " + s.name + " needs an initial state among its children");
        break;
      case StateKind::And:
        if (s.children.size() < 2) error(obj, "and-children", "and state " + s.name + " needs at least two regions");
        if (s.initial) error(obj, "initial", "and state " + s.name + " has an initial child");
        for (StateId ch : s.children)
          if (c_.state(ch).kind == StateKind::And)
            error(state_object_id(ch), "and-regions", "region " + c_.state(ch).name + " of and state " + s.name + " must be xor or basic");
        break;
    }
    if (!(s.box.w > 0 && s.box.h > 0)) error(obj, "box", "state " + s.name + " has an empty box");
    for (std::size_t i = 0; i < s.children.size(); ++i) {
      const State& a = c_.state(s.children[i]);
      if (!contains(s.box, a.box)) error(state_object_id(a.id), "box-contained", "box of " + a.name + " is not inside " + s.name);
      for (std::size_t j = i + 1; j < s.children.size(); ++j) {
        const State& b = c_.state(s.children[j]);
        if (overlaps(a.box, b.box))
          error(state_object_id(b.id), "box-disjoint", "boxes of " + a.name + " and " + b.name + " overlap");
      }
    }
    // variables
    TypeEnv outer;
    if (auto p = parent_.find(id); p != parent_.end()) outer = env_of(p->second);
    std::set<std::string> own;
    for (const auto& v : s.variables) {
      if (!is_identifier(v.name)) error(obj, "var-name", "variable name '" + v.name + "' is not an identifier");
      if (!own.insert(v.name).second) error(obj, "var-unique", "variable " + v.name + " declared twice in " + s.name);
      else if (outer.count(v.name)) error(obj, "var-shadow", "variable " + v.name + " in " + s.name + " shadows an outer declaration");
      if (v.type.kind == VarType::Kind::Int && v.type.lo > v.type.hi)
        error(obj, "var-range", "variable " + v.name + " has an empty range");
      if (!free_variables(v.init).empty()) {
        error(obj, "var-init", "initial value of " + v.name + " must be constant");
        continue;
      }
      try {
        Value init = eval_constant(v.init);
        bool is_bool = std::holds_alternative<bool>(init);
        if (is_bool != (v.type.kind == VarType::Kind::Bool)) {
          error(obj, "var-init", "initial value of " + v.name + " has the wrong type");
        } else if (!is_bool) {
          std::int64_t x = std::get<std::int64_t>(init);
          if (x < v.type.lo || x > v.type.hi)
            error(obj, "var-init", "initial value " + std::to_string(x) + " of " + v.name + " is outside its range");
        }
      } catch (const Error& e) {
        error(obj, "var-init", "initial value of " + v.name + ": " + e.what());
      }
    }
    if (s.invariant) check_bool(*s.invariant, env_of(id), obj, "invariant", "invariant of " + s.name);
    if (s.cost_rate && *s.cost_rate < Rational(0)) error(obj, "cost-rate", "cost rate of " + s.name + " is negative");
  }

  void check_bool(const Expr& e, const TypeEnv& env, const std::string& obj, const std::string& rule, const std::string& what) {
    try {
      if (typecheck(e, env) != ExprType::Bool) error(obj, rule, what + " must be boolean");
    } catch (const Error& ex) {
      error(obj, rule, what + ": " + ex.what());
    }
  }

  // lowest state that is a strict ancestor of both
  std::optional<StateId> scope_of(StateId a, StateId b) const {
    auto pa = path(a);
    auto pb = path(b);
    std::optional<StateId> common;
    for (std::size_t i = 0; i < std::min(pa.size(), pb.size()); ++i) {
      if (pa[i] != pb[i]) break;
      if (pa[i] == a || pa[i] == b) break;
      common = pa[i];
    }
    return common;
  }

  void check_tree_body(const Transition& t, const TransitionTree& tree, const TypeEnv& env, const std::string& obj,
                       bool under_prob = false) {
    switch (tree.kind) {
      case TransitionTree::Kind::Goto: {
        if (!c_.has_state(tree.target)) {
          error(obj, "target-resolves", "target #" + std::to_string(tree.target) + " does not exist");
          return;
        }
        if (tree.target == c_.root) {
          error(obj, "target-root", "the root state cannot be a transition target");
          return;
        }
        if (c_.has_state(t.source) && t.source != c_.root) {
          auto scope = scope_of(t.source, tree.target);
          if (scope && c_.state(*scope).kind == StateKind::And)
            error(obj, "crosses-regions", "transition from " + sname(t.source) + " to " + sname(tree.target) + " crosses concurrent regions");
        }
        std::set<std::string> targets;
        for (const auto& a : tree.actions) {
          if (!targets.insert(a.target).second) error(obj, "action-distinct", "variable " + a.target + " assigned twice");
          auto it = env.find(a.target);
          if (it == env.end()) {
            error(obj, "action-scope", "assignment to undeclared variable " + a.target);
            continue;
          }
          try {
            ExprType want = it->second.kind == VarType::Kind::Bool ? ExprType::Bool : ExprType::Int;
            if (typecheck(a.value, env) != want) error(obj, "action-type", "assignment to " + a.target + " has the wrong type");
          } catch (const Error& ex) {
            error(obj, "action-type", "assignment to " + a.target + ": " + ex.what());
          }
        }
        if (tree.cost < Rational(0)) error(obj, "cost", "transition cost is negative");
        return;
      }
      case TransitionTree::Kind::Prob:
      case TransitionTree::Kind::Cond: {
        std::string pobj = pseudo_object_id(tree.node);
        pseudo_ids_.push_back(tree.node);
        if (tree.branches.empty()) error(pobj, "branches", "pseudo-state has no branches");
        if (tree.kind == TransitionTree::Kind::Prob) {
          Rational sum;
          for (const auto& b : tree.branches) {
            if (b.prob <= Rational(0) || b.prob > Rational(1))
              error(pobj, "prob-range", "branch probability " + b.prob.to_string() + " is outside (0, 1]");
            sum += b.prob;
          }
          if (!tree.branches.empty() && sum != Rational(1))
            error(pobj, "prob-sum", "probabilities sum to " + sum.to_decimal_or_fraction() + " instead of 1");
        } else {
          if (under_prob && !tree.has_else())
            error(pobj, "cond-else", "a conditional node inside a probabilistic branch needs an else branch");
          for (const auto& b : tree.branches) {
            if (!b.guard) error(pobj, "cond-guard", "conditional branch without guard");
            else check_bool(*b.guard, env, pobj, "cond-guard", "branch guard");
          }
        }
        bool prob = under_prob || tree.kind == TransitionTree::Kind::Prob;
        for (const auto& b : tree.branches) check_tree_body(t, b.tree, env, obj, prob);
        for (const auto& e : tree.otherwise) check_tree_body(t, e, env, obj, prob);
        return;
      }
    }
  }

  void check_transition(const Transition& t) {
    std::string obj = transition_object_id(t.id);
    if (t.id != c_.transitions.at(t.id).id) error(obj, "trans-id", "transition id field does not match its key");
    if (!c_.has_state(t.source)) {
      error(obj, "source-resolves", "source #" + std::to_string(t.source) + " does not exist");
      return;
    }
    if (t.source == c_.root) error(obj, "source-root", "the root state cannot be a transition source");
    if (t.trigger.kind == Trigger::Kind::Event) {
      if (t.trigger.event == "tick") error(obj, "event-name", "'tick' is the builtin clock event");
      else if (!is_identifier(t.trigger.event)) error(obj, "event-name", "event name is not an identifier");
    }
    if ((t.trigger.kind == Trigger::Kind::AfterNondet || t.trigger.kind == Trigger::Kind::AfterUniform) &&
        (t.trigger.lo <= 0 || t.trigger.lo > t.trigger.hi))
      error(obj, "timing", "timing interval must satisfy 0 < lo <= hi");
    if (t.trigger.kind == Trigger::Kind::After && t.trigger.lo <= 0) error(obj, "timing", "delay must be positive");
    if (t.trigger.kind == Trigger::Kind::AfterUniform) {
      int n = 0;
      for (const auto& [id, o] : c_.transitions)
        if (o.source == t.source && o.trigger.kind == Trigger::Kind::AfterUniform) ++n;
      if (n > 1 && t.id == first_uniform(t.source))
        error(state_object_id(t.source), "uniform-per-state", "state " + sname(t.source) + " has more than one uniform delay");
    }
    TypeEnv env = env_of(t.source);
    if (t.guard) check_bool(*t.guard, env, obj, "guard", "guard");
    check_tree_body(t, t.body, env, obj);
  }

  TransId first_uniform(StateId source) const {
    for (const auto& [id, o] : c_.transitions)
      if (o.source == source && o.trigger.kind == Trigger::Kind::AfterUniform) return id;
    return -1;
  }

  void check_queries() {
    for (const auto& q : c_.queries) {
      std::string obj = "q" + std::to_string(q.id);
      if (!c_.has_state(q.target)) error(obj, "query-target", "query target #" + std::to_string(q.target) + " does not exist");
      if (!c_.has_state(q.attached_to)) error(obj, "query-attached", "query is attached to a missing state");
    }
  }

  void check_ids() {
    std::map<std::int64_t, int> count;
    std::int64_t max_id = 0;
    auto note = [&](std::int64_t id) {
      ++count[id];
      max_id = std::max(max_id, id);
    };
    for (const auto& [id, s] : c_.states) note(id);
    for (const auto& [id, t] : c_.transitions) note(id);
    for (PseudoId p : pseudo_ids_) note(p);
    for (const auto& q : c_.queries) note(q.id);
    for (const auto& [id, n] : count) {
      if (n > 1) error("chart", "unique-id", "id " + std::to_string(id) + " is used by several objects");
      if (id <= 0) error("chart", "positive-id", "id " + std::to_string(id) + " is not positive");
    }
    if (c_.next_id <= max_id) error("chart", "next-id", "nextId must exceed every allocated id");
  }

  void check_labels() {
    if (c_.manual_labels.empty()) return;
    std::set<std::string> ids;
    for (const auto& conn : connections(c_)) ids.insert(conn.id);
    for (const auto& [k, r] : c_.manual_labels) {
      if (!ids.count(k)) error(k, "label-connection", "manual label for unknown connection " + k);
      if (!(r.w > 0 && r.h > 0)) error(k, "label-rect", "manual label rectangle is empty");
    }
  }

  const Chart& c_;
  std::vector<Diagnostic> out_;
  std::vector<StateId> order_;
  std::map<StateId, StateId> parent_;
  std::vector<PseudoId> pseudo_ids_;
};

}  // namespace

std::vector<Diagnostic> validate(const Chart& chart) {
  try {
    return Validator(chart).run();
  } catch (const std::exception& e) {
    return {{Severity::Error, "chart", std::string("validation aborted: ") + e.what(), "internal"}};
  }
}

// ---------------------------------------------------------------- connections

namespace {

std::string action_suffix(const TransitionTree& t) {
  if (t.kind != TransitionTree::Kind::Goto) return {};
  std::string s;
  if (!t.actions.empty()) s += " / " + to_string(std::span<const Assignment>(t.actions));
  if (!t.cost.is_zero()) s += " $ " + t.cost.to_string();
  return s;
}

void endpoint(Connection& c, const TransitionTree& t) {
  if (t.kind == TransitionTree::Kind::Goto) {
    c.to_state = t.target;
    c.waypoints = t.waypoints;
  } else {
    c.to_pseudo = t.node;
  }
}

void walk_branches(const Transition& tr, const TransitionTree& t, std::vector<Connection>& out) {
  if (t.kind == TransitionTree::Kind::Goto) return;
  bool prob = t.kind == TransitionTree::Kind::Prob;
  auto emit = [&](std::size_t index, const TransitionTree& child, std::string head) {
    Connection c;
    c.id = "c" + std::to_string(t.node) + "." + std::to_string(index);
    c.transition = tr.id;
    c.from_state = tr.source;
    c.from_pseudo = t.node;
    endpoint(c, child);
    c.label = std::move(head) + action_suffix(child);
    out.push_back(std::move(c));
    walk_branches(tr, child, out);
  };
  for (std::size_t i = 0; i < t.branches.size(); ++i) {
    const Branch& b = t.branches[i];
    emit(i, b.tree, prob ? b.prob.to_string() : "[" + (b.guard ? to_string(*b.guard) : std::string("?")) + "]");
  }
  if (t.has_else()) emit(t.branches.size(), t.otherwise.front(), "[else]");
}

void walk_pseudo(const Transition& tr, const TransitionTree& t, std::vector<PseudoNode>& out) {
  if (t.kind == TransitionTree::Kind::Goto) return;
  out.push_back({t.node, tr.id, t.kind == TransitionTree::Kind::Prob, t.at});
  for (const auto& b : t.branches) walk_pseudo(tr, b.tree, out);
  for (const auto& e : t.otherwise) walk_pseudo(tr, e, out);
}

}  // namespace

std::vector<Connection> connections(const Chart& chart) {
  std::vector<Connection> out;
  for (const auto& [id, t] : chart.transitions) {
    Connection c;
    c.id = "c" + std::to_string(id);
    c.transition = id;
    c.from_state = t.source;
    endpoint(c, t.body);
    c.label = to_string(top_label(t));
    out.push_back(std::move(c));
    walk_branches(t, t.body, out);
  }
  return out;
}

std::vector<PseudoNode> pseudo_nodes(const Chart& chart) {
  std::vector<PseudoNode> out;
  for (const auto& [id, t] : chart.transitions) walk_pseudo(t, t.body, out);
  return out;
}

Transition make_transition(TransId id, StateId source, std::string_view label, const nlohmann::json& body) {
  Transition tr;
  tr.id = id;
  tr.source = source;
  TransitionLabel l = parse_label(label);
  tr.trigger = l.trigger;
  tr.guard = l.guard;
  tr.body = parse_tree(body, "body", true);
  if (tr.body.kind == TransitionTree::Kind::Goto) {
    tr.body.actions = l.actions;
    tr.body.cost = l.cost.value_or(Rational(0));
  } else if (!l.actions.empty() || l.cost) {
    throw SchemaViolation("label", "actions and cost of a branching transition belong to its branches");
  }
  return tr;
}

std::string label_text(const Transition& t) { return to_string(top_label(t)); }

nlohmann::json body_json(const TransitionTree& body) { return nlohmann::json::parse(tree_json(body, true).dump()); }

}  // namespace pchart
