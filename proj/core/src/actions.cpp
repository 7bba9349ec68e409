#include "pchart/actions.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace pchart {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& why) { throw SchemaViolation(path, why); }

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(key, "missing field");
  return *it;
}

std::int64_t id_of(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_integer()) bad(key, "expected an integer id");
  return v.get<std::int64_t>();
}

std::string text_of(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

Rect rect_of(const json& v, const char* key) {
  if (!v.is_object()) bad(key, "expected a rectangle {x, y, w, h}");
  auto n = [&](const char* k) {
    const json& x = need(v, k);
    if (!x.is_number()) bad(std::string(key) + "/" + k, "expected a number");
    return x.get<double>();
  };
  return {n("x"), n("y"), n("w"), n("h")};
}

json rect_json(const Rect& r) { return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

StateKind kind_of(const std::string& s) {
  if (s == "basic") return StateKind::Basic;
  if (s == "xor") return StateKind::Xor;
  if (s == "and") return StateKind::And;
  bad("kind", "expected basic, xor or and");
}

Diagnostic error(std::string object, std::string message, std::string rule) {
  return {Severity::Error, std::move(object), std::move(message), std::move(rule)};
}

struct Rejected {
  Diagnostic d;
};

State& state_or_reject(Chart& c, StateId id) {
  if (!c.has_state(id)) throw Rejected{error(state_object_id(id), "no state with id " + std::to_string(id), "unknown-object")};
  return c.state(id);
}

Transition& transition_or_reject(Chart& c, TransId id) {
  auto it = c.transitions.find(id);
  if (it == c.transitions.end())
    throw Rejected{error(transition_object_id(id), "no transition with id " + std::to_string(id), "unknown-object")};
  return it->second;
}

void allocate_nodes(Chart& c, TransitionTree& t) {
  if (t.kind == TransitionTree::Kind::Goto) return;
  if (t.node == 0) t.node = c.allocate_id();
  for (auto& b : t.branches) allocate_nodes(c, b.tree);
  for (auto& e : t.otherwise) allocate_nodes(c, e);
}

bool targets_any(const TransitionTree& t, const std::set<StateId>& ids) {
  if (t.kind == TransitionTree::Kind::Goto) return ids.count(t.target) != 0;
  for (const auto& b : t.branches)
    if (targets_any(b.tree, ids)) return true;
  for (const auto& e : t.otherwise)
    if (targets_any(e, ids)) return true;
  return false;
}

void translate_tree(TransitionTree& t, double dx, double dy) {
  for (auto& w : t.waypoints) w = {w.x + dx, w.y + dy};
  if (t.kind != TransitionTree::Kind::Goto) t.at = {t.at.x + dx, t.at.y + dy};
  for (auto& b : t.branches) translate_tree(b.tree, dx, dy);
  for (auto& e : t.otherwise) translate_tree(e, dx, dy);
}

void drop_stale_labels(Chart& c) {
  std::set<std::string> live;
  for (const auto& conn : connections(c)) live.insert(conn.id);
  for (auto it = c.manual_labels.begin(); it != c.manual_labels.end();)
    it = live.count(it->first) ? std::next(it) : c.manual_labels.erase(it);
}

struct Reducer {
  Chart& c;

  void operator()(const act::AddState& a) {
    State& parent = state_or_reject(c, a.parent);
    State s;
    s.id = c.allocate_id();
    s.name = a.name ? *a.name : "S" + std::to_string(s.id);
    s.kind = a.kind;
    s.box = a.box;
    if (a.kind == StateKind::Xor)
      throw Rejected{error(state_object_id(s.id), "a new xor state needs children; add it as basic first", "xor-children")};
    if (parent.kind == StateKind::Basic) parent.kind = StateKind::Xor;
    parent.children.push_back(s.id);
    if (parent.kind == StateKind::Xor && !parent.initial) parent.initial = s.id;
    c.states.emplace(s.id, std::move(s));
  }

  void operator()(const act::RenameState& a) { state_or_reject(c, a.id).name = a.name; }

  void operator()(const act::MoveState& a) {
    State& s = state_or_reject(c, a.id);
    double dx = a.box.x - s.box.x, dy = a.box.y - s.box.y;
    bool pure_move = a.box.w == s.box.w && a.box.h == s.box.h;
    s.box = a.box;
    if (!pure_move) return;
    std::set<StateId> moved;
    std::function<void(StateId)> walk = [&](StateId id) {
      moved.insert(id);
      for (StateId ch : c.state(id).children) {
        Rect& b = c.state(ch).box;
        b.x += dx;
        b.y += dy;
        walk(ch);
      }
    };
    walk(a.id);
    // transitions wholly inside the moved subtree keep their shape
    std::set<StateId> outside;
    for (const auto& [sid, st] : c.states)
      if (!moved.count(sid)) outside.insert(sid);
    std::set<TransId> inner;
    for (auto& [id, t] : c.transitions) {
      if (!moved.count(t.source) || targets_any(t.body, outside)) continue;
      translate_tree(t.body, dx, dy);
      inner.insert(id);
    }
    for (const auto& conn : connections(c)) {
      auto it = c.manual_labels.find(conn.id);
      if (it == c.manual_labels.end() || !inner.count(conn.transition)) continue;
      it->second.x += dx;
      it->second.y += dy;
    }
  }

  void operator()(const act::DeleteState& a) {
    state_or_reject(c, a.id);
    if (a.id == c.root) throw Rejected{error(state_object_id(a.id), "the root state cannot be deleted", "root")};
    std::set<StateId> gone;
    std::function<void(StateId)> walk = [&](StateId id) {
      gone.insert(id);
      for (StateId ch : c.state(id).children) walk(ch);
    };
    walk(a.id);
    StateId pid = *c.parent(a.id);
    State& parent = c.state(pid);
    parent.children.erase(std::remove(parent.children.begin(), parent.children.end(), a.id), parent.children.end());
    if (parent.initial == a.id) parent.initial = parent.children.empty() ? std::nullopt : std::optional(parent.children.front());
    if (parent.children.empty() && parent.kind == StateKind::Xor) {
      parent.kind = StateKind::Basic;
      parent.initial.reset();
    }
    for (StateId s : gone) c.states.erase(s);
    for (auto it = c.transitions.begin(); it != c.transitions.end();)
      it = gone.count(it->second.source) || targets_any(it->second.body, gone) ? c.transitions.erase(it) : std::next(it);
    c.queries.erase(std::remove_if(c.queries.begin(), c.queries.end(),
                                   [&](const Query& q) { return gone.count(q.target) || gone.count(q.attached_to); }),
                    c.queries.end());
    drop_stale_labels(c);
  }

  void operator()(const act::AddTransition& a) {
    state_or_reject(c, a.source);
    TransId id = c.allocate_id();
    Transition t;
    try {
      t = make_transition(id, a.source, a.label, a.body);
    } catch (const SyntaxError& e) {
      throw Rejected{error(transition_object_id(id), e.what(), "syntax")};
    } catch (const SchemaViolation& e) {
      throw Rejected{error(transition_object_id(id), e.what(), "schema")};
    }
    allocate_nodes(c, t.body);
    c.transitions.emplace(id, std::move(t));
  }

  void operator()(const act::EditLabel& a) {
    Transition& t = transition_or_reject(c, a.id);
    Transition n;
    try {
      n = make_transition(t.id, t.source, a.label, body_json(t.body));
    } catch (const SyntaxError& e) {
      throw Rejected{error(transition_object_id(t.id), e.what(), "syntax")};
    } catch (const SchemaViolation& e) {
      throw Rejected{error(transition_object_id(t.id), e.what(), "schema")};
    }
    n.comment = t.comment;
    t = std::move(n);
  }

  void operator()(const act::MoveLabelManual& a) {
    bool found = false;
    for (const auto& conn : connections(c)) found = found || conn.id == a.connection;
    if (!found) throw Rejected{error(a.connection, "no connection " + a.connection, "unknown-object")};
    if (a.rect) c.manual_labels[a.connection] = *a.rect;
    else c.manual_labels.erase(a.connection);
  }

  void operator()(const act::SetInvariant& a) {
    State& s = state_or_reject(c, a.id);
    if (a.text.find_first_not_of(" \t\n") == std::string::npos) {
      s.invariant.reset();
      return;
    }
    try {
      s.invariant = parse_expr(a.text);
    } catch (const SyntaxError& e) {
      throw Rejected{error(state_object_id(a.id), e.what(), "syntax")};
    }
  }

  void operator()(const act::SetVariable& a) {
    State& s = state_or_reject(c, a.state);
    std::optional<VarDeclSyntax> d;
    try {
      d = parse_var_decl(a.decl);
    } catch (const SyntaxError& e) {
      throw Rejected{error(state_object_id(a.state), e.what(), "syntax")};
    }
    VarDecl v{d->name, d->type, d->init, a.comment};
    auto it = std::find_if(s.variables.begin(), s.variables.end(), [&](const VarDecl& x) { return x.name == d->name; });
    if (it != s.variables.end()) *it = std::move(v);
    else s.variables.push_back(std::move(v));
  }

  void operator()(const act::RemoveVariable& a) {
    State& s = state_or_reject(c, a.state);
    auto it = std::find_if(s.variables.begin(), s.variables.end(), [&](const VarDecl& x) { return x.name == a.name; });
    if (it == s.variables.end())
      throw Rejected{error(state_object_id(a.state), "no variable '" + a.name + "' in this state", "unknown-object")};
    s.variables.erase(it);
  }

  void operator()(const act::AddQuery& a) { c.queries.push_back({c.allocate_id(), a.kind, a.target, a.attached_to}); }

  void operator()(const act::DeleteQuery& a) {
    auto it = std::find_if(c.queries.begin(), c.queries.end(), [&](const Query& q) { return q.id == a.id; });
    if (it == c.queries.end()) throw Rejected{error("q" + std::to_string(a.id), "no such query", "unknown-object")};
    c.queries.erase(it);
  }

  void operator()(const act::DeleteTransition& a) {
    transition_or_reject(c, a.id);
    c.transitions.erase(a.id);
    drop_stale_labels(c);
  }
};

}  // namespace

EditorAction action_from_json(const json& j) {
  if (!j.is_object()) bad("", "an action must be a JSON object");
  std::string type = text_of(j, "type");
  if (type == "AddState") {
    act::AddState a{id_of(j, "parent"), kind_of(text_of(j, "kind")), rect_of(need(j, "box"), "box"), std::nullopt};
    if (j.contains("name")) a.name = text_of(j, "name");
    return a;
  }
  if (type == "RenameState") return act::RenameState{id_of(j, "id"), text_of(j, "name")};
  if (type == "MoveState") return act::MoveState{id_of(j, "id"), rect_of(need(j, "box"), "box")};
  if (type == "DeleteState") return act::DeleteState{id_of(j, "id")};
  if (type == "AddTransition") return act::AddTransition{id_of(j, "source"), text_of(j, "label"), need(j, "body")};
  if (type == "EditLabel") return act::EditLabel{id_of(j, "id"), text_of(j, "label")};
  if (type == "MoveLabelManual") {
    act::MoveLabelManual a{text_of(j, "connection"), std::nullopt};
    if (j.contains("rect") && !j["rect"].is_null()) a.rect = rect_of(j["rect"], "rect");
    return a;
  }
  if (type == "SetInvariant") return act::SetInvariant{id_of(j, "id"), text_of(j, "text")};
  if (type == "SetVariable") {
    act::SetVariable a{id_of(j, "state"), text_of(j, "decl"), std::nullopt};
    if (j.contains("comment") && !j["comment"].is_null()) a.comment = text_of(j, "comment");
    return a;
  }
  if (type == "RemoveVariable") return act::RemoveVariable{id_of(j, "state"), text_of(j, "name")};
  if (type == "AddQuery") {
    auto k = parse_query_kind(text_of(j, "kind"));
    if (!k) bad("kind", "expected Pmin, Pmax, Emin or Emax");
    return act::AddQuery{*k, id_of(j, "target"), id_of(j, "attachedTo")};
  }
  if (type == "DeleteQuery") return act::DeleteQuery{id_of(j, "id")};
  if (type == "DeleteTransition") return act::DeleteTransition{id_of(j, "id")};
  bad("type", "unknown action type '" + type + "'");
}

json to_json(const EditorAction& a) {
  struct V {
    json operator()(const act::AddState& a) const {
      json j{{"type", "AddState"}, {"parent", a.parent}, {"kind", std::string(to_string(a.kind))}, {"box", rect_json(a.box)}};
      if (a.name) j["name"] = *a.name;
      return j;
    }
    json operator()(const act::RenameState& a) const { return {{"type", "RenameState"}, {"id", a.id}, {"name", a.name}}; }
    json operator()(const act::MoveState& a) const { return {{"type", "MoveState"}, {"id", a.id}, {"box", rect_json(a.box)}}; }
    json operator()(const act::DeleteState& a) const { return {{"type", "DeleteState"}, {"id", a.id}}; }
    json operator()(const act::AddTransition& a) const {
      return {{"type", "AddTransition"}, {"source", a.source}, {"label", a.label}, {"body", a.body}};
    }
    json operator()(const act::EditLabel& a) const { return {{"type", "EditLabel"}, {"id", a.id}, {"label", a.label}}; }
    json operator()(const act::MoveLabelManual& a) const {
      return {{"type", "MoveLabelManual"}, {"connection", a.connection}, {"rect", a.rect ? rect_json(*a.rect) : json(nullptr)}};
    }
    json operator()(const act::SetInvariant& a) const { return {{"type", "SetInvariant"}, {"id", a.id}, {"text", a.text}}; }
    json operator()(const act::SetVariable& a) const {
      json j{{"type", "SetVariable"}, {"state", a.state}, {"decl", a.decl}};
      if (a.comment) j["comment"] = *a.comment;
      return j;
    }
    json operator()(const act::RemoveVariable& a) const {
      return {{"type", "RemoveVariable"}, {"state", a.state}, {"name", a.name}};
    }
    json operator()(const act::AddQuery& a) const {
      return {{"type", "AddQuery"}, {"kind", std::string(to_string(a.kind))}, {"target", a.target}, {"attachedTo", a.attached_to}};
    }
    json operator()(const act::DeleteQuery& a) const { return {{"type", "DeleteQuery"}, {"id", a.id}}; }
    json operator()(const act::DeleteTransition& a) const { return {{"type", "DeleteTransition"}, {"id", a.id}}; }
  };
  return std::visit(V{}, a);
}

ActionResult apply_action(const Chart& chart, const EditorAction& a) {
  Chart next = chart;
  try {
    std::visit(Reducer{next}, a);
  } catch (const Rejected& r) {
    return {chart, {r.d}, false};
  }
  auto diags = validate(next);
  if (has_errors(diags)) return {chart, std::move(diags), false};
  return {std::move(next), std::move(diags), true};
}

BatchResult apply_actions(const Chart& chart, const std::vector<EditorAction>& actions) {
  Chart cur = chart;
  std::vector<Diagnostic> warnings;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    ActionResult r = apply_action(cur, actions[i]);
    if (!r.applied) return {chart, std::move(r.diagnostics), i};
    cur = std::move(r.chart);
    warnings = std::move(r.diagnostics);
  }
  return {std::move(cur), std::move(warnings), std::nullopt};
}

}  // namespace pchart
