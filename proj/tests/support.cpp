#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifndef PCHART_SOURCE_DIR
#error "PCHART_SOURCE_DIR must be defined"
#endif

namespace pchart::test {

using nlohmann::json;

std::filesystem::path source_dir() { return PCHART_SOURCE_DIR; }

std::filesystem::path fixture_path(const std::string& name) {
  return source_dir() / "tests" / "fixtures" / (name + ".pchart");
}

std::filesystem::path golden_path(const std::string& file) { return source_dir() / "tests" / "golden" / file; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Chart load_fixture(const std::string& name) { return parse_chart(read_text(fixture_path(name))); }

std::vector<std::string> fixture_names() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(source_dir() / "tests" / "fixtures"))
    if (e.path().extension() == ".pchart") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<std::string>& deterministic_fixtures() {
  static const std::vector<std::string> names{"toggle",     "counter_good", "nested",    "interlevel",
                                              "traffic",    "thermostat",   "three_tick"};
  return names;
}

std::string counter_chart(int regions, int hi, const std::string& root_invariant, const std::string& hi_invariant) {
  std::int64_t next = 1;
  json states = json::array();
  json transitions = json::array();
  const int region_w = 200, region_h = 160;
  const int sys_w = regions * region_w + (regions + 1) * 20;
  auto box = [](int x, int y, int w, int h) { return json{{"x", x}, {"y", y}, {"w", w}, {"h", h}}; };

  std::int64_t root = next++;
  std::int64_t sys = next++;
  json root_vars = json::array();
  for (int i = 0; i < regions; ++i)
    root_vars.push_back({{"name", "c" + std::to_string(i)}, {"type", "int"}, {"init", "0"}, {"lo", 0}, {"hi", hi}});
  json root_state{{"id", root}, {"name", "root"}, {"kind", "xor"}, {"box", box(0, 0, sys_w + 40, region_h + 80)},
                  {"children", {sys}}, {"initial", sys}, {"variables", root_vars}};
  if (!root_invariant.empty()) root_state["invariant"] = root_invariant;
  json sys_state{{"id", sys}, {"name", "Sys"}, {"kind", "and"}, {"box", box(20, 20, sys_w, region_h + 40)}};
  json children = json::array();
  std::vector<json> nested;
  for (int i = 0; i < regions; ++i) {
    std::string n = std::to_string(i);
    std::string c = "c" + n;
    int rx = 40 + i * (region_w + 20);
    std::int64_t region = next++, lo = next++, hs = next++;
    children.push_back(region);
    nested.push_back({{"id", region}, {"name", "R" + n}, {"kind", "xor"}, {"box", box(rx, 40, region_w, region_h)},
                      {"children", {lo, hs}}, {"initial", lo}});
    nested.push_back({{"id", lo}, {"name", "Lo" + n}, {"kind", "basic"}, {"box", box(rx + 10, 90, 70, 50)}});
    json hstate{{"id", hs}, {"name", "Hi" + n}, {"kind", "basic"}, {"box", box(rx + 120, 90, 70, 50)}};
    if (!hi_invariant.empty()) {
      std::string text = hi_invariant;
      for (std::size_t p = text.find('#'); p != std::string::npos; p = text.find('#')) text.replace(p, 1, n);
      hstate["invariant"] = text;
    }
    nested.push_back(hstate);
    transitions.push_back({{"id", next++}, {"source", lo},
                           {"label", "inc [" + c + " < " + std::to_string(hi) + "] / " + c + " := " + c + " + 1"},
                           {"body", {{"kind", "goto"}, {"target", lo}}}});
    transitions.push_back({{"id", next++}, {"source", lo}, {"label", "up" + n},
                           {"body", {{"kind", "goto"}, {"target", hs}, {"waypoints", {{rx + 100, 80}}}}}});
    transitions.push_back({{"id", next++}, {"source", hs},
                           {"label", "down [" + c + " > 0] / " + c + " := " + c + " - 1"},
                           {"body", {{"kind", "goto"}, {"target", lo}, {"waypoints", {{rx + 100, 170}}}}}});
  }
  sys_state["children"] = children;
  states.push_back(root_state);
  states.push_back(sys_state);
  for (auto& s : nested) states.push_back(std::move(s));
  json doc{{"formatVersion", 1}, {"name", "counters"},  {"root", root},
           {"nextId", next},     {"states", states},    {"transitions", transitions},
           {"queries", json::array()}};
  return doc.dump(2) + "\n";
}

bool active_by_encoding(const Chart& chart, const GCProgram& p, const ProgramState& v, StateId s) {
  for (StateId a : chart.path_from_root(s)) {
    auto it = p.regions.encoding.find(a);
    if (it == p.regions.encoding.end()) continue;
    if (v[it->second.first] != it->second.second) return false;
  }
  return true;
}

BruteForceResult brute_force_invariants(const Chart& chart, const GCProgram& p) {
  struct Own {
    StateId state;
    Expr holds;
  };
  std::vector<Own> owns;
  for (const auto& [id, st] : chart.states)
    if (st.invariant) owns.push_back({id, rename_variables(*st.invariant, p.regions.scope_renaming.at(id))});
  auto failing = [&](const ProgramState& v) {
    std::vector<StateId> out;
    Valuation val = to_valuation(p, v);
    for (const auto& o : owns) {
      if (!active_by_encoding(chart, p, v, o.state)) continue;
      bool ok = false;
      try {
        ok = std::get<bool>(eval(o.holds, val));
      } catch (const EvalError&) {
        ok = false;
      }
      if (!ok) out.push_back(o.state);
    }
    return out;
  };

  BruteForceResult r;
  const ProgramState& init = p.regions.initial;
  if (!failing(init).empty()) {
    r.initial_violation = true;
    return r;
  }
  std::set<ProgramState> visited{init};
  std::vector<ProgramState> stack{init};
  while (!stack.empty()) {
    ProgramState s = std::move(stack.back());
    stack.pop_back();
    ++r.expanded;
    for (const auto& event : p.events) {
      for (int id : enabled_class(p, s, event)) {
        for (std::size_t o = 0; o < p.command(id).outcomes.size(); ++o) {
          StepResult step;
          try {
            step = apply_outcome(p, s, id, o);
          } catch (const RangeViolation&) {
            r.range_error = true;
            continue;
          }
          auto bad = failing(step.next);
          for (StateId st : bad) r.violations.insert({id, st});
          if (!bad.empty()) continue;
          if (visited.insert(step.next).second) stack.push_back(std::move(step.next));
        }
      }
    }
  }
  return r;
}

std::vector<ProgramState> reachable_states(const GCProgram& p) {
  std::set<ProgramState> seen{p.regions.initial};
  std::vector<ProgramState> order{p.regions.initial};
  for (std::size_t i = 0; i < order.size(); ++i) {
    ProgramState s = order[i];
    for (const auto& event : p.events)
      for (int id : enabled_class(p, s, event))
        for (std::size_t o = 0; o < p.command(id).outcomes.size(); ++o) {
          try {
            StepResult step = apply_outcome(p, s, id, o);
            if (seen.insert(step.next).second) order.push_back(step.next);
          } catch (const RangeViolation&) {
          }
        }
  }
  return order;
}

json random_action(const Chart& chart, std::mt19937_64& rng) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto coin = [&](int in) { return std::uniform_int_distribution<int>(0, in - 1)(rng) == 0; };
  std::vector<StateId> states;
  for (const auto& [id, s] : chart.states) states.push_back(id);
  std::vector<TransId> trans;
  for (const auto& [id, t] : chart.transitions) trans.push_back(id);
  auto any_state = [&] { return states[pick(states.size())]; };
  auto rect = [](double x, double y, double w, double h) { return json{{"x", x}, {"y", y}, {"w", w}, {"h", h}}; };
  static const std::vector<std::string> names{"A", "B", "C", "Idle", "Busy", "Off"};
  static const std::vector<std::string> labels{"E", "F", "go [x < 3] / x := x + 1", "after(2)", "tick / x := 0",
                                               "E [x >", "reset $ 1"};
  static const std::vector<std::string> invariants{"true", "x >= 0", "x <= 5", "", "x <"};

  switch (pick(11)) {
    case 0: {
      StateId parent = any_state();
      const Rect& b = chart.state(parent).box;
      double w = 30, h = 20;
      double x = b.x + std::uniform_real_distribution<double>(0, std::max(1.0, b.w - w))(rng);
      double y = b.y + std::uniform_real_distribution<double>(0, std::max(1.0, b.h - h))(rng);
      json j{{"type", "AddState"}, {"parent", parent}, {"kind", coin(4) ? "xor" : "basic"},
             {"box", rect(std::round(x), std::round(y), w, h)}};
      if (coin(2)) j["name"] = names[pick(names.size())];
      return j;
    }
    case 1:
      return {{"type", "RenameState"}, {"id", any_state()}, {"name", names[pick(names.size())]}};
    case 2: {
      StateId s = any_state();
      Rect b = chart.state(s).box;
      double dx = std::uniform_int_distribution<int>(-15, 15)(rng);
      double dy = std::uniform_int_distribution<int>(-15, 15)(rng);
      return {{"type", "MoveState"}, {"id", s}, {"box", rect(b.x + dx, b.y + dy, b.w, b.h)}};
    }
    case 3:
      return {{"type", "DeleteState"}, {"id", any_state()}};
    case 4:
      return {{"type", "AddTransition"}, {"source", any_state()}, {"label", labels[pick(labels.size())]},
              {"body", {{"kind", "goto"}, {"target", any_state()}}}};
    case 5:
      if (trans.empty()) return {{"type", "DeleteTransition"}, {"id", 999}};
      return {{"type", "EditLabel"}, {"id", trans[pick(trans.size())]}, {"label", labels[pick(labels.size())]}};
    case 6: {
      auto conns = connections(chart);
      if (conns.empty()) return {{"type", "MoveLabelManual"}, {"connection", "c0"}, {"rect", nullptr}};
      const auto& c = conns[pick(conns.size())];
      if (coin(3)) return {{"type", "MoveLabelManual"}, {"connection", c.id}, {"rect", nullptr}};
      const Rect& root = chart.state(chart.root).box;
      double x = root.x + std::uniform_int_distribution<int>(0, static_cast<int>(std::max(1.0, root.w - 40)))(rng);
      double y = root.y + std::uniform_int_distribution<int>(0, static_cast<int>(std::max(1.0, root.h - 14)))(rng);
      return {{"type", "MoveLabelManual"}, {"connection", c.id}, {"rect", rect(x, y, 40, 14)}};
    }
    case 7:
      return {{"type", "SetInvariant"}, {"id", any_state()}, {"text", invariants[pick(invariants.size())]}};
    case 8:
      if (coin(3)) return {{"type", "RemoveVariable"}, {"state", chart.root}, {"name", "x"}};
      return {{"type", "SetVariable"}, {"state", chart.root}, {"decl", "x : 0..5 = 0"}, {"comment", "scratch"}};
    case 9:
      if (!chart.queries.empty() && coin(3))
        return {{"type", "DeleteQuery"}, {"id", chart.queries[pick(chart.queries.size())].id}};
      return {{"type", "AddQuery"}, {"kind", coin(2) ? "Pmax" : "Emin"}, {"target", any_state()}, {"attachedTo", chart.root}};
    default:
      if (trans.empty()) return {{"type", "DeleteTransition"}, {"id", 999}};
      return {{"type", "DeleteTransition"}, {"id", trans[pick(trans.size())]}};
  }
}

}  // namespace pchart::test
