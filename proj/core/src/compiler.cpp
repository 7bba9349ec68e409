#include "pchart/compiler.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace pchart {

namespace detail {

struct LoweredOutcome {
  std::vector<std::pair<std::size_t, SlotExpr>> updates;
};

struct LoweredCommand {
  SlotExpr guard;
  std::vector<LoweredOutcome> outcomes;
};

struct Lowered {
  std::vector<LoweredCommand> commands;
  std::map<std::string, std::vector<int>, std::less<>> by_event;
  std::vector<SlotExpr> rate_active;
  std::map<StateId, SlotExpr> activity;
};

}  // namespace detail

namespace {

// Parent/sibling-index view of a validated chart.
struct Tree {
  const Chart& chart;
  std::map<StateId, StateId> parent;
  std::map<StateId, std::int64_t> index;
  std::vector<StateId> pre;

  explicit Tree(const Chart& c) : chart(c), pre(c.preorder()) {
    for (StateId id : pre) {
      const auto& ch = c.state(id).children;
      for (std::size_t i = 0; i < ch.size(); ++i) {
        parent[ch[i]] = id;
        index[ch[i]] = static_cast<std::int64_t>(i);
      }
    }
  }

  std::vector<StateId> path(StateId s) const {
    std::vector<StateId> p{s};
    for (auto it = parent.find(s); it != parent.end(); it = parent.find(it->second)) p.push_back(it->second);
    std::reverse(p.begin(), p.end());
    return p;
  }

  void subtree(StateId s, std::vector<StateId>& out) const {
    out.push_back(s);
    for (StateId c : chart.state(s).children) subtree(c, out);
  }

  int depth(StateId s) const { return static_cast<int>(path(s).size()) - 1; }

  // Never simultaneously active.
  bool exclusive(StateId a, StateId b) const {
    auto pa = path(a), pb = path(b);
    std::size_t i = 0;
    while (i < pa.size() && i < pb.size() && pa[i] == pb[i]) ++i;
    if (i == pa.size() || i == pb.size()) return false;  // one contains the other
    return chart.state(pa[i - 1]).kind == StateKind::Xor;
  }
};

class NameAllocator {
 public:
  void reserve(const std::string& name) { used_.insert(name); }
  bool taken(const std::string& name) const { return used_.count(name) != 0; }

  std::string take(const std::string& base, StateId id) {
    std::string name = base;
    if (taken(name) || is_reserved_word(name)) name = base + "_" + std::to_string(id);
    for (int k = 2; taken(name); ++k) name = base + "_" + std::to_string(id) + "_" + std::to_string(k);
    used_.insert(name);
    return name;
  }

 private:
  std::set<std::string> used_;
};

std::int64_t constant_value(const Expr& e) {
  Value v = eval_constant(e);
  if (auto b = std::get_if<bool>(&v)) return *b ? 1 : 0;
  return std::get<std::int64_t>(v);
}

Expr eq(const Expr& a, std::int64_t v) { return Expr::binary(BinaryOp::Eq, a, Expr::int_lit(v)); }

std::string type_text(const VarType& t) {
  if (t.kind == VarType::Kind::Bool) return "bool";
  return std::to_string(t.lo) + ".." + std::to_string(t.hi);
}

std::string value_text(const VarType& t, std::int64_t v) {
  if (t.kind == VarType::Kind::Bool) return v ? "true" : "false";
  return std::to_string(v);
}

std::string trigger_name(Trigger::Kind k) {
  switch (k) {
    case Trigger::Kind::AfterExponential: return "exp";
    case Trigger::Kind::AfterUniform: return "uniform";
    case Trigger::Kind::AfterNondet:
    case Trigger::Kind::After: return "after";
    case Trigger::Kind::Event: return "event";
  }
  return "?";
}

}  // namespace

// ---------------------------------------------------------------- region map

std::optional<std::size_t> RegionMap::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == name) return i;
  return std::nullopt;
}

const ProgramVar& RegionMap::var(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw UnknownVariable(std::string(name));
  return variables[*i];
}

bool GCProgram::has_probabilistic_outcomes() const {
  return std::any_of(commands.begin(), commands.end(), [](const GuardedCommand& c) { return c.outcomes.size() > 1; });
}

RangeViolation::RangeViolation(std::string var, std::int64_t value, std::optional<TransId> trans)
    : Error("RangeViolation", "variable " + var + " would take value " + std::to_string(value) + " outside its range" +
                                  (trans ? " (transition t" + std::to_string(*trans) + ")" : std::string())),
      var_(std::move(var)),
      value_(value),
      trans_(trans) {}

RegionMap encode_regions(const Chart& chart) {
  Tree tree(chart);
  RegionMap rm;
  NameAllocator names;

  std::map<std::string, int> uses;
  for (StateId s : tree.pre)
    for (const auto& v : chart.state(s).variables) ++uses[v.name];
  for (const auto& [n, k] : uses)
    if (k == 1) names.reserve(n);

  std::vector<ProgramVar> regions, data;
  for (StateId s : tree.pre) {
    const State& st = chart.state(s);
    for (const auto& v : st.variables) {
      ProgramVar pv;
      pv.name = uses[v.name] == 1 ? v.name : names.take(v.name + "_" + std::to_string(s), s);
      pv.role = VarRole::Data;
      pv.type = v.type;
      pv.init = constant_value(v.init);
      pv.owner = s;
      pv.chart_name = v.name;
      pv.comment = v.comment;
      data.push_back(pv);
    }
  }
  for (StateId s : tree.pre) {
    const State& st = chart.state(s);
    if (st.kind != StateKind::Xor) continue;
    ProgramVar pv;
    pv.name = names.take("r_" + st.name, s);
    pv.role = VarRole::Region;
    pv.type = VarType::range(0, static_cast<std::int64_t>(st.children.size()) - 1);
    pv.owner = s;
    pv.chart_name = st.name;
    pv.comment = st.comment;
    regions.push_back(pv);
  }
  rm.variables = regions;
  rm.variables.insert(rm.variables.end(), data.begin(), data.end());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    rm.region_var[regions[i].owner] = i;
    const auto& ch = chart.state(regions[i].owner).children;
    for (std::size_t k = 0; k < ch.size(); ++k) rm.encoding[ch[k]] = {i, static_cast<std::int64_t>(k)};
  }

  rm.initial.assign(rm.variables.size(), 0);
  for (std::size_t i = 0; i < rm.variables.size(); ++i) rm.initial[i] = rm.variables[i].init;
  std::function<void(StateId)> enter = [&](StateId s) {
    const State& st = chart.state(s);
    if (st.kind == StateKind::Xor) {
      rm.initial[rm.region_var.at(s)] = tree.index.at(*st.initial);
      enter(*st.initial);
    } else if (st.kind == StateKind::And) {
      for (StateId c : st.children) enter(c);
    }
  };
  enter(chart.root);
  for (std::size_t i = 0; i < regions.size(); ++i) rm.variables[i].init = rm.initial[i];

  for (StateId s : tree.pre) {
    std::vector<Expr> parts;
    std::map<std::string, std::string, std::less<>> renaming;
    for (StateId a : tree.path(s)) {
      if (auto it = rm.encoding.find(a); it != rm.encoding.end())
        parts.push_back(eq(Expr::var(rm.variables[it->second.first].name), it->second.second));
      for (const auto& pv : data)
        if (pv.owner == a) renaming[pv.chart_name] = pv.name;
    }
    rm.activity.emplace(s, Expr::conj(parts));
    rm.scope_renaming[s] = std::move(renaming);
  }
  return rm;
}

// ---------------------------------------------------------------- compile

namespace {

struct Leaf {
  Rational prob;
  const TransitionTree* go;
};

struct Alt {
  std::vector<Expr> guards;
  std::vector<Leaf> leaves;
};

std::vector<Alt> expand(const TransitionTree& t) {
  switch (t.kind) {
    case TransitionTree::Kind::Goto: return {Alt{{}, {Leaf{Rational(1), &t}}}};
    case TransitionTree::Kind::Cond: {
      std::vector<Alt> out;
      std::vector<Expr> guards;
      for (const auto& b : t.branches) {
        guards.push_back(*b.guard);
        for (Alt a : expand(b.tree)) {
          a.guards.insert(a.guards.begin(), *b.guard);
          out.push_back(std::move(a));
        }
      }
      if (t.has_else()) {
        Expr none = Expr::negate(Expr::disj(guards));
        for (Alt a : expand(t.otherwise.front())) {
          a.guards.insert(a.guards.begin(), none);
          out.push_back(std::move(a));
        }
      }
      return out;
    }
    case TransitionTree::Kind::Prob: {
      std::vector<Alt> acc{Alt{}};
      for (const auto& b : t.branches) {
        std::vector<Alt> next;
        for (const Alt& x : acc) {
          for (const Alt& y : expand(b.tree)) {
            Alt z = x;
            z.guards.insert(z.guards.end(), y.guards.begin(), y.guards.end());
            for (const Leaf& l : y.leaves) z.leaves.push_back({l.prob * b.prob, l.go});
            next.push_back(std::move(z));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
  }
  return {};
}

class Compiler {
 public:
  explicit Compiler(const Chart& c) : chart_(c), tree_(c) {}

  GCProgram run() {
    p_.name = chart_.name;
    p_.regions = encode_regions(chart_);
    for (const auto& v : p_.regions.variables) names_.reserve(v.name);
    declare_timers();

    for (StateId s : tree_.pre) {
      for (const auto& [id, t] : chart_.transitions) {
        if (t.source != s) continue;
        for (const Alt& alt : expand(t.body)) add_transition_command(t, alt);
      }
    }
    add_time_advance();

    // event order: first appearance, tick last
    for (const auto& pc : pending_)
      if (pc.event != "tick" && std::find(p_.events.begin(), p_.events.end(), pc.event) == p_.events.end())
        p_.events.push_back(pc.event);
    if (std::any_of(pending_.begin(), pending_.end(), [](const GuardedCommand& c) { return c.event == "tick"; }))
      p_.events.push_back("tick");
    auto event_rank = [&](const std::string& e) { return std::find(p_.events.begin(), p_.events.end(), e) - p_.events.begin(); };
    std::stable_sort(pending_.begin(), pending_.end(), [&](const GuardedCommand& a, const GuardedCommand& b) {
      auto ra = event_rank(a.event), rb = event_rank(b.event);
      if (ra != rb) return ra < rb;
      if (a.time_advance != b.time_advance) return !a.time_advance;
      return a.priority > b.priority;
    });
    for (std::size_t i = 0; i < pending_.size(); ++i) pending_[i].id = static_cast<int>(i + 1);
    p_.commands = std::move(pending_);

    for (StateId s : tree_.pre) {
      const State& st = chart_.state(s);
      p_.state_names[s] = chart_.qualified_name(s);
      if (st.cost_rate && !st.cost_rate->is_zero()) p_.cost_rates.push_back({s, p_.regions.activity.at(s), *st.cost_rate});
      std::vector<Expr> inv;
      for (StateId a : tree_.path(s))
        if (const auto& e = chart_.state(a).invariant) inv.push_back(rename_variables(*e, p_.regions.scope_renaming.at(s)));
      if (!inv.empty()) p_.invariants.emplace(s, Expr::conj(inv));
    }
    lower(p_);
    return std::move(p_);
  }

 private:
  void declare_timers() {
    for (StateId s : tree_.pre) {
      std::int64_t bound = 0;
      const Transition* uniform = nullptr;
      for (const auto& [id, t] : chart_.transitions) {
        if (t.source != s || !t.trigger.is_timed()) continue;
        bound = std::max(bound, t.trigger.hi);
        if (t.trigger.kind == Trigger::Kind::AfterUniform) uniform = &t;
      }
      if (bound == 0) continue;
      const State& st = chart_.state(s);
      TimerDecl td;
      td.state = s;
      td.bound = bound;
      td.clock = add_var("c_" + st.name, VarRole::Clock, VarType::range(0, bound), s);
      if (uniform) {
        td.deadline = add_var("d_" + st.name, VarRole::Deadline, VarType::range(0, uniform->trigger.hi), s);
        td.uniform_lo = uniform->trigger.lo;
        td.uniform_hi = uniform->trigger.hi;
      }
      timer_of_[s] = p_.timers.size();
      p_.timers.push_back(td);
    }
  }

  std::size_t add_var(const std::string& base, VarRole role, VarType type, StateId owner) {
    ProgramVar pv;
    pv.name = names_.take(base, owner);
    pv.role = role;
    pv.type = type;
    pv.owner = owner;
    p_.regions.variables.push_back(pv);
    p_.regions.initial.push_back(0);
    return p_.regions.variables.size() - 1;
  }

  const std::string& vname(std::size_t i) const { return p_.regions.variables[i].name; }
  Expr var(std::size_t i) const { return Expr::var(vname(i)); }

  Expr timing_guard(const Transition& t, bool at_bound) const {
    const TimerDecl& td = p_.timers[timer_of_.at(t.source)];
    Expr c = var(td.clock);
    switch (t.trigger.kind) {
      case Trigger::Kind::After: return eq(c, t.trigger.lo);
      case Trigger::Kind::AfterNondet:
        if (at_bound) return eq(c, t.trigger.hi);
        return Expr::binary(BinaryOp::And, Expr::binary(BinaryOp::Le, Expr::int_lit(t.trigger.lo), c),
                            Expr::binary(BinaryOp::Le, c, Expr::int_lit(t.trigger.hi)));
      case Trigger::Kind::AfterUniform: {
        Expr d = var(*td.deadline);
        return Expr::binary(BinaryOp::And, Expr::binary(BinaryOp::Gt, d, Expr::int_lit(0)), Expr::binary(BinaryOp::Eq, c, d));
      }
      default: return Expr::bool_lit(true);
    }
  }

  void reset_timer(StateId s, std::map<std::size_t, Expr>& upd) const {
    auto it = timer_of_.find(s);
    if (it == timer_of_.end()) return;
    const TimerDecl& td = p_.timers[it->second];
    upd.insert_or_assign(td.clock, Expr::int_lit(0));
    if (td.deadline) upd.insert_or_assign(*td.deadline, Expr::int_lit(0));
  }

  // Exit/entry updates of a goto from `s` to `t` (external transition).
  std::map<std::size_t, Expr> goto_updates(StateId s, StateId t) const {
    auto ps = tree_.path(s), pt = tree_.path(t);
    std::size_t i = 0;
    while (i < ps.size() && i < pt.size() && ps[i] == pt[i] && ps[i] != s && ps[i] != t) ++i;
    StateId main_source = ps[i], main_target = pt[i];
    std::map<std::size_t, Expr> upd;
    std::vector<StateId> exited;
    tree_.subtree(main_source, exited);
    for (StateId x : exited) {
      if (auto it = p_.regions.region_var.find(x); it != p_.regions.region_var.end()) upd.insert_or_assign(it->second, Expr::int_lit(0));
      reset_timer(x, upd);
    }
    std::function<void(StateId, std::optional<std::size_t>)> enter = [&](StateId x, std::optional<std::size_t> k) {
      reset_timer(x, upd);
      std::optional<StateId> next;
      if (k && *k + 1 < pt.size()) next = pt[*k + 1];
      const State& st = chart_.state(x);
      if (st.kind == StateKind::Xor) {
        StateId child = next ? *next : *st.initial;
        upd.insert_or_assign(p_.regions.region_var.at(x), Expr::int_lit(tree_.index.at(child)));
        enter(child, next ? std::optional<std::size_t>(*k + 1) : std::nullopt);
      } else if (st.kind == StateKind::And) {
        for (StateId c : st.children) enter(c, next && c == *next ? std::optional<std::size_t>(*k + 1) : std::nullopt);
      }
    };
    // the scope state is an Xor: select the main target
    StateId scope = ps[i - 1];
    upd.insert_or_assign(p_.regions.region_var.at(scope), Expr::int_lit(tree_.index.at(main_target)));
    enter(main_target, i);
    return upd;
  }

  Outcome leaf_outcome(const Transition& t, const Leaf& leaf) const {
    const auto& renaming = p_.regions.scope_renaming.at(t.source);
    auto upd = goto_updates(t.source, leaf.go->target);
    Outcome o;
    o.prob = leaf.prob;
    o.cost = leaf.go->cost;
    o.target = leaf.go->target;
    std::size_t first_timer = p_.regions.variables.size();
    for (std::size_t i = 0; i < p_.regions.variables.size(); ++i)
      if (p_.regions.variables[i].role == VarRole::Clock || p_.regions.variables[i].role == VarRole::Deadline) {
        first_timer = i;
        break;
      }
    for (const auto& [i, e] : upd)
      if (i < first_timer) o.updates.push_back({vname(i), e});
    for (const auto& a : leaf.go->actions) {
      auto it = renaming.find(a.target);
      o.updates.push_back({it == renaming.end() ? a.target : it->second, rename_variables(a.value, renaming)});
    }
    for (const auto& [i, e] : upd)
      if (i >= first_timer) o.updates.push_back({vname(i), e});
    return o;
  }

  void add_transition_command(const Transition& t, const Alt& alt) {
    const auto& renaming = p_.regions.scope_renaming.at(t.source);
    std::vector<Expr> parts{p_.regions.activity.at(t.source)};
    std::vector<Expr> urgent_parts = parts;
    if (t.trigger.is_timed()) {
      parts.push_back(timing_guard(t, false));
      urgent_parts.push_back(timing_guard(t, true));
    }
    std::vector<Expr> rest;
    if (t.guard) rest.push_back(rename_variables(*t.guard, renaming));
    for (const auto& g : alt.guards) rest.push_back(rename_variables(g, renaming));
    parts.insert(parts.end(), rest.begin(), rest.end());
    urgent_parts.insert(urgent_parts.end(), rest.begin(), rest.end());

    GuardedCommand c;
    c.event = t.trigger.is_timed() ? "tick" : t.trigger.event;
    c.priority = priority_for_depth(tree_.depth(t.source));
    c.guard = Expr::conj(parts);
    c.source_trans = t.id;
    c.source_state = t.source;
    c.comment = t.comment;
    for (const Leaf& l : alt.leaves) c.outcomes.push_back(leaf_outcome(t, l));
    if (t.trigger.is_timed()) urgent_.push_back(Expr::conj(urgent_parts));
    pending_.push_back(std::move(c));
  }

  void add_time_advance() {
    bool rates = false;
    for (const auto& [id, s] : chart_.states)
      if (s.cost_rate && !s.cost_rate->is_zero()) rates = true;
    if (p_.timers.empty() && !rates) return;

    Expr no_urgency = Expr::negate(Expr::disj(urgent_));
    std::vector<Expr> advancing;
    for (const TimerDecl& td : p_.timers)
      advancing.push_back(Expr::binary(BinaryOp::And, p_.regions.activity.at(td.state),
                                       Expr::binary(BinaryOp::Lt, var(td.clock), Expr::int_lit(td.bound))));

    std::size_t n = p_.timers.size();
    if (n > 16) throw Error("TooManyTimers", "more than 16 timed states cannot be compiled");
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<std::size_t> members;
      bool consistent = true;
      for (std::size_t i = 0; i < n && consistent; ++i) {
        if (!(mask & (1u << i))) continue;
        for (std::size_t m : members)
          if (tree_.exclusive(p_.timers[m].state, p_.timers[i].state)) consistent = false;
        members.push_back(i);
      }
      if (!consistent) continue;
      std::vector<Expr> parts;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          parts.push_back(advancing[i]);
          continue;
        }
        bool implied = std::any_of(members.begin(), members.end(),
                                   [&](std::size_t m) { return tree_.exclusive(p_.timers[m].state, p_.timers[i].state); });
        if (!implied) parts.push_back(Expr::negate(advancing[i]));
      }
      if (!no_urgency.is_true()) parts.push_back(no_urgency);

      // uniform members split on whether their deadline is still unsampled
      std::vector<std::size_t> uniform;
      for (std::size_t m : members)
        if (p_.timers[m].deadline) uniform.push_back(m);
      for (std::uint32_t sample = 0; sample < (1u << uniform.size()); ++sample) {
        std::vector<Expr> guard = parts;
        std::vector<std::size_t> sampled;
        for (std::size_t u = 0; u < uniform.size(); ++u) {
          Expr d = var(*p_.timers[uniform[u]].deadline);
          if (sample & (1u << u)) {
            guard.push_back(eq(d, 0));
            sampled.push_back(uniform[u]);
          } else {
            guard.push_back(Expr::binary(BinaryOp::Gt, d, Expr::int_lit(0)));
          }
        }
        GuardedCommand c;
        c.event = "tick";
        c.priority = 0;
        c.time_advance = true;
        c.guard = Expr::conj(guard);
        c.source_state = chart_.root;
        Outcome base;
        for (std::size_t m : members) {
          Expr clk = var(p_.timers[m].clock);
          base.updates.push_back({vname(p_.timers[m].clock), Expr::binary(BinaryOp::Add, clk, Expr::int_lit(1))});
        }
        std::vector<Outcome> outs{base};
        for (std::size_t m : sampled) {
          const TimerDecl& td = p_.timers[m];
          std::vector<Outcome> next;
          Rational p(1, td.uniform_hi - td.uniform_lo + 1);
          for (const Outcome& o : outs) {
            for (std::int64_t k = td.uniform_lo; k <= td.uniform_hi; ++k) {
              Outcome z = o;
              z.prob = z.prob * p;
              z.updates.push_back({vname(*td.deadline), Expr::int_lit(k)});
              next.push_back(std::move(z));
            }
          }
          outs = std::move(next);
        }
        c.outcomes = std::move(outs);
        pending_.push_back(std::move(c));
      }
    }
  }

  const Chart& chart_;
  Tree tree_;
  GCProgram p_;
  NameAllocator names_;
  std::map<StateId, std::size_t> timer_of_;
  std::vector<GuardedCommand> pending_;
  std::vector<Expr> urgent_;
};

}  // namespace

GCProgram compile(const Chart& chart) {
  auto diags = validate(chart);
  if (has_errors(diags)) {
    std::vector<Diagnostic> errors;
    for (auto& d : diags)
      if (d.severity == Severity::Error) errors.push_back(d);
    throw InvariantViolation(std::move(errors));
  }
  for (const auto& [id, t] : chart.transitions)
    if (t.trigger.kind == Trigger::Kind::AfterExponential) throw UnsupportedTrigger(trigger_name(t.trigger.kind), id);
  return Compiler(chart).run();
}

void lower(GCProgram& p) {
  auto L = std::make_shared<detail::Lowered>();
  std::map<std::string, std::size_t, std::less<>> slots;
  for (std::size_t i = 0; i < p.regions.variables.size(); ++i) slots[p.regions.variables[i].name] = i;
  auto slot_of = [&](std::string_view n) -> std::optional<std::size_t> {
    auto it = slots.find(n);
    if (it == slots.end()) return std::nullopt;
    return it->second;
  };
  for (const auto& c : p.commands) {
    detail::LoweredCommand lc;
    lc.guard = SlotExpr(c.guard, slot_of);
    for (const auto& o : c.outcomes) {
      detail::LoweredOutcome lo;
      for (const auto& a : o.updates) {
        auto s = slot_of(a.target);
        if (!s) throw UnknownVariable(a.target);
        lo.updates.emplace_back(*s, SlotExpr(a.value, slot_of));
      }
      lc.outcomes.push_back(std::move(lo));
    }
    L->commands.push_back(std::move(lc));
    L->by_event[c.event].push_back(c.id);
  }
  for (const auto& r : p.cost_rates) L->rate_active.emplace_back(r.active, slot_of);
  for (const auto& [s, e] : p.regions.activity) L->activity.emplace(s, SlotExpr(e, slot_of));
  p.lowered = std::move(L);
}

// ---------------------------------------------------------------- listing

namespace {

std::string updates_text(const std::vector<Assignment>& u) {
  if (u.empty()) return "(skip)";
  return "(" + to_string(std::span<const Assignment>(u)) + ")";
}

}  // namespace

std::string pretty_print(const GCProgram& p) {
  std::ostringstream out;
  out << "program " << p.name << "\n";
  for (const auto& v : p.regions.variables) {
    if (v.comment) out << "// " << *v.comment << "\n";
    out << "var " << v.name << " : " << type_text(v.type) << " = " << value_text(v.type, v.init);
    if (v.role == VarRole::Region) {
      out << "  // " << p.state_names.at(v.owner) << ":";
      std::vector<std::pair<std::int64_t, StateId>> children;
      for (const auto& [s, enc] : p.regions.encoding)
        if (p.regions.variables[enc.first].name == v.name) children.push_back({enc.second, s});
      std::sort(children.begin(), children.end());
      for (const auto& [idx, s] : children) {
        std::string qn = p.state_names.at(s);
        out << " " << idx << "=" << qn.substr(qn.rfind('.') + 1);
      }
    } else if (v.role == VarRole::Clock) {
      out << "  // clock of " << p.state_names.at(v.owner);
    } else if (v.role == VarRole::Deadline) {
      out << "  // deadline of " << p.state_names.at(v.owner);
    }
    out << "\n";
  }
  out << "events:";
  if (p.events.empty()) out << " (none)";
  for (std::size_t i = 0; i < p.events.size(); ++i) out << (i ? ", " : " ") << p.events[i];
  out << "\n";
  for (const auto& r : p.cost_rates) out << "rate " << r.rate.to_string() << " while " << to_string(r.active) << "\n";

  for (const auto& c : p.commands) {
    out << "\n";
    if (c.comment) {
      std::istringstream lines(*c.comment);
      for (std::string line; std::getline(lines, line);) out << "// " << line << "\n";
    }
    if (c.time_advance) out << "[" << c.event << ", advance] ";
    else out << "[" << c.event << ", prio " << c.priority << "] ";
    out << to_string(c.guard) << " -> ";
    for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
      const Outcome& o = c.outcomes[i];
      if (i) out << " + ";
      if (c.outcomes.size() > 1 || o.prob != Rational(1)) out << o.prob.to_string() << ": ";
      out << updates_text(o.updates);
      if (!o.cost.is_zero()) out << " $ " << o.cost.to_string();
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- interpretation

namespace {

std::shared_ptr<const detail::Lowered> lowered_of(const GCProgram& p) {
  if (p.lowered) return p.lowered;
  GCProgram copy = p;
  lower(copy);
  return copy.lowered;
}

}  // namespace

int Resolver::choose_command(std::span<const int> enabled) {
  switch (kind_) {
    case Kind::Deterministic: return enabled.front();
    case Kind::Random: {
      std::uniform_int_distribution<std::size_t> pick(0, enabled.size() - 1);
      return enabled[pick(rng_)];
    }
    case Kind::Scripted:
      if (std::find(enabled.begin(), enabled.end(), command_) == enabled.end())
        throw Error("ScriptMismatch", "scripted command " + std::to_string(command_) + " is not enabled");
      return command_;
  }
  return enabled.front();
}

std::size_t Resolver::choose_outcome(const GuardedCommand& c) {
  switch (kind_) {
    case Kind::Deterministic: return 0;
    case Kind::Random: {
      if (c.outcomes.size() == 1) return 0;
      double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      double acc = 0;
      for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
        acc += c.outcomes[i].prob.to_double();
        if (u < acc) return i;
      }
      return c.outcomes.size() - 1;
    }
    case Kind::Scripted:
      if (outcome_ >= c.outcomes.size()) throw Error("ScriptMismatch", "scripted outcome index out of range");
      return outcome_;
  }
  return 0;
}

std::vector<int> enabled_commands(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event) {
  auto L = lowered_of(p);
  std::vector<int> out;
  auto it = L->by_event.find(event);
  if (it == L->by_event.end()) return out;
  for (int id : it->second)
    if (L->commands[static_cast<std::size_t>(id - 1)].guard.holds(v)) out.push_back(id);
  return out;
}

std::vector<int> enabled_class(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event) {
  std::vector<int> all = enabled_commands(p, v, event);
  int top = -1;
  for (int id : all)
    if (!p.command(id).time_advance) top = std::max(top, p.command(id).priority);
  std::vector<int> out;
  for (int id : all) {
    const auto& c = p.command(id);
    if (c.time_advance || c.priority == top) out.push_back(id);
  }
  return out;
}

StepResult apply_outcome(const GCProgram& p, std::span<const std::int64_t> v, int command, std::size_t outcome) {
  auto L = lowered_of(p);
  const GuardedCommand& c = p.command(command);
  const auto& lo = L->commands[static_cast<std::size_t>(command - 1)].outcomes.at(outcome);
  StepResult r;
  r.next.assign(v.begin(), v.end());
  r.fired = command;
  r.outcome = outcome;
  for (const auto& [slot, e] : lo.updates) {
    std::int64_t x = e.eval(v);
    const VarType& t = p.regions.variables[slot].type;
    if (x < t.lo || x > t.hi) throw RangeViolation(p.regions.variables[slot].name, x, c.source_trans);
    r.next[slot] = x;
  }
  r.cost = c.outcomes[outcome].cost;
  if (c.time_advance)
    for (std::size_t i = 0; i < p.cost_rates.size(); ++i)
      if (L->rate_active[i].holds(v)) r.cost += p.cost_rates[i].rate;
  return r;
}

StepResult interpret_step(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event, Resolver& choice) {
  std::vector<int> cls = enabled_class(p, v, event);
  if (cls.empty()) {
    StepResult r;
    r.next.assign(v.begin(), v.end());
    return r;
  }
  int id = choice.choose_command(cls);
  std::size_t o = choice.choose_outcome(p.command(id));
  return apply_outcome(p, v, id, o);
}

bool is_active(const GCProgram& p, std::span<const std::int64_t> v, StateId s) {
  auto L = lowered_of(p);
  auto it = L->activity.find(s);
  if (it == L->activity.end()) throw UnknownState("#" + std::to_string(s));
  return it->second.holds(v);
}

Valuation to_valuation(const GCProgram& p, std::span<const std::int64_t> v) {
  Valuation out;
  for (std::size_t i = 0; i < p.regions.variables.size(); ++i) {
    const auto& pv = p.regions.variables[i];
    if (pv.type.kind == VarType::Kind::Bool) out[pv.name] = v[i] != 0;
    else out[pv.name] = v[i];
  }
  return out;
}

std::string dump_state(const GCProgram& p, std::span<const std::int64_t> v) {
  std::string out;
  for (std::size_t i = 0; i < p.regions.variables.size(); ++i)
    out += p.regions.variables[i].name + "=" + std::to_string(v[i]) + "\n";
  return out;
}

}  // namespace pchart
