#include "pchart/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace pchart {

std::size_t ProgramStateHash::operator()(const ProgramState& v) const noexcept {
  std::size_t h = 0xcbf29ce484222325ull;
  for (std::int64_t x : v) {
    h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

std::optional<std::size_t> FlatSpace::find(const ProgramState& v) const {
  auto it = index.find(v);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

NoConvergence::NoConvergence(std::size_t iterations, double residual)
    : Error("NoConvergence", "value iteration did not converge within " + std::to_string(iterations) +
                                 " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

TargetNotAlmostSure::TargetNotAlmostSure(OptMode mode, ProgramState escape, const std::string& description)
    : Error("TargetNotAlmostSure", std::string("expected ") + (mode == OptMode::Min ? "minimal" : "maximal") +
                                       " cost is undefined: " + description),
      escape_(std::move(escape)) {}

namespace {

struct Pred {
  std::size_t state;
  std::size_t choice;  // global choice index
};

std::string inline_state(const GCProgram* p, const ProgramState& v) {
  std::ostringstream out;
  out << "{";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    if (p) out << p->regions.variables[i].name << ": ";
    out << v[i];
  }
  out << "}";
  return out.str();
}

std::vector<WitnessStep> trace_to(std::size_t s, const std::vector<std::size_t>& parent, const std::vector<WitnessStep>& via) {
  std::vector<WitnessStep> out;
  while (s != 0) {
    out.push_back(via[s]);
    s = parent[s];
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------- state space

FlatSpace enumerate_states(const GCProgram& p, std::size_t limit) {
  FlatSpace fs;
  fs.events = p.events;
  std::vector<std::size_t> parent{0};
  std::vector<WitnessStep> via(1);
  fs.states.push_back(p.regions.initial);
  fs.index.emplace(p.regions.initial, 0);
  for (std::size_t i = 0; i < fs.states.size(); ++i) {
    ProgramState s = fs.states[i];
    fs.offsets.push_back(fs.choices.size());
    for (std::size_t e = 0; e < fs.events.size(); ++e) {
      for (int id : enabled_class(p, s, fs.events[e])) {
        FlatChoice ch;
        ch.command = id;
        ch.event = e;
        const auto& cmd = p.command(id);
        for (std::size_t o = 0; o < cmd.outcomes.size(); ++o) {
          StepResult r;
          try {
            r = apply_outcome(p, s, id, o);
          } catch (const RangeViolation& ex) {
            throw TracedRangeViolation(ex, trace_to(i, parent, via), fs.events[e]);
          }
          auto [it, fresh] = fs.index.emplace(r.next, fs.states.size());
          if (fresh) {
            if (fs.states.size() >= limit) throw StateLimitExceeded(limit);
            fs.states.push_back(r.next);
            parent.push_back(i);
            via.push_back({fs.events[e], id, o, r.next});
          }
          ch.outcomes.push_back({cmd.outcomes[o].prob, cmd.outcomes[o].prob.to_double(), it->second, r.cost.to_double()});
        }
        fs.choices.push_back(std::move(ch));
      }
    }
  }
  fs.offsets.push_back(fs.choices.size());
  for (const auto& [sid, name] : p.state_names) {
    std::vector<bool> mask(fs.states.size());
    for (std::size_t i = 0; i < fs.states.size(); ++i) mask[i] = is_active(p, fs.states[i], sid);
    fs.target_masks.emplace(sid, std::move(mask));
  }
  return fs;
}

// ---------------------------------------------------------------- invariants

std::vector<Violation> check_invariants(const Chart& chart, const GCProgram& p, std::size_t limit) {
  std::map<std::string, std::size_t, std::less<>> slots;
  for (std::size_t i = 0; i < p.regions.variables.size(); ++i) slots[p.regions.variables[i].name] = i;
  auto slot_of = [&](std::string_view n) -> std::optional<std::size_t> {
    auto it = slots.find(n);
    if (it == slots.end()) return std::nullopt;
    return it->second;
  };
  struct Own {
    StateId state;
    SlotExpr active;
    SlotExpr holds;
  };
  std::vector<Own> owns;
  for (StateId s : chart.preorder()) {
    const auto& inv = chart.state(s).invariant;
    if (!inv) continue;
    owns.push_back({s, SlotExpr(p.regions.activity.at(s), slot_of),
                    SlotExpr(rename_variables(*inv, p.regions.scope_renaming.at(s)), slot_of)});
  }
  auto failing = [&](const ProgramState& v) {
    std::vector<StateId> out;
    for (const auto& o : owns) {
      if (!o.active.holds(v)) continue;
      bool ok = false;
      try {
        ok = o.holds.holds(v);
      } catch (const EvalError&) {
        ok = false;
      }
      if (!ok) out.push_back(o.state);
    }
    return out;
  };

  std::vector<Violation> out;
  for (StateId s : failing(p.regions.initial)) {
    Violation v;
    v.state = s;
    v.violated = accumulated_invariant(chart, s);
    v.post = p.regions.initial;
    v.pre = p.regions.initial;
    out.push_back(std::move(v));
  }
  if (!out.empty()) return out;

  std::vector<ProgramState> states{p.regions.initial};
  std::unordered_map<ProgramState, std::size_t, ProgramStateHash> index{{p.regions.initial, 0}};
  std::vector<std::size_t> parent{0};
  std::vector<WitnessStep> via(1);
  std::set<std::pair<int, StateId>> seen;
  for (std::size_t i = 0; i < states.size(); ++i) {
    ProgramState s = states[i];
    for (const auto& event : p.events) {
      for (int id : enabled_class(p, s, event)) {
        const auto& cmd = p.command(id);
        for (std::size_t o = 0; o < cmd.outcomes.size(); ++o) {
          StepResult r;
          try {
            r = apply_outcome(p, s, id, o);
          } catch (const RangeViolation& ex) {
            throw TracedRangeViolation(ex, trace_to(i, parent, via), event);
          }
          auto bad = failing(r.next);
          if (!bad.empty()) {
            for (StateId st : bad) {
              if (!seen.insert({id, st}).second) continue;
              Violation v;
              v.command = id;
              v.trans = cmd.source_trans;
              v.state = st;
              v.violated = accumulated_invariant(chart, st);
              v.pre = s;
              v.event = event;
              v.outcome = o;
              v.post = r.next;
              v.trace = trace_to(i, parent, via);
              v.trace.push_back({event, id, o, r.next});
              out.push_back(std::move(v));
            }
            continue;
          }
          auto [it, fresh] = index.emplace(r.next, states.size());
          if (fresh) {
            if (states.size() >= limit) throw StateLimitExceeded(limit);
            states.push_back(r.next);
            parent.push_back(i);
            via.push_back({event, id, o, r.next});
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- qualitative sets

namespace {

std::vector<std::vector<Pred>> predecessors(const FlatSpace& fs) {
  std::vector<std::vector<Pred>> pred(fs.size());
  for (std::size_t s = 0; s < fs.size(); ++s)
    for (std::size_t c = fs.offsets[s]; c < fs.offsets[s + 1]; ++c)
      for (const auto& o : fs.choices[c].outcomes)
        if (o.p > 0) pred[o.next].push_back({s, c});
  return pred;
}

// States that can reach `goal` along paths through `allowed` states.
std::vector<bool> can_reach(const FlatSpace& fs, const std::vector<std::vector<Pred>>& pred, const std::vector<bool>& goal,
                            const std::vector<bool>& allowed) {
  std::vector<bool> in(fs.size());
  std::deque<std::size_t> work;
  for (std::size_t s = 0; s < fs.size(); ++s)
    if (goal[s]) {
      in[s] = true;
      work.push_back(s);
    }
  while (!work.empty()) {
    std::size_t s = work.front();
    work.pop_front();
    for (const auto& pr : pred[s])
      if (!in[pr.state] && allowed[pr.state]) {
        in[pr.state] = true;
        work.push_back(pr.state);
      }
  }
  return in;
}

const std::vector<bool>& mask_of(const FlatSpace& fs, StateId target) {
  auto it = fs.target_masks.find(target);
  if (it == fs.target_masks.end()) throw UnknownTarget(target);
  return it->second;
}

}  // namespace

std::vector<bool> prob0_max(const FlatSpace& fs, const std::vector<bool>& target) {
  auto reach = can_reach(fs, predecessors(fs), target, std::vector<bool>(fs.size(), true));
  std::vector<bool> out(fs.size());
  for (std::size_t s = 0; s < fs.size(); ++s) out[s] = !reach[s];
  return out;
}

std::vector<bool> prob0_min(const FlatSpace& fs, const std::vector<bool>& target) {
  // positive under every scheduler: target, or every choice has an outcome already in the set
  auto pred = predecessors(fs);
  std::vector<bool> positive(fs.size());
  std::vector<bool> choice_hit(fs.choices.size());
  std::vector<std::size_t> missing(fs.size());
  std::deque<std::size_t> work;
  for (std::size_t s = 0; s < fs.size(); ++s) {
    missing[s] = fs.offsets[s + 1] - fs.offsets[s];
    if (target[s]) {
      positive[s] = true;
      work.push_back(s);
    }
  }
  while (!work.empty()) {
    std::size_t s = work.front();
    work.pop_front();
    for (const auto& pr : pred[s]) {
      if (positive[pr.state] || choice_hit[pr.choice]) continue;
      choice_hit[pr.choice] = true;
      if (--missing[pr.state] == 0) {
        positive[pr.state] = true;
        work.push_back(pr.state);
      }
    }
  }
  std::vector<bool> out(fs.size());
  for (std::size_t s = 0; s < fs.size(); ++s) out[s] = !positive[s];
  return out;
}

std::vector<bool> prob1_all(const FlatSpace& fs, const std::vector<bool>& target) {
  auto zero = prob0_min(fs, target);
  std::vector<bool> allowed(fs.size());
  for (std::size_t s = 0; s < fs.size(); ++s) allowed[s] = !target[s];
  auto escape = can_reach(fs, predecessors(fs), zero, allowed);
  std::vector<bool> out(fs.size());
  for (std::size_t s = 0; s < fs.size(); ++s) out[s] = !escape[s];
  return out;
}

// ---------------------------------------------------------------- value iteration

namespace {

struct Problem {
  const FlatSpace& fs;
  OptMode mode;
  bool with_cost;                 // expected cost instead of probability
  std::vector<bool> fixed;        // value not iterated
  std::vector<double> init;
};

double choice_value(const FlatChoice& c, const std::vector<double>& x, bool with_cost) {
  double v = 0;
  for (const auto& o : c.outcomes) v += o.p * ((with_cost ? o.cost : 0.0) + x[o.next]);
  return v;
}

// Bellman update at s; returns value and best choice index (global), or npos for no choices.
std::pair<double, std::size_t> bellman(const Problem& pb, std::size_t s, const std::vector<double>& x) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double bv = 0;
  for (std::size_t c = pb.fs.offsets[s]; c < pb.fs.offsets[s + 1]; ++c) {
    double v = choice_value(pb.fs.choices[c], x, pb.with_cost);
    bool better = best == std::numeric_limits<std::size_t>::max() ||
                  (pb.mode == OptMode::Max ? v > bv + 1e-15 : v < bv - 1e-15);
    if (better) {
      bv = v;
      best = c;
    }
  }
  return {bv, best};
}

double residual_of(const Problem& pb, const std::vector<double>& x) {
  double r = 0;
  for (std::size_t s = 0; s < pb.fs.size(); ++s) {
    if (pb.fixed[s]) continue;
    r = std::max(r, std::abs(bellman(pb, s, x).first - x[s]));
  }
  return r;
}

// Solves the linear system of the greedy policy; empty on failure.
std::optional<std::vector<double>> solve_policy(const Problem& pb, const std::vector<double>& x) {
  const FlatSpace& fs = pb.fs;
  std::vector<long> col(fs.size(), -1);
  long n = 0;
  for (std::size_t s = 0; s < fs.size(); ++s)
    if (!pb.fixed[s]) col[s] = n++;
  if (n == 0) return x;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < fs.size(); ++s) {
    if (col[s] < 0) continue;
    trip.emplace_back(col[s], col[s], 1.0);
    auto [v, c] = bellman(pb, s, x);
    if (c == std::numeric_limits<std::size_t>::max()) continue;  // deadlock: value 0
    for (const auto& o : fs.choices[c].outcomes) {
      if (pb.with_cost) b[col[s]] += o.p * o.cost;
      if (col[o.next] >= 0) trip.emplace_back(col[s], col[o.next], -o.p);
      else b[col[s]] += o.p * x[o.next];
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd sol = lu.solve(b);
  if (lu.info() != Eigen::Success) return std::nullopt;
  std::vector<double> y = x;
  for (std::size_t s = 0; s < fs.size(); ++s) {
    if (col[s] < 0) continue;
    double v = sol[col[s]];
    if (!std::isfinite(v)) return std::nullopt;
    y[s] = v;
  }
  return y;
}

NumericResult iterate(const Problem& pb, const IterationOptions& opt) {
  const FlatSpace& fs = pb.fs;
  std::vector<double> x = pb.init, y = pb.init;
  NumericResult res;
  bool converged = false;
  double delta = 0;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    delta = 0;
    double scale = 1;
    for (std::size_t s = 0; s < fs.size(); ++s) {
      if (pb.fixed[s]) continue;
      double v = bellman(pb, s, x).first;
      delta = std::max(delta, std::abs(v - x[s]));
      scale = std::max(scale, std::abs(v));
      y[s] = v;
    }
    std::swap(x, y);
    res.iterations = it;
    if (opt.on_iterate) opt.on_iterate(it, x);
    if (delta < opt.eps * (pb.with_cost ? scale : 1.0)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NoConvergence(opt.max_iter, delta);
  res.residual = delta;
  if (opt.polish) {
    if (auto y2 = solve_policy(pb, x)) {
      double scale = 1;
      double gap = 0;
      for (std::size_t s = 0; s < fs.size(); ++s) {
        scale = std::max(scale, std::abs((*y2)[s]));
        gap = std::max(gap, std::abs((*y2)[s] - x[s]));
      }
      double r = residual_of(pb, *y2);
      if (r < opt.eps * scale && gap < 1e-6 * scale) {
        x = std::move(*y2);
        res.residual = r;
        res.polished = true;
      }
    }
  }
  res.values = std::move(x);
  res.value = res.values[fs.initial];
  return res;
}

}  // namespace

NumericResult reachability(const FlatSpace& fs, StateId target, OptMode mode, const IterationOptions& opt) {
  const auto& T = mask_of(fs, target);
  auto zero = mode == OptMode::Max ? prob0_max(fs, T) : prob0_min(fs, T);
  Problem pb{fs, mode, false, std::vector<bool>(fs.size()), std::vector<double>(fs.size(), 0.0)};
  for (std::size_t s = 0; s < fs.size(); ++s) {
    pb.fixed[s] = T[s] || zero[s];
    pb.init[s] = T[s] ? 1.0 : 0.0;
  }
  NumericResult r = iterate(pb, opt);
  for (double& v : r.values) v = std::clamp(v, 0.0, 1.0);
  r.value = r.values[fs.initial];
  return r;
}

NumericResult expected_cost(const FlatSpace& fs, StateId target, OptMode mode, const IterationOptions& opt) {
  const auto& T = mask_of(fs, target);
  auto sure = prob1_all(fs, T);
  if (!sure[fs.initial]) {
    // first reachable state, avoiding the target, from which some scheduler escapes
    std::vector<bool> seen(fs.size());
    std::deque<std::size_t> work{fs.initial};
    seen[fs.initial] = true;
    std::size_t escape = fs.initial;
    auto zero = prob0_min(fs, T);
    while (!work.empty()) {
      std::size_t s = work.front();
      work.pop_front();
      if (zero[s]) {
        escape = s;
        break;
      }
      for (const auto& ch : fs.choices_of(s))
        for (const auto& o : ch.outcomes)
          if (!seen[o.next] && !T[o.next]) {
            seen[o.next] = true;
            work.push_back(o.next);
          }
    }
    throw TargetNotAlmostSure(mode, fs.states[escape],
                              "some scheduler avoids the target with positive probability, e.g. via state " +
                                  inline_state(nullptr, fs.states[escape]));
  }
  Problem pb{fs, mode, true, std::vector<bool>(fs.size()), std::vector<double>(fs.size(), 0.0)};
  for (std::size_t s = 0; s < fs.size(); ++s) pb.fixed[s] = T[s] || !sure[s];
  NumericResult r = iterate(pb, opt);
  for (std::size_t s = 0; s < fs.size(); ++s)
    if (!sure[s] && !T[s]) r.values[s] = std::numeric_limits<double>::infinity();
  r.value = r.values[fs.initial];
  return r;
}

QueryResult run_query(const FlatSpace& fs, const Query& q, const IterationOptions& opt) {
  NumericResult r;
  switch (q.kind) {
    case QueryKind::Pmin: r = reachability(fs, q.target, OptMode::Min, opt); break;
    case QueryKind::Pmax: r = reachability(fs, q.target, OptMode::Max, opt); break;
    case QueryKind::Emin: r = expected_cost(fs, q.target, OptMode::Min, opt); break;
    case QueryKind::Emax: r = expected_cost(fs, q.target, OptMode::Max, opt); break;
  }
  return {q, r.value, r.residual, r.iterations, fs.size()};
}

// ---------------------------------------------------------------- lint

std::vector<Conflict> check_conflicts(const GCProgram& p, const FlatSpace& fs) {
  std::vector<Conflict> out;
  for (std::size_t s = 0; s < fs.size(); ++s) {
    std::map<std::size_t, std::vector<int>> by_event;
    for (const auto& ch : fs.choices_of(s))
      if (!p.command(ch.command).time_advance) by_event[ch.event].push_back(ch.command);
    for (auto& [e, cmds] : by_event)
      if (cmds.size() >= 2) out.push_back({s, fs.events[e], std::move(cmds)});
  }
  return out;
}

// ---------------------------------------------------------------- simulation

Trace simulate(const GCProgram& p, std::span<const std::string> script, std::uint64_t seed, SimResolution resolution) {
  Resolver r = resolution == SimResolution::Random ? Resolver::random(seed) : Resolver::deterministic();
  Trace t;
  t.initial = p.regions.initial;
  ProgramState cur = t.initial;
  std::vector<WitnessStep> so_far;
  for (const auto& event : script) {
    StepResult step;
    try {
      step = interpret_step(p, cur, event, r);
    } catch (const RangeViolation& ex) {
      throw TracedRangeViolation(ex, so_far, event);
    }
    cur = step.next;
    so_far.push_back({event, step.fired.value_or(0), step.outcome, cur});
    t.steps.push_back({event, step.fired, cur, step.cost});
  }
  return t;
}

}  // namespace pchart
