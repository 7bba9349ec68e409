#pragma once

// Explicit-state analysis of a compiled program: reachable state space,
// invariant verification, extremal reachability probabilities and expected
// costs by value iteration, same-priority conflict lint, and simulation.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pchart/chart.hpp"
#include "pchart/compiler.hpp"

namespace pchart {

struct ProgramStateHash {
  std::size_t operator()(const ProgramState& v) const noexcept;
};

struct FlatOutcome {
  Rational prob;
  double p = 0;
  std::size_t next = 0;
  double cost = 0;  // outcome cost plus rate cost on time advance
};

struct FlatChoice {
  int command = 0;
  std::size_t event = 0;  // index into FlatSpace::events
  std::vector<FlatOutcome> outcomes;
};

struct FlatSpace {
  std::vector<ProgramState> states;  // BFS order
  std::size_t initial = 0;
  std::vector<std::string> events;
  std::vector<std::size_t> offsets;  // choices of state s: [offsets[s], offsets[s+1])
  std::vector<FlatChoice> choices;
  std::map<StateId, std::vector<bool>> target_masks;  // chart state active per flat state
  std::unordered_map<ProgramState, std::size_t, ProgramStateHash> index;

  std::size_t size() const { return states.size(); }
  std::span<const FlatChoice> choices_of(std::size_t s) const {
    return {choices.data() + offsets[s], offsets[s + 1] - offsets[s]};
  }
  std::optional<std::size_t> find(const ProgramState& v) const;
};

struct WitnessStep {
  std::string event;
  int command = 0;
  std::size_t outcome = 0;
  ProgramState post;
};

class StateLimitExceeded : public Error {
 public:
  explicit StateLimitExceeded(std::size_t limit)
      : Error("StateLimitExceeded", "reachable state space exceeds " + std::to_string(limit) + " states"), limit_(limit) {}
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t limit_;
};

// RangeViolation reached from the initial state; `trace` leads to the pre-state.
class TracedRangeViolation : public RangeViolation {
 public:
  TracedRangeViolation(const RangeViolation& e, std::vector<WitnessStep> trace, std::string event)
      : RangeViolation(e), trace_(std::move(trace)), event_(std::move(event)) {}
  const std::vector<WitnessStep>& trace() const noexcept { return trace_; }
  std::size_t step() const noexcept { return trace_.size(); }
  const std::string& event() const noexcept { return event_; }

 private:
  std::vector<WitnessStep> trace_;
  std::string event_;
};

inline constexpr std::size_t kDefaultStateLimit = 1'000'000;
inline constexpr double kDefaultEps = 1e-9;
inline constexpr std::size_t kDefaultMaxIter = 1'000'000;

FlatSpace enumerate_states(const GCProgram& p, std::size_t limit = kDefaultStateLimit);

// ---------------------------------------------------------------- invariants

struct Violation {
  std::optional<int> command;  // none when the initial valuation fails
  std::optional<TransId> trans;
  StateId state = 0;           // state whose own invariant failed
  Expr violated = Expr::bool_lit(true);  // accumulated invariant of `state`, chart names
  ProgramState pre;
  std::string event;
  std::size_t outcome = 0;
  ProgramState post;
  std::vector<WitnessStep> trace;  // initial -> post; empty at the initial state
};

std::vector<Violation> check_invariants(const Chart& chart, const GCProgram& p, std::size_t limit = kDefaultStateLimit);

// ---------------------------------------------------------------- quantitative

enum class OptMode { Min, Max };

struct IterationOptions {
  double eps = kDefaultEps;
  std::size_t max_iter = kDefaultMaxIter;
  bool polish = true;  // solve the greedy policy exactly and keep it when it is a fixpoint
  std::function<void(std::size_t, std::span<const double>)> on_iterate;
};

struct NumericResult {
  double value = 0;  // at the initial state
  std::vector<double> values;
  std::size_t iterations = 0;
  double residual = 0;
  bool polished = false;
};

class UnknownTarget : public Error {
 public:
  explicit UnknownTarget(StateId s) : Error("UnknownTarget", "query target #" + std::to_string(s) + " is not a chart state") {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(std::size_t iterations, double residual);
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class TargetNotAlmostSure : public Error {
 public:
  TargetNotAlmostSure(OptMode mode, ProgramState escape, const std::string& description);
  const ProgramState& escape_state() const noexcept { return escape_; }

 private:
  ProgramState escape_;
};

NumericResult reachability(const FlatSpace& fs, StateId target, OptMode mode, const IterationOptions& opt = {});
NumericResult expected_cost(const FlatSpace& fs, StateId target, OptMode mode, const IterationOptions& opt = {});

// Qualitative sets used by the numeric procedures, exposed for tests.
std::vector<bool> prob0_max(const FlatSpace& fs, const std::vector<bool>& target);  // Pmax = 0
std::vector<bool> prob0_min(const FlatSpace& fs, const std::vector<bool>& target);  // Pmin = 0
std::vector<bool> prob1_all(const FlatSpace& fs, const std::vector<bool>& target);  // Pmin = 1

struct QueryResult {
  Query query;
  double value = 0;
  double residual = 0;
  std::size_t iterations = 0;
  std::size_t state_count = 0;
};

QueryResult run_query(const FlatSpace& fs, const Query& q, const IterationOptions& opt = {});

// ---------------------------------------------------------------- lint

struct Conflict {
  std::size_t flat_state = 0;
  std::string event;
  std::vector<int> commands;
};

std::vector<Conflict> check_conflicts(const GCProgram& p, const FlatSpace& fs);

// ---------------------------------------------------------------- simulation

struct TraceStep {
  std::string event;
  std::optional<int> fired;
  ProgramState post;
  Rational cost;
};

struct Trace {
  ProgramState initial;
  std::vector<TraceStep> steps;
};

enum class SimResolution { Random, Deterministic };

Trace simulate(const GCProgram& p, std::span<const std::string> script, std::uint64_t seed,
               SimResolution resolution = SimResolution::Random);

}  // namespace pchart
