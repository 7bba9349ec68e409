#pragma once

// Flattening of a chart into probabilistic guarded commands with priority,
// the reference interpreter for that program, and its textual listing.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pchart/chart.hpp"
#include "pchart/errors.hpp"
#include "pchart/expr.hpp"
#include "pchart/rational.hpp"

namespace pchart {

enum class VarRole { Region, Data, Clock, Deadline };

struct ProgramVar {
  std::string name;
  VarRole role = VarRole::Data;
  VarType type;
  std::int64_t init = 0;  // bools are 0/1
  StateId owner = 0;      // declaring state, region state, or timed state
  std::string chart_name;  // data variables: name as written in the chart
  std::optional<std::string> comment;
};

// Control-variable encoding of the state tree plus the data variables.
struct RegionMap {
  std::vector<ProgramVar> variables;                               // regions, data, then timers
  std::map<StateId, std::size_t> region_var;                       // Xor state -> variable index
  std::map<StateId, std::pair<std::size_t, std::int64_t>> encoding;  // child of an Xor -> (variable, value)
  std::map<StateId, Expr> activity;                                // conjunction of region tests, `true` for root
  // Per state: chart variable name -> program name for every variable in scope.
  std::map<StateId, std::map<std::string, std::string, std::less<>>> scope_renaming;
  std::vector<std::int64_t> initial;

  std::optional<std::size_t> index_of(std::string_view name) const;
  const ProgramVar& var(std::string_view name) const;
};

struct TimerDecl {
  StateId state = 0;
  std::size_t clock = 0;
  std::int64_t bound = 0;
  std::optional<std::size_t> deadline;  // uniform delays
  std::int64_t uniform_lo = 0;
  std::int64_t uniform_hi = 0;
};

struct Outcome {
  Rational prob = Rational(1);
  std::vector<Assignment> updates;  // parallel, distinct targets
  Rational cost;
  std::optional<StateId> target;     // goto leaf target, for listings
};

struct GuardedCommand {
  int id = 0;  // 1-based
  std::string event;
  int priority = 0;
  Expr guard = Expr::bool_lit(true);
  std::vector<Outcome> outcomes;
  std::optional<TransId> source_trans;
  StateId source_state = 0;
  std::optional<std::string> comment;
  // Clock advance on `tick`: never shadows and is never shadowed.
  bool time_advance = false;
};

struct CostRate {
  StateId state = 0;
  Expr active = Expr::bool_lit(true);
  Rational rate;
};

namespace detail {
struct Lowered;
}

struct GCProgram {
  std::string name;
  RegionMap regions;
  std::vector<GuardedCommand> commands;
  std::vector<TimerDecl> timers;
  std::vector<std::string> events;  // first appearance order, `tick` last
  std::vector<CostRate> cost_rates;
  // Accumulated invariant of each state that has one somewhere on its path, in program names.
  std::map<StateId, Expr> invariants;
  std::map<StateId, std::string> state_names;  // qualified chart names

  const std::vector<ProgramVar>& variables() const { return regions.variables; }
  const GuardedCommand& command(int id) const { return commands.at(static_cast<std::size_t>(id - 1)); }
  bool has_probabilistic_outcomes() const;

  // Slot-compiled guards and updates; built by compile() or on first use by lower().
  std::shared_ptr<const detail::Lowered> lowered;
};

// Builds the slot-compiled form; compile() already does this.
void lower(GCProgram& p);

class UnsupportedTrigger : public Error {
 public:
  UnsupportedTrigger(std::string trigger, TransId trans)
      : Error("UnsupportedTrigger", "transition t" + std::to_string(trans) + ": '" + trigger + "' delays are not supported"),
        trans_(trans) {}
  TransId trans() const noexcept { return trans_; }

 private:
  TransId trans_;
};

class RangeViolation : public Error {
 public:
  RangeViolation(std::string var, std::int64_t value, std::optional<TransId> trans);
  const std::string& var() const noexcept { return var_; }
  std::int64_t value() const noexcept { return value_; }
  std::optional<TransId> trans() const noexcept { return trans_; }

 private:
  std::string var_;
  std::int64_t value_;
  std::optional<TransId> trans_;
};

// Priority of a transition whose source sits at `depth`; deeper wins.
constexpr int priority_for_depth(int depth) { return depth; }

RegionMap encode_regions(const Chart& chart);
GCProgram compile(const Chart& chart);
std::string pretty_print(const GCProgram& p);

// ---------------------------------------------------------------- interpretation

using ProgramState = std::vector<std::int64_t>;

class Resolver {
 public:
  enum class Kind { Deterministic, Random, Scripted };

  static Resolver deterministic() { return Resolver(Kind::Deterministic, 0); }
  static Resolver random(std::uint64_t seed) { return Resolver(Kind::Random, seed); }
  static Resolver scripted(int command, std::size_t outcome) {
    Resolver r(Kind::Scripted, 0);
    r.command_ = command;
    r.outcome_ = outcome;
    return r;
  }

  Kind kind() const noexcept { return kind_; }
  // Picks one of the enabled command ids (given in program order).
  int choose_command(std::span<const int> enabled);
  std::size_t choose_outcome(const GuardedCommand& c);

 private:
  Resolver(Kind k, std::uint64_t seed) : kind_(k), rng_(seed) {}
  Kind kind_;
  std::mt19937_64 rng_;
  int command_ = 0;
  std::size_t outcome_ = 0;
};

struct StepResult {
  ProgramState next;
  Rational cost;
  std::optional<int> fired;  // command id
  std::size_t outcome = 0;
};

// Commands interpret_step may fire for `event`: the top-priority enabled
// commands plus any enabled time-advance commands, in program order.
std::vector<int> enabled_class(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event);
// All commands for `event` whose guard holds, ignoring priority.
std::vector<int> enabled_commands(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event);
// Applies one outcome; cost includes active cost rates for time-advance commands.
StepResult apply_outcome(const GCProgram& p, std::span<const std::int64_t> v, int command, std::size_t outcome);
StepResult interpret_step(const GCProgram& p, std::span<const std::int64_t> v, std::string_view event, Resolver& choice);

bool is_active(const GCProgram& p, std::span<const std::int64_t> v, StateId s);
Valuation to_valuation(const GCProgram& p, std::span<const std::int64_t> v);
// `name=value` lines in variable order; bools print as 0/1.
std::string dump_state(const GCProgram& p, std::span<const std::int64_t> v);

}  // namespace pchart
