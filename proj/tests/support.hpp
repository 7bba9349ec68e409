#pragma once

// Shared helpers for the test suites: fixture access, chart generators and
// independent reference explorers.

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pchart/analysis.hpp"
#include "pchart/chart.hpp"
#include "pchart/compiler.hpp"

#include <nlohmann/json.hpp>

namespace pchart::test {

std::filesystem::path source_dir();
std::filesystem::path fixture_path(const std::string& name);
std::filesystem::path golden_path(const std::string& file);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
Chart load_fixture(const std::string& name);
// Stems of tests/fixtures/*.pchart, sorted.
std::vector<std::string> fixture_names();

// Fixtures without probabilistic branches used for generated-code checks.
const std::vector<std::string>& deterministic_fixtures();

// `regions` orthogonal counters c_i : 0..hi with states Lo_i and Hi_i, and
// the given invariants on the root and on every Hi_i (empty text for none).
// The flat space has (2 * (hi + 1))^regions states.
std::string counter_chart(int regions, int hi, const std::string& root_invariant, const std::string& hi_invariant);

// Depth-first exploration that evaluates invariants on the chart expressions
// with the tree-walking evaluator. Violating post-states are not expanded.
struct BruteForceResult {
  std::size_t expanded = 0;
  bool initial_violation = false;
  bool range_error = false;
  std::set<std::pair<int, StateId>> violations;  // (command, state)
};
BruteForceResult brute_force_invariants(const Chart& chart, const GCProgram& p);

// Every program state reachable through enabled_class; outcomes that leave a
// variable range are skipped.
std::vector<ProgramState> reachable_states(const GCProgram& p);

// Activity of `s` from the region encoding alone.
bool active_by_encoding(const Chart& chart, const GCProgram& p, const ProgramState& v, StateId s);

// A random editor action against `chart`; many are expected to be rejected.
nlohmann::json random_action(const Chart& chart, std::mt19937_64& rng);

}  // namespace pchart::test
