#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include "pchart/analysis.hpp"
#include "pchart/codegen.hpp"
#include "pchart/layout.hpp"
#include "pchart/render.hpp"

using namespace pchart;

namespace {

Chart fixture(const std::string& name) {
  std::ifstream in(std::string(PCHART_SOURCE_DIR) + "/tests/fixtures/" + name + ".pchart");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_chart(ss.str());
}

// A chain of `n` states with a counter and a probabilistic retry on each step.
Chart chain(int n) {
  nlohmann::json states = nlohmann::json::array(), transitions = nlohmann::json::array();
  std::vector<int> kids;
  for (int i = 0; i < n; ++i) kids.push_back(i + 2);
  states.push_back({{"id", 1},
                    {"name", "root"},
                    {"kind", "xor"},
                    {"box", {{"x", 0}, {"y", 0}, {"w", 100 * n + 20}, {"h", 200}}},
                    {"children", kids},
                    {"initial", 2},
                    {"variables", {{{"name", "k"}, {"type", "int"}, {"init", "0"}, {"lo", 0}, {"hi", 20}}}}});
  std::int64_t next = n + 2;
  for (int i = 0; i < n; ++i) {
    states.push_back({{"id", i + 2},
                      {"name", "S" + std::to_string(i)},
                      {"kind", "basic"},
                      {"box", {{"x", 10 + 100 * i}, {"y", 60}, {"w", 60}, {"h", 40}}}});
    if (i + 1 == n) continue;
    nlohmann::json body = {{"kind", "prob"},
                           {"node", next + 1},
                           {"at", {80 + 100 * i, 150}},
                           {"branches",
                            {{{"prob", "3/4"}, {"then", {{"kind", "goto"}, {"target", i + 3}, {"cost", "1"}}}},
                             {{"prob", "1/4"}, {"then", {{"kind", "goto"}, {"target", i + 2}, {"actions", "k := (k + 1) mod 20"}, {"cost", "1"}}}}}}};
    transitions.push_back({{"id", next}, {"source", i + 2}, {"label", "go"}, {"body", body}});
    next += 2;
  }
  nlohmann::json doc{{"formatVersion", 1}, {"name", "chain"},       {"root", 1},
                     {"nextId", next},     {"states", states},      {"transitions", transitions},
                     {"queries", nlohmann::json::array()}};
  return parse_chart(doc.dump());
}

void BM_ParseExpr(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(parse_expr("(x + 3) * y div 2 <= z mod 7 and not (b or x = y)"));
}
BENCHMARK(BM_ParseExpr);

void BM_ParseSerialize(benchmark::State& st) {
  std::string text = serialize_chart(fixture("traffic"));
  for (auto _ : st) benchmark::DoNotOptimize(serialize_chart(parse_chart(text)));
}
BENCHMARK(BM_ParseSerialize);

void BM_Compile(benchmark::State& st) {
  Chart c = fixture("traffic");
  for (auto _ : st) benchmark::DoNotOptimize(compile(c));
}
BENCHMARK(BM_Compile);

void BM_Enumerate(benchmark::State& st) {
  GCProgram p = compile(chain(static_cast<int>(st.range(0))));
  std::size_t n = 0;
  for (auto _ : st) n = enumerate_states(p).size();
  st.counters["states"] = static_cast<double>(n);
}
BENCHMARK(BM_Enumerate)->Arg(10)->Arg(50)->Arg(200);

void BM_Reachability(benchmark::State& st) {
  Chart c = chain(static_cast<int>(st.range(0)));
  FlatSpace fs = enumerate_states(compile(c));
  StateId last = c.states.rbegin()->first;
  for (auto _ : st) benchmark::DoNotOptimize(reachability(fs, last, OptMode::Max).value);
}
BENCHMARK(BM_Reachability)->Arg(10)->Arg(50)->Arg(200);

void BM_ExpectedCost(benchmark::State& st) {
  Chart c = chain(static_cast<int>(st.range(0)));
  FlatSpace fs = enumerate_states(compile(c));
  StateId last = c.states.rbegin()->first;
  for (auto _ : st) benchmark::DoNotOptimize(expected_cost(fs, last, OptMode::Min).value);
}
BENCHMARK(BM_ExpectedCost)->Arg(10)->Arg(50)->Arg(200);

void BM_CheckInvariants(benchmark::State& st) {
  Chart c = fixture("traffic");
  GCProgram p = compile(c);
  for (auto _ : st) benchmark::DoNotOptimize(check_invariants(c, p));
}
BENCHMARK(BM_CheckInvariants);

void BM_Codegen(benchmark::State& st) {
  Chart c = fixture("traffic");
  GCProgram p = compile(c);
  for (auto _ : st) {
    benchmark::DoNotOptimize(gen_c(p, c));
    benchmark::DoNotOptimize(gen_prism(p, c));
  }
}
BENCHMARK(BM_Codegen);

void BM_Layout(benchmark::State& st) {
  Chart c = fixture("labels_" + std::string(st.range(0) < 10 ? "0" : "") + std::to_string(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(layout_chart(c));
}
BENCHMARK(BM_Layout)->Arg(0)->Arg(9)->Arg(19);

void BM_RenderSvg(benchmark::State& st) {
  Chart c = fixture("labels_19");
  LayoutResult l = layout_chart(c);
  for (auto _ : st) benchmark::DoNotOptimize(render_svg(build_display_list(c, l)));
}
BENCHMARK(BM_RenderSvg);

}  // namespace
BENCHMARK_MAIN();
