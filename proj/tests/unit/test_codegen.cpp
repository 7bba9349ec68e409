#include <doctest.h>

#include "pchart/codegen.hpp"
#include "support.hpp"

using namespace pchart;

namespace {

bool has(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("toggle C code") {
  Chart c = test::load_fixture("toggle");
  CCodeUnit u = gen_c(compile(c), c);
  CHECK(u.name == "toggle");
  CHECK(u.event_functions == std::vector<std::string>{"toggle_event_E"});
  CHECK(has(u.source, "static int64_t r_root = 0;"));
  CHECK(has(u.source, "  if (r_root == 0) {\n    r_root = 1;\n  } else if (r_root == 1) {\n    r_root = 0;\n  }"));
  CHECK(has(u.header, "void toggle_event_E(void);"));
  CHECK(has(u.harness, "main"));
}

TEST_CASE("probabilistic charts have no C code") {
  Chart c = test::load_fixture("coin");
  try {
    gen_c(compile(c), c);
    FAIL("no error");
  } catch (const ProbabilisticChart& e) {
    CHECK(e.command() == 1);
  }
}

TEST_CASE("variable comments precede the declaration") {
  Chart c = test::load_fixture("counter_good");
  CCodeUnit u = gen_c(compile(c), c);
  CHECK(has(u.source, "// speed setting\nstatic int64_t x = 0;"));
  PrismUnit m = gen_prism(compile(c), c);
  CHECK(has(m.model, "// speed setting\n  x : [0..3] init 0;"));
}

TEST_CASE("range checks set the error flag") {
  Chart c = test::load_fixture("counter_bad");
  CCodeUnit u = gen_c(compile(c), c);
  CHECK(has(u.source, "counter_bad_err = " + std::to_string(c.transitions.begin()->first)));
}

TEST_CASE("PRISM output") {
  Chart coin = test::load_fixture("coin");
  PrismUnit u = gen_prism(compile(coin), coin);
  CHECK(has(u.model, "mdp\n"));
  CHECK(has(u.model, "  [flip] r_root=0 -> 0.5:(r_root'=1) + 0.5:(r_root'=2);\n"));
  CHECK(has(u.properties, "Pmax=? [ F "));

  Chart toggle = test::load_fixture("toggle");
  GCProgram tp = compile(toggle);
  CHECK(prism_action(tp.commands[0]) == "E");
  CHECK(has(gen_prism(tp, toggle).model, "[E] r_root=0 -> (r_root'=1);"));
}

TEST_CASE("strengthened guards exclude higher priorities") {
  Chart c = test::load_fixture("nested");
  GCProgram p = compile(c);
  auto g = strengthened_guards(p);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == p.commands[0].guard);
  CHECK(g[1] == Expr::binary(BinaryOp::And, p.commands[1].guard, Expr::negate(p.commands[0].guard)));
  CHECK(g[2] == p.commands[2].guard);
  CHECK(has(gen_prism(p, c).model, "!((r_root=0) & (r_Outer=0))"));
}

TEST_CASE("property: strengthened guards never overlap across priorities") {
  for (const auto& name : test::fixture_names()) {
    CAPTURE(name);
    GCProgram p = compile(test::load_fixture(name));
    auto g = strengthened_guards(p);
    for (const ProgramState& v : test::reachable_states(p)) {
      Valuation env = to_valuation(p, v);
      for (std::size_t i = 0; i < p.commands.size(); ++i)
        for (std::size_t j = 0; j < p.commands.size(); ++j) {
          const auto& a = p.commands[i];
          const auto& b = p.commands[j];
          if (a.event != b.event || a.time_advance || b.time_advance || a.priority <= b.priority) continue;
          CHECK_FALSE((std::get<bool>(eval(g[i], env)) && std::get<bool>(eval(g[j], env))));
        }
    }
  }
}

TEST_CASE("units are written to disk") {
  auto dir = std::filesystem::temp_directory_path() / "pchart_codegen_test";
  std::filesystem::remove_all(dir);
  Chart c = test::load_fixture("toggle");
  GCProgram p = compile(c);
  auto files = write_unit(gen_c(p, c), dir);
  CHECK(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  auto prism = write_unit(gen_prism(p, c), dir);
  CHECK(prism.size() == 2);
  CHECK(test::read_text(dir / "toggle.prism") == gen_prism(p, c).model);
  std::filesystem::remove_all(dir);
}
