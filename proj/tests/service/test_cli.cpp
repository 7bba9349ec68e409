#include <sstream>
#include <vector>

#include <doctest.h>

#include "cli.hpp"
#include "support.hpp"

using namespace pchart;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pchart");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const char* name) { return test::fixture_path(name).string(); }

std::filesystem::path scratch(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate") {
  CHECK(cli({"validate", fx("toggle")}).code == kExitOk);
  CHECK(cli({"validate", "/nonexistent/chart.pchart"}).code == kExitUsage);
  auto dir = scratch("pchart_cli_validate");
  auto doc = nlohmann::json::parse(test::read_text(test::fixture_path("toggle")));
  doc["states"][2]["name"] = "Off";
  test::write_text(dir / "clash.pchart", doc.dump());
  Run r = cli({"validate", (dir / "clash.pchart").string()});
  CHECK(r.code == kExitDiagnostics);
  CHECK(r.err.find("name clash") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"codegen", fx("toggle"), "--target", "java", "--out", "x"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("compile prints the program listing") {
  Run r = cli({"compile", fx("coin")});
  CHECK(r.code == kExitOk);
  CHECK(r.out == test::read_text(test::golden_path("coin.gc")));
}

TEST_CASE("check reports violations with a witness") {
  Run good = cli({"check", fx("counter_good")});
  CHECK(good.code == kExitOk);
  Run bad = cli({"check", fx("counter_bad")});
  CHECK(bad.code == kExitDiagnostics);
  CHECK(bad.out.find("1 violation") != std::string::npos);
  CHECK(bad.out.find("inc") != std::string::npos);
}

TEST_CASE("query") {
  Run r = cli({"query", fx("coin"), "--kind", "Pmax", "--target", "Goal"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "0.5\n");
  Run all = cli({"query", fx("coin")});
  CHECK(all.code == kExitOk);
  CHECK(all.out.find("Pmax") != std::string::npos);
  CHECK(cli({"query", fx("coin"), "--kind", "Emin", "--target", "Goal"}).code == kExitDiagnostics);
  CHECK(cli({"query", fx("coin"), "--kind", "Pmax", "--target", "Nowhere"}).code != kExitOk);
}

TEST_CASE("codegen writes files") {
  auto dir = scratch("pchart_cli_codegen");
  CHECK(cli({"codegen", fx("toggle"), "--target", "c", "--out", dir.string()}).code == kExitOk);
  CHECK(test::read_text(dir / "toggle.c") == test::read_text(test::golden_path("toggle.c")));
  CHECK(std::filesystem::exists(dir / "toggle_harness.c"));
  CHECK(cli({"codegen", fx("coin"), "--target", "prism", "--out", dir.string()}).code == kExitOk);
  CHECK(test::read_text(dir / "coin.prism") == test::read_text(test::golden_path("coin.prism")));
  CHECK(cli({"codegen", fx("coin"), "--target", "c", "--out", dir.string()}).code == kExitDiagnostics);
  std::filesystem::remove_all(dir);
}

TEST_CASE("render writes svg") {
  auto dir = scratch("pchart_cli_render");
  std::filesystem::create_directories(dir);
  auto out = dir / "toggle.svg";
  CHECK(cli({"render", fx("toggle"), "--out", out.string()}).code == kExitOk);
  CHECK(test::read_text(out) == test::read_text(test::golden_path("toggle.svg")));
  auto debug = dir / "debug.json";
  CHECK(cli({"render", fx("toggle"), "--out", out.string(), "--debug", debug.string()}).code == kExitOk);
  CHECK(nlohmann::json::parse(test::read_text(debug)).contains("candidates"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("simulate") {
  Run r = cli({"simulate", fx("toggle"), "--events", "E,E,E", "--deterministic"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("r_root=1") != std::string::npos);
  Run a = cli({"simulate", fx("coin"), "--events", "flip", "--seed", "4"});
  Run b = cli({"simulate", fx("coin"), "--events", "flip", "--seed", "4"});
  CHECK(a.out == b.out);
  CHECK(cli({"simulate", fx("counter_bad"), "--events", "inc,inc,inc,inc,inc,inc,inc,inc,inc,inc"}).code ==
        kExitDiagnostics);
}
