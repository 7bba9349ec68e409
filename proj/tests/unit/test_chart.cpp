#include <random>

#include <doctest.h>

#include "pchart/chart.hpp"
#include "support.hpp"

using namespace pchart;
using nlohmann::json;

namespace {

json fixture_json(const std::string& name) { return json::parse(test::read_text(test::fixture_path(name))); }

json& state_json(json& doc, StateId id) {
  for (auto& s : doc["states"])
    if (s["id"] == id) return s;
  throw std::runtime_error("no state");
}

std::string rule_of(const std::string& text) {
  try {
    parse_chart(text);
  } catch (const InvariantViolation& e) {
    return e.rule();
  }
  return "";
}

}  // namespace

TEST_CASE("fixture census") {
  Chart empty = test::load_fixture("empty");
  CHECK(empty.states.size() == 2);
  CHECK(empty.transitions.empty());
  Chart toggle = test::load_fixture("toggle");
  CHECK(toggle.states.size() == 3);
  CHECK(toggle.transitions.size() == 2);
  CHECK(toggle.state(toggle.root).kind == StateKind::Xor);
  CHECK(toggle.qualified_name(2) == "root.Off");
  CHECK(toggle.find_state("On") == StateId{3});
  CHECK(toggle.find_state("root.On") == StateId{3});
  CHECK_FALSE(toggle.find_state("Missing"));
  CHECK(toggle.next_id == 6);
  CHECK(label_text(toggle.transitions.at(4)) == "E");
  CHECK(connections(toggle).size() == 2);
  CHECK(connections(test::load_fixture("coin")).size() == 3);
  CHECK(pseudo_nodes(test::load_fixture("coin")).size() == 1);
}

TEST_CASE("every fixture validates") {
  for (const auto& name : test::fixture_names()) {
    CAPTURE(name);
    Chart c = parse_chart_unchecked(test::read_text(test::fixture_path(name)));
    CHECK_FALSE(has_errors(validate(c)));
  }
}

TEST_CASE("json and schema errors") {
  CHECK_THROWS_AS(parse_chart("{\"states\": ["), JsonSyntax);
  try {
    parse_chart("{\n  \"name\": 1,\n  oops\n}");
    FAIL("no error");
  } catch (const JsonSyntax& e) {
    CHECK(e.line() == 3);
  }
  json doc = fixture_json("toggle");
  doc["states"][1]["kind"] = "hexagon";
  CHECK_THROWS_AS(parse_chart(doc.dump()), SchemaViolation);
  doc = fixture_json("toggle");
  doc.erase("root");
  CHECK_THROWS_AS(parse_chart(doc.dump()), SchemaViolation);
}

TEST_CASE("structural rules") {
  json doc = fixture_json("toggle");
  state_json(doc, 1).erase("initial");
  CHECK_THROWS_AS(parse_chart(doc.dump()), SchemaViolation);

  doc = fixture_json("toggle");
  state_json(doc, 3)["name"] = "Off";
  CHECK(rule_of(doc.dump()) == "sibling-names");

  doc = fixture_json("toggle");
  state_json(doc, 3)["box"]["x"] = 60;
  CHECK(rule_of(doc.dump()) == "box-disjoint");

  doc = fixture_json("toggle");
  doc["transitions"][0]["label"] = "tick";
  CHECK(rule_of(doc.dump()) == "event-name");

  doc = fixture_json("toggle");
  doc["transitions"][0]["body"]["target"] = 1;
  CHECK(rule_of(doc.dump()) == "target-root");

  doc = fixture_json("coin");
  for (auto& b : doc["transitions"][0]["body"]["branches"]) b["prob"] = "9/20";
  try {
    parse_chart(doc.dump());
    FAIL("no error");
  } catch (const InvariantViolation& e) {
    CHECK(e.rule() == "prob-sum");
    CHECK(e.object_id() == "p6");
    CHECK(std::string(e.what()).find("0.9") != std::string::npos);
  }
}

TEST_CASE("comments survive a round trip") {
  json doc = fixture_json("counter_good");
  state_json(doc, 1)["comment"] = "top level";
  state_json(doc, 1)["variables"][0]["comment"] = "the counter";
  doc["transitions"][0]["comment"] = "step";
  Chart c = parse_chart(doc.dump());
  CHECK(c.state(1).comment == "top level");
  CHECK(c.state(1).variables[0].comment == "the counter");
  Chart again = parse_chart(serialize_chart(c));
  CHECK(again == c);
  CHECK(again.transitions.begin()->second.comment == "step");
}

TEST_CASE("serialization is canonical") {
  for (const auto& name : test::fixture_names()) {
    CAPTURE(name);
    std::string text = test::read_text(test::fixture_path(name));
    Chart c = parse_chart(text);
    CHECK(serialize_chart(c) == text);
    CHECK(serialize_chart(parse_chart(serialize_chart(c))) == serialize_chart(c));
  }
}

TEST_CASE("accumulated invariants and scope") {
  Chart c = parse_chart(test::counter_chart(2, 3, "c0 + c1 <= 5", "c# >= 1"));
  StateId hi0 = *c.find_state("Hi0");
  Expr acc = accumulated_invariant(c, hi0);
  CHECK(acc == parse_expr("c0 + c1 <= 5 and c0 >= 1"));
  CHECK(accumulated_invariant(c, c.root) == parse_expr("c0 + c1 <= 5"));
  TypeEnv env = scope_env(c, hi0);
  CHECK(env.size() == 2);
  CHECK(env.at("c1") == VarType::range(0, 3));
}

TEST_CASE("property: a state's accumulated invariant implies its ancestors'") {
  Chart c = parse_chart(test::counter_chart(3, 4, "c0 + c1 + c2 <= 9", "c# mod 2 = 1"));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> val(0, 4);
  for (StateId s : c.preorder()) {
    auto parent = c.parent(s);
    if (!parent) continue;
    Expr inner = accumulated_invariant(c, s);
    Expr outer = accumulated_invariant(c, *parent);
    for (int i = 0; i < 200; ++i) {
      Valuation v{{"c0", val(rng)}, {"c1", val(rng)}, {"c2", val(rng)}};
      if (std::get<bool>(eval(inner, v))) CHECK(std::get<bool>(eval(outer, v)));
    }
  }
}

TEST_CASE("tree helpers") {
  Chart c = test::load_fixture("nested");
  for (StateId s : c.preorder()) {
    auto path = c.path_from_root(s);
    CHECK(path.front() == c.root);
    CHECK(path.back() == s);
    CHECK(c.depth(s) == static_cast<int>(path.size()) - 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) CHECK(c.is_ancestor(path[i], s));
    CHECK_FALSE(c.is_ancestor(s, s));
  }
  CHECK(c.preorder().size() == c.states.size());
}

TEST_CASE("geometry predicates") {
  Rect a{0, 0, 10, 10}, b{10, 0, 10, 10}, c{5, 5, 10, 10};
  CHECK_FALSE(overlaps(a, b));
  CHECK(overlaps(a, c));
  CHECK(contains(Rect{0, 0, 100, 100}, Rect{10, 10, 20, 20}));
  CHECK_FALSE(contains(a, c));
  CHECK(contains(a, Point{5, 5}));
}
