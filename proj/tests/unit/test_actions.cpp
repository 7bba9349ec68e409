#include <random>

#include <doctest.h>

#include "pchart/actions.hpp"
#include "support.hpp"

using namespace pchart;
using nlohmann::json;

TEST_CASE("adding a state") {
  Chart c = test::load_fixture("toggle");
  ActionResult r = apply_action(c, act::AddState{1, StateKind::Basic, {120, 120, 60, 40}, std::string("Mid")});
  REQUIRE(r.applied);
  CHECK(r.chart.states.size() == 4);
  auto id = r.chart.find_state("Mid");
  REQUIRE(id);
  CHECK(*id == 6);
  CHECK(r.chart.next_id == 7);
  CHECK(r.chart.state(1).children.back() == *id);

  ActionResult unnamed = apply_action(c, act::AddState{1, StateKind::Basic, {120, 120, 60, 40}, std::nullopt});
  REQUIRE(unnamed.applied);
  CHECK(unnamed.chart.state(6).name == "S6");
}

TEST_CASE("rejections leave the chart alone") {
  Chart c = test::load_fixture("toggle");
  ActionResult clash = apply_action(c, act::RenameState{3, "Off"});
  CHECK_FALSE(clash.applied);
  CHECK(clash.chart == c);
  REQUIRE_FALSE(clash.diagnostics.empty());
  CHECK(clash.diagnostics[0].object_id == "s3");

  ActionResult syntax = apply_action(c, act::EditLabel{4, "E [x<"});
  CHECK_FALSE(syntax.applied);
  CHECK(syntax.chart == c);
  CHECK(syntax.diagnostics[0].rule == "syntax");

  CHECK_FALSE(apply_action(c, act::DeleteState{1}).applied);
  CHECK_FALSE(apply_action(c, act::AddState{1, StateKind::Basic, {30, 60, 20, 20}, std::nullopt}).applied);
}

TEST_CASE("moving a state translates its descendants") {
  Chart c = test::load_fixture("nested");
  StateId outer = *c.find_state("Outer");
  Rect box = c.state(outer).box;
  Rect moved{box.x + 5, box.y + 7, box.w, box.h};
  ActionResult r = apply_action(c, act::MoveState{outer, moved});
  REQUIRE(r.applied);
  for (StateId ch : c.state(outer).children) {
    CHECK(r.chart.state(ch).box.x == doctest::Approx(c.state(ch).box.x + 5));
    CHECK(r.chart.state(ch).box.y == doctest::Approx(c.state(ch).box.y + 7));
  }
}

TEST_CASE("deleting a state removes its transitions") {
  Chart c = test::load_fixture("toggle");
  ActionResult r = apply_action(c, act::DeleteState{3});
  REQUIRE(r.applied);
  CHECK(r.chart.states.size() == 2);
  CHECK(r.chart.transitions.empty());
}

TEST_CASE("variables, invariants and queries") {
  Chart c = test::load_fixture("toggle");
  BatchResult b = apply_actions(c, {act::SetVariable{1, "n : 0..4 = 1", std::string("a counter")},
                                    act::SetInvariant{3, "n >= 1"},
                                    act::EditLabel{4, "E [n < 4] / n := n + 1"},
                                    act::AddQuery{QueryKind::Pmax, 3, 1}});
  REQUIRE_FALSE(b.failed);
  CHECK(b.chart.state(1).variables.size() == 1);
  CHECK(b.chart.state(1).variables[0].comment == "a counter");
  CHECK(b.chart.state(3).invariant == parse_expr("n >= 1"));
  CHECK(b.chart.queries.size() == 1);
  CHECK_FALSE(has_errors(validate(b.chart)));

  BatchResult bad = apply_actions(b.chart, {act::SetInvariant{3, ""}, act::RemoveVariable{1, "n"}});
  REQUIRE(bad.failed);
  CHECK(*bad.failed == 1);
  CHECK(bad.chart == b.chart);
}

TEST_CASE("manual label positions") {
  Chart c = test::load_fixture("toggle");
  ActionResult r = apply_action(c, act::MoveLabelManual{"c4", Rect{140, 10, 30, 14}});
  REQUIRE(r.applied);
  CHECK(r.chart.manual_labels.at("c4") == Rect{140, 10, 30, 14});
  ActionResult back = apply_action(r.chart, act::MoveLabelManual{"c4", std::nullopt});
  REQUIRE(back.applied);
  CHECK(back.chart.manual_labels.empty());
  CHECK_FALSE(apply_action(c, act::MoveLabelManual{"c99", Rect{0, 0, 1, 1}}).applied);
}

TEST_CASE("adding transitions allocates pseudo-state ids") {
  Chart c = test::load_fixture("toggle");
  json body = {{"kind", "prob"},
               {"node", 0},
               {"at", {160, 90}},
               {"branches",
                {{{"prob", "1/4"}, {"then", {{"kind", "goto"}, {"target", 3}}}},
                 {{"prob", "3/4"}, {"then", {{"kind", "goto"}, {"target", 2}}}}}}};
  ActionResult r = apply_action(c, act::AddTransition{2, "F", body});
  REQUIRE(r.applied);
  const Transition& t = r.chart.transitions.rbegin()->second;
  CHECK(t.body.kind == TransitionTree::Kind::Prob);
  CHECK(t.body.node != 0);
  CHECK_FALSE(r.chart.has_state(t.body.node));
  CHECK(r.chart.next_id > t.body.node);
}

TEST_CASE("action json round trip") {
  Chart c = test::load_fixture("traffic");
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    json j = test::random_action(c, rng);
    EditorAction a = action_from_json(j);
    CHECK(to_json(action_from_json(to_json(a))) == to_json(a));
  }
  CHECK_THROWS_AS(action_from_json({{"type", "Explode"}}), SchemaViolation);
  CHECK_THROWS_AS(action_from_json({{"type", "RenameState"}}), SchemaViolation);
  CHECK_THROWS_AS(action_from_json(json::array()), SchemaViolation);
}

TEST_CASE("property: the reducer is pure and keeps charts valid") {
  for (const char* name : {"toggle", "nested", "traffic", "coin"}) {
    CAPTURE(name);
    Chart c = test::load_fixture(name);
    std::mt19937_64 rng(31);
    int applied = 0;
    for (int i = 0; i < 200; ++i) {
      EditorAction a = action_from_json(test::random_action(c, rng));
      Chart before = c;
      ActionResult r1 = apply_action(c, a);
      ActionResult r2 = apply_action(c, a);
      CHECK(c == before);
      CHECK(r1.applied == r2.applied);
      CHECK(r1.chart == r2.chart);
      if (!r1.applied) {
        CHECK(r1.chart == c);
        CHECK(has_errors(r1.diagnostics));
        continue;
      }
      CHECK_FALSE(has_errors(validate(r1.chart)));
      CHECK(parse_chart(serialize_chart(r1.chart)) == r1.chart);
      c = r1.chart;
      ++applied;
    }
    CHECK(applied > 20);
  }
}
