#include <regex>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <doctest.h>

#include "pchart/render.hpp"
#include "support.hpp"

using namespace pchart;

namespace {

DisplayList display_of(const Chart& c) { return build_display_list(c, layout_chart(c)); }

template <class T>
std::size_t count_of(const DisplayList& d) {
  std::size_t n = 0;
  for (const auto& item : d.items) n += std::holds_alternative<T>(item) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("display list census") {
  Chart toggle = test::load_fixture("toggle");
  DisplayList d = display_of(toggle);
  CHECK(d.chart == "toggle");
  CHECK(count_of<dl::Box>(d) == 3);
  CHECK(count_of<dl::Path>(d) == 2);
  CHECK(count_of<dl::Marker>(d) == 0);
  CHECK(count_of<dl::DashedLine>(d) == 0);

  DisplayList coin = display_of(test::load_fixture("coin"));
  CHECK(count_of<dl::Marker>(coin) == 1);
  CHECK(count_of<dl::Path>(coin) == 3);

  DisplayList traffic = display_of(test::load_fixture("traffic"));
  CHECK(count_of<dl::DashedLine>(traffic) == 1);

  DisplayList empty = display_of(test::load_fixture("empty"));
  CHECK(count_of<dl::Box>(empty) == 2);
  CHECK(count_of<dl::Path>(empty) == 0);
}

TEST_CASE("boxes come before their children") {
  DisplayList d = display_of(test::load_fixture("nested"));
  std::set<StateId> seen;
  for (const auto& item : d.items) {
    if (const auto* b = std::get_if<dl::Box>(&item)) {
      if (b->parent) CHECK(seen.count(*b->parent));
      seen.insert(b->state);
      CHECK(object_of(item) == state_object_id(b->state));
    }
  }
}

TEST_CASE("every connection has a path and a label or leader") {
  for (const char* name : {"labels_00", "labels_05", "traffic"}) {
    CAPTURE(name);
    Chart c = test::load_fixture(name);
    LayoutResult lay = layout_chart(c);
    DisplayList d = build_display_list(c, lay);
    std::set<std::string> paths, labels, leaders;
    for (const auto& item : d.items) {
      if (const auto* p = std::get_if<dl::Path>(&item)) paths.insert(p->connection);
      if (const auto* t = std::get_if<dl::Text>(&item); t && t->role == dl::TextRole::Label) labels.insert(t->object);
      if (const auto* l = std::get_if<dl::Leader>(&item)) leaders.insert(l->connection);
    }
    for (const auto& conn : connections(c)) {
      CHECK(paths.count(conn.id));
      if (!conn.label.empty()) CHECK(labels.count(conn.id));
    }
    for (const auto& [id, pl] : lay.labels.placements) CHECK(leaders.count(id) == (pl.leader ? 1u : 0u));
  }
}

TEST_CASE("missing layout is reported") {
  Chart c = test::load_fixture("toggle");
  LayoutResult lay = layout_chart(c);
  lay.paths.erase("c4");
  try {
    build_display_list(c, lay);
    FAIL("no error");
  } catch (const MissingLayout& e) {
    CHECK(e.object() == "c4");
  }
}

TEST_CASE("svg is well formed with unique ids") {
  std::regex id_attr("id=\"([^\"]+)\"");
  for (const auto& name : test::fixture_names()) {
    CAPTURE(name);
    std::string svg = render_svg(display_of(test::load_fixture(name)));
    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    CHECK_NOTHROW(boost::property_tree::read_xml(in, tree));
    CHECK(tree.count("svg") == 1);
    std::set<std::string> ids;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), id_attr); it != std::sregex_iterator(); ++it)
      CHECK_MESSAGE(ids.insert((*it)[1]).second, (*it)[1]);
  }
}

TEST_CASE("leaders are dotted") {
  RenderStyle style;
  std::string svg = render_svg(display_of(test::load_fixture("labels_00")), std::nullopt, style);
  CHECK(svg.find("class=\"leader\"") != std::string::npos);
  std::regex leader("<line class=\"leader\"[^>]*>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), leader); it != std::sregex_iterator(); ++it)
    CHECK(it->str().find("stroke-dasharray=\"" + style.leader_dash + "\"") != std::string::npos);
}

TEST_CASE("canvas size") {
  std::string svg = render_svg(display_of(test::load_fixture("toggle")), CanvasSize{500, 400});
  CHECK(svg.find("width=\"500\" height=\"400\"") != std::string::npos);
  std::string fitted = render_svg(display_of(test::load_fixture("toggle")));
  CHECK(fitted.find("width=\"340\" height=\"200\"") != std::string::npos);
}

TEST_CASE("display list json") {
  nlohmann::json j = to_json(display_of(test::load_fixture("coin")));
  CHECK(j["chart"] == "coin");
  CHECK(j["items"].is_array());
  CHECK(j["items"].size() == display_of(test::load_fixture("coin")).items.size());
}
