#pragma once

// Display list of a laid-out chart and its standalone SVG rendering.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pchart/chart.hpp"
#include "pchart/layout.hpp"

namespace pchart {

struct RenderStyle {
  double corner_radius = 8;
  double text_size = 11;
  double name_inset = 6;
  double arrow_length = 8;
  double arrow_width = 6;
  double marker_radius = 6;
  double margin = 10;
  std::string state_stroke = "#333333";
  std::string state_fill = "#fdfdf6";
  std::string separator_dash = "6 4";
  std::string leader_dash = "1 3";
  std::string path_stroke = "#222222";
  std::string label_fill = "#000000";
};

namespace dl {
struct Box {
  Rect rect;
  double corner_radius = 0;
  std::string stroke;
  StateId state = 0;
  std::optional<StateId> parent;
};
struct DashedLine {
  Separator separator;
};
struct Path {
  Polyline points;
  bool arrowhead = true;
  std::string connection;
};
enum class TextRole { StateName, Invariant, Label };
struct Text {
  Rect rect;
  std::string content;
  std::string object;
  TextRole role = TextRole::Label;
};
struct Marker {
  Point at;
  bool probabilistic = true;
  PseudoId pseudo = 0;
};
struct Leader {
  Point from, to;
  std::string connection;
};
}  // namespace dl

using DisplayItem = std::variant<dl::Box, dl::DashedLine, dl::Path, dl::Text, dl::Marker, dl::Leader>;

struct DisplayList {
  std::string chart;
  std::vector<DisplayItem> items;
};

class MissingLayout : public Error {
 public:
  explicit MissingLayout(const std::string& object)
      : Error("MissingLayout", "no layout for " + object), object_(object) {}
  const std::string& object() const noexcept { return object_; }

 private:
  std::string object_;
};

// Model id an item visualizes: "s3", "c5", "p6".
std::string object_of(const DisplayItem& item);

DisplayList build_display_list(const Chart& chart, const LayoutResult& layout, const RenderStyle& style = {});

struct CanvasSize {
  double w = 0, h = 0;
};
// Size defaults to the bounding box of the items plus margins.
std::string render_svg(const DisplayList& list, std::optional<CanvasSize> size = std::nullopt,
                       const RenderStyle& style = {});

nlohmann::json to_json(const DisplayList& list);

}  // namespace pchart
