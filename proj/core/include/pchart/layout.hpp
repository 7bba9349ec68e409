#pragma once

// Editor geometry: And-state separators and connection-label placement.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pchart/chart.hpp"

namespace pchart {

using Polyline = std::vector<Point>;

struct LayoutConfig {
  int samples = 7;                // anchor parameters per side
  double gap = 4;                 // label clearance from the path
  double repulsion_factor = 2;    // R = factor * max label dimension of the pair
  double w_centroid = 1;
  double w_repulsion = 4;
  double leader_displacement = 3;  // leader threshold: centroid cost at this many label heights
  double char_width = 6.5;
  double line_height = 14;
  double label_padding = 4;
  double marker_radius = 6;
  double self_loop = 24;
};

enum class Axis { Vertical, Horizontal };
enum class Side { Left, Right };

struct Separator {
  Axis axis = Axis::Vertical;
  double position = 0;
  double from = 0;  // perpendicular extent
  double to = 0;
  StateId owner = 0;
};

struct LabelCandidate {
  std::string connection;
  Rect rect;
  double anchor = 0;
  Side side = Side::Left;
  double cost = 0;
  bool viable = true;
};

struct Segment {
  Point a, b;
};

struct LabelPlacement {
  std::string connection;
  Rect rect;
  std::optional<Segment> leader;
  bool manual = false;
  bool viable = true;
  double cost = 0;
};

class InvalidGeometry : public Error {
 public:
  explicit InvalidGeometry(const std::string& message) : Error("InvalidGeometry", message) {}
};

class DegeneratePath : public Error {
 public:
  DegeneratePath() : Error("DegeneratePath", "connection path has zero length") {}
};

std::vector<Separator> split_and_children(const std::vector<Rect>& boxes, const Rect& outer);

double path_length(const Polyline& path);
Point path_point(const Polyline& path, double t);  // t in [0,1] along arclength
Point path_centroid(const Polyline& path);         // arclength-weighted
Point nearest_on_path(const Polyline& path, Point q);

std::vector<LabelCandidate> label_candidates(const Polyline& path, double w, double h, int k,
                                             const LayoutConfig& cfg = {});

// Obstacles for collision filtering.
struct Geometry {
  struct Box {
    StateId state;
    Rect rect;
  };
  std::vector<Box> boxes;
  std::vector<std::pair<std::string, Polyline>> paths;
  std::vector<Rect> markers;
  std::vector<std::pair<std::string, Rect>> labels;  // fixed labels
};

Geometry chart_geometry(const Chart& chart, const LayoutConfig& cfg = {});

bool segment_hits_rect(Point a, Point b, const Rect& r);  // crosses the open interior
bool polyline_hits_rect(const Polyline& path, const Rect& r);

// Removes colliding candidates; ancestors of `source` do not collide.
// When nothing survives the whole set comes back with viable = false.
std::vector<LabelCandidate> filter_collisions(std::vector<LabelCandidate> cands, const Geometry& g, const Chart& chart,
                                              StateId source, const std::string& ignore_label = {});

struct LabelSize {
  double w = 0, h = 0;
};
LabelSize label_size(const std::string& text, const LayoutConfig& cfg = {});

// Drawn path of a connection: clipped to the endpoint boxes, through waypoints.
Polyline connection_path(const Chart& chart, const Connection& c, const LayoutConfig& cfg = {});

struct LabelCostModel {
  std::map<std::string, Point> centroid;
  LayoutConfig cfg;

  double centroid_cost(const std::string& conn, const Rect& r) const;
  double repulsion(const Rect& a, const Rect& b) const;
};

struct LabelLayout {
  std::map<std::string, LabelPlacement> placements;
  std::vector<std::string> order;  // processing order, decreasing path length
  double total_cost_greedy = 0;
  double total_cost = 0;           // after the improvement sweep
  // Candidates of the final pass, per connection, for debug views.
  std::map<std::string, std::vector<LabelCandidate>> candidates;
};

// Centroid terms plus repulsion over unordered pairs of solver-placed labels.
double total_cost(const std::map<std::string, LabelPlacement>& placements, const LabelCostModel& m);

LabelLayout place_labels(const Chart& chart, const LayoutConfig& cfg = {});

struct LayoutResult {
  std::map<StateId, std::vector<Separator>> separators;  // every And state
  std::map<std::string, Polyline> paths;                  // every connection
  LabelLayout labels;
};

LayoutResult layout_chart(const Chart& chart, const LayoutConfig& cfg = {});

// Candidates with costs normalized to [0,1] per connection; darker is worse.
std::string layout_debug_json(const LayoutResult& r);

}  // namespace pchart
