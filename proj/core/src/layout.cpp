#include "pchart/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace pchart {

namespace {

constexpr double kEps = 1e-9;

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Rect bbox(const std::vector<Rect>& rs) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& r : rs) {
    x0 = std::min(x0, r.x);
    y0 = std::min(y0, r.y);
    x1 = std::max(x1, r.right());
    y1 = std::max(y1, r.bottom());
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

// Region: current group's extent, in which separators span.
void split(const std::vector<Rect>& boxes, const std::vector<std::size_t>& group, const Rect& region, Axis axis,
           std::vector<Separator>& out, StateId owner) {
  if (group.size() < 2) return;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Axis a = attempt == 0 ? axis : (axis == Axis::Vertical ? Axis::Horizontal : Axis::Vertical);
    bool vertical = a == Axis::Vertical;
    std::vector<std::size_t> sorted = group;
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t i, std::size_t j) {
      double pi = vertical ? boxes[i].x : boxes[i].y, pj = vertical ? boxes[j].x : boxes[j].y;
      return pi < pj || (pi == pj && i < j);
    });
    // cuts between maximal covered intervals
    std::vector<std::vector<std::size_t>> parts{{}};
    std::vector<double> cuts;
    double reach = -std::numeric_limits<double>::infinity();
    for (std::size_t i : sorted) {
      double lo = vertical ? boxes[i].x : boxes[i].y;
      double hi = vertical ? boxes[i].right() : boxes[i].bottom();
      if (!parts.back().empty() && lo > reach + kEps) {
        cuts.push_back((reach + lo) / 2);
        parts.emplace_back();
      }
      parts.back().push_back(i);
      reach = std::max(reach, hi);
    }
    if (cuts.empty()) continue;
    double from = vertical ? region.y : region.x;
    double to = vertical ? region.bottom() : region.right();
    for (double c : cuts) out.push_back({a, c, from, to, owner});
    Axis next = vertical ? Axis::Horizontal : Axis::Vertical;
    double lo = vertical ? region.x : region.y;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      double hi = k < cuts.size() ? cuts[k] : (vertical ? region.right() : region.bottom());
      Rect sub = vertical ? Rect{lo, region.y, hi - lo, region.h} : Rect{region.x, lo, region.w, hi - lo};
      split(boxes, parts[k], sub, next, out, owner);
      lo = hi;
    }
    return;
  }
}

Point exit_point(const Rect& box, Point toward) {
  Point c = box.center();
  Point d = toward - c;
  if (std::abs(d.x) < kEps && std::abs(d.y) < kEps) return {c.x, box.y};
  double tx = std::abs(d.x) < kEps ? std::numeric_limits<double>::infinity() : (box.w / 2) / std::abs(d.x);
  double ty = std::abs(d.y) < kEps ? std::numeric_limits<double>::infinity() : (box.h / 2) / std::abs(d.y);
  return c + d * std::min(tx, ty);
}

Point nearest_border(const Rect& box, Point q) {
  double dl = q.x - box.x, dr = box.right() - q.x, dt = q.y - box.y, db = box.bottom() - q.y;
  double m = std::min({dl, dr, dt, db});
  if (m == dt) return {q.x, box.y};
  if (m == db) return {q.x, box.bottom()};
  if (m == dl) return {box.x, q.y};
  return {box.right(), q.y};
}

Point nearest_on_segment(Point a, Point b, Point q) {
  Point d = b - a;
  double l2 = d.x * d.x + d.y * d.y;
  if (l2 < kEps * kEps) return a;
  double t = std::clamp(((q.x - a.x) * d.x + (q.y - a.y) * d.y) / l2, 0.0, 1.0);
  return a + d * t;
}

Point nearest_on_rect(const Rect& r, Point q) {
  Point p{std::clamp(q.x, r.x, r.right()), std::clamp(q.y, r.y, r.bottom())};
  if (!contains(r, q)) return p;
  return nearest_border(r, q);
}

bool better(const LabelCandidate& a, const LabelCandidate& b) {
  if (a.cost < b.cost - kEps) return true;
  if (a.cost > b.cost + kEps) return false;
  if (a.side != b.side) return a.side == Side::Left;
  return a.anchor < b.anchor - kEps;
}

}  // namespace

// ---------------------------------------------------------------- separators

std::vector<Separator> split_and_children(const std::vector<Rect>& boxes, const Rect& outer) {
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if (overlaps(boxes[i], boxes[j]))
        throw InvalidGeometry("child boxes " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
  std::vector<Separator> out;
  if (boxes.size() < 2) return out;
  std::vector<std::size_t> all(boxes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Rect bb = bbox(boxes);
  split(boxes, all, outer, bb.w > bb.h ? Axis::Vertical : Axis::Horizontal, out, 0);
  return out;
}

// ---------------------------------------------------------------- paths

double path_length(const Polyline& path) {
  double l = 0;
  for (std::size_t i = 1; i < path.size(); ++i) l += dist(path[i - 1], path[i]);
  return l;
}

Point path_point(const Polyline& path, double t) {
  double target = std::clamp(t, 0.0, 1.0) * path_length(path);
  for (std::size_t i = 1; i < path.size(); ++i) {
    double l = dist(path[i - 1], path[i]);
    if (target <= l || i + 1 == path.size()) {
      double f = l < kEps ? 0 : std::min(1.0, target / l);
      return path[i - 1] + (path[i] - path[i - 1]) * f;
    }
    target -= l;
  }
  return path.empty() ? Point{} : path.front();
}

Point path_centroid(const Polyline& path) {
  double total = 0;
  Point acc{};
  for (std::size_t i = 1; i < path.size(); ++i) {
    double l = dist(path[i - 1], path[i]);
    acc = acc + (path[i - 1] + path[i]) * (l / 2);
    total += l;
  }
  if (total < kEps) return path.empty() ? Point{} : path.front();
  return acc * (1 / total);
}

Point nearest_on_path(const Polyline& path, Point q) {
  if (path.size() == 1) return path.front();
  Point best = path.front();
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < path.size(); ++i) {
    Point p = nearest_on_segment(path[i - 1], path[i], q);
    double d = dist(p, q);
    if (d < bd - kEps) {
      bd = d;
      best = p;
    }
  }
  return best;
}

std::vector<LabelCandidate> label_candidates(const Polyline& path, double w, double h, int k, const LayoutConfig& cfg) {
  double L = path_length(path);
  if (path.size() < 2 || L < kEps) throw DegeneratePath();
  k = std::max(k, 3);
  std::vector<LabelCandidate> out;
  for (int i = 0; i < k; ++i) {
    double t = static_cast<double>(i) / (k - 1);
    double s = t * L;
    // segment holding arclength s; a vertex belongs to the segment that starts there
    Point dir{1, 0};
    double acc = 0;
    for (std::size_t j = 1; j < path.size(); ++j) {
      double l = dist(path[j - 1], path[j]);
      if (l < kEps) continue;
      dir = (path[j] - path[j - 1]) * (1 / l);
      if (s < acc + l - kEps) break;
      acc += l;
    }
    Point p = path_point(path, t);
    Point left{dir.y, -dir.x};
    for (Side side : {Side::Left, Side::Right}) {
      Point n = side == Side::Left ? left : left * -1;
      double extent = (std::abs(n.x) * w + std::abs(n.y) * h) / 2;
      Point c = p + n * (cfg.gap + extent);
      out.push_back({{}, {c.x - w / 2, c.y - h / 2, w, h}, t, side, 0, true});
    }
  }
  return out;
}

bool segment_hits_rect(Point a, Point b, const Rect& r) {
  // Liang-Barsky against the open interior
  double x0 = r.x + kEps, x1 = r.right() - kEps, y0 = r.y + kEps, y1 = r.bottom() - kEps;
  if (x0 >= x1 || y0 >= y1) return false;
  double t0 = 0, t1 = 1;
  double dx = b.x - a.x, dy = b.y - a.y;
  auto clip = [&](double p, double q) {
    if (std::abs(p) < 1e-15) return q > 0;
    double t = q / p;
    if (p < 0) {
      if (t > t1) return false;
      t0 = std::max(t0, t);
    } else {
      if (t < t0) return false;
      t1 = std::min(t1, t);
    }
    return true;
  };
  return clip(-dx, a.x - x0) && clip(dx, x1 - a.x) && clip(-dy, a.y - y0) && clip(dy, y1 - a.y) && t0 <= t1;
}

bool polyline_hits_rect(const Polyline& path, const Rect& r) {
  if (path.size() == 1) return segment_hits_rect(path.front(), path.front(), r);
  for (std::size_t i = 1; i < path.size(); ++i)
    if (segment_hits_rect(path[i - 1], path[i], r)) return true;
  return false;
}

LabelSize label_size(const std::string& text, const LayoutConfig& cfg) {
  std::size_t chars = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++chars;  // count UTF-8 code points
  return {static_cast<double>(chars) * cfg.char_width + 2 * cfg.label_padding, cfg.line_height};
}

Polyline connection_path(const Chart& chart, const Connection& c, const LayoutConfig& cfg) {
  std::optional<Point> from_pt, to_pt;
  const Rect* from_box = nullptr;
  const Rect* to_box = nullptr;
  auto pseudo_at = [&](PseudoId id) {
    for (const auto& p : pseudo_nodes(chart))
      if (p.id == id) return p.at;
    throw Error("UnknownPseudo", "pseudo-state p" + std::to_string(id) + " not found");
  };
  if (c.from_pseudo) from_pt = pseudo_at(*c.from_pseudo);
  else from_box = &chart.state(c.from_state).box;
  if (c.to_pseudo) to_pt = pseudo_at(*c.to_pseudo);
  else to_box = &chart.state(c.to_state).box;

  if (from_box && to_box && c.from_state == c.to_state && c.waypoints.empty()) {
    const Rect& b = *from_box;
    double x0 = b.x + b.w * 0.6, x1 = b.x + b.w * 0.85;
    return {{x0, b.y}, {x0, b.y - cfg.self_loop}, {x1, b.y - cfg.self_loop}, {x1, b.y}};
  }
  Polyline pts;
  pts.push_back(from_pt ? *from_pt : from_box->center());
  for (const auto& w : c.waypoints) pts.push_back(w);
  pts.push_back(to_pt ? *to_pt : to_box->center());
  if (from_box) {
    Point next = pts[1];
    pts.front() = contains(*from_box, next) ? nearest_border(*from_box, next) : exit_point(*from_box, next);
  }
  if (to_box) {
    Point prev = pts[pts.size() - 2];
    pts.back() = contains(*to_box, prev) ? nearest_border(*to_box, prev) : exit_point(*to_box, prev);
  }
  return pts;
}

Geometry chart_geometry(const Chart& chart, const LayoutConfig& cfg) {
  Geometry g;
  for (StateId s : chart.preorder()) g.boxes.push_back({s, chart.state(s).box});
  for (const auto& c : connections(chart)) g.paths.emplace_back(c.id, connection_path(chart, c, cfg));
  for (const auto& p : pseudo_nodes(chart))
    g.markers.push_back({p.at.x - cfg.marker_radius, p.at.y - cfg.marker_radius, 2 * cfg.marker_radius, 2 * cfg.marker_radius});
  return g;
}

std::vector<LabelCandidate> filter_collisions(std::vector<LabelCandidate> cands, const Geometry& g, const Chart& chart,
                                              StateId source, const std::string& ignore_label) {
  std::vector<LabelCandidate> kept;
  for (const auto& c : cands) {
    bool hit = false;
    for (const auto& b : g.boxes) {
      if (chart.is_ancestor(b.state, source)) continue;
      if (overlaps(c.rect, b.rect)) {
        hit = true;
        break;
      }
    }
    for (std::size_t i = 0; !hit && i < g.paths.size(); ++i) hit = polyline_hits_rect(g.paths[i].second, c.rect);
    for (std::size_t i = 0; !hit && i < g.markers.size(); ++i) hit = overlaps(c.rect, g.markers[i]);
    for (std::size_t i = 0; !hit && i < g.labels.size(); ++i)
      hit = g.labels[i].first != ignore_label && overlaps(c.rect, g.labels[i].second);
    if (!hit) kept.push_back(c);
  }
  if (!kept.empty()) return kept;
  for (auto& c : cands) c.viable = false;
  return cands;
}

// ---------------------------------------------------------------- label placement

double LabelCostModel::centroid_cost(const std::string& conn, const Rect& r) const {
  double d = dist(r.center(), centroid.at(conn));
  return cfg.w_centroid * d * d;
}

double LabelCostModel::repulsion(const Rect& a, const Rect& b) const {
  double R = cfg.repulsion_factor * std::max({a.w, a.h, b.w, b.h});
  double d = dist(a.center(), b.center());
  double e = std::max(0.0, R - d);
  return cfg.w_repulsion * e * e;
}

double total_cost(const std::map<std::string, LabelPlacement>& placements, const LabelCostModel& m) {
  double t = 0;
  for (auto it = placements.begin(); it != placements.end(); ++it) {
    if (!it->second.manual) t += m.centroid_cost(it->first, it->second.rect);
    for (auto jt = std::next(it); jt != placements.end(); ++jt) {
      if (it->second.manual && jt->second.manual) continue;
      t += m.repulsion(it->second.rect, jt->second.rect);
    }
  }
  return t;
}

LabelLayout place_labels(const Chart& chart, const LayoutConfig& cfg) {
  LabelLayout out;
  Geometry geo = chart_geometry(chart, cfg);
  auto conns = connections(chart);
  std::map<std::string, Polyline> paths(geo.paths.begin(), geo.paths.end());
  std::map<std::string, const Connection*> by_id;
  LabelCostModel model{{}, cfg};
  for (const auto& c : conns) {
    by_id[c.id] = &c;
    model.centroid[c.id] = path_centroid(paths[c.id]);
  }
  for (const auto& [id, r] : chart.manual_labels)
    if (by_id.count(id)) out.placements[id] = {id, r, std::nullopt, true, true, 0};

  std::vector<std::pair<double, std::string>> order;
  for (const auto& c : conns)
    if (!c.label.empty() && !chart.manual_labels.count(c.id)) order.emplace_back(path_length(paths[c.id]), c.id);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first + kEps; });
  for (const auto& o : order) out.order.push_back(o.second);

  auto source_of = [&](const Connection& c) { return chart.transitions.at(c.transition).source; };

  // Candidates evaluated against every placed label except `self`.
  auto evaluate = [&](const std::string& self) {
    const Connection& c = *by_id.at(self);
    LabelSize sz = label_size(c.label, cfg);
    std::vector<LabelCandidate> cands;
    try {
      cands = label_candidates(paths[self], sz.w, sz.h, cfg.samples, cfg);
    } catch (const DegeneratePath&) {
      Point p = paths[self].front();
      cands.push_back({{}, {p.x + cfg.gap, p.y - cfg.gap - sz.h, sz.w, sz.h}, 0, Side::Left, 0, false});
    }
    for (auto& k : cands) k.connection = self;
    Geometry g = geo;
    for (const auto& [id, pl] : out.placements)
      if (id != self) g.labels.emplace_back(id, pl.rect);
    auto f = filter_collisions(std::move(cands), g, chart, source_of(c));
    for (auto& k : f) {
      k.cost = model.centroid_cost(self, k.rect);
      for (const auto& [id, pl] : out.placements)
        if (id != self) k.cost += model.repulsion(k.rect, pl.rect);
    }
    return f;
  };
  auto overlaps_label = [&](const std::string& self, const Rect& r) {
    for (const auto& [id, pl] : out.placements)
      if (id != self && overlaps(r, pl.rect)) return true;
    return false;
  };
  // Best option; nonviable fallbacks avoid other labels when they can.
  auto choose = [&](const std::string& self, const std::vector<LabelCandidate>& f) {
    std::vector<const LabelCandidate*> opts;
    bool viable = !f.empty() && f.front().viable;
    for (const auto& k : f)
      if (viable || !overlaps_label(self, k.rect)) opts.push_back(&k);
    if (opts.empty())
      for (const auto& k : f) opts.push_back(&k);
    const LabelCandidate* best = opts.front();
    for (const auto* k : opts)
      if (better(*k, *best)) best = k;
    return *best;
  };

  for (const auto& id : out.order) {
    auto f = evaluate(id);
    LabelCandidate best = choose(id, f);
    out.placements[id] = {id, best.rect, std::nullopt, false, best.viable, best.cost};
  }
  out.total_cost_greedy = total_cost(out.placements, model);

  // one improvement sweep
  for (const auto& id : out.order) {
    auto f = evaluate(id);
    LabelPlacement& cur = out.placements[id];
    double cur_cost = model.centroid_cost(id, cur.rect);
    for (const auto& [oid, pl] : out.placements)
      if (oid != id) cur_cost += model.repulsion(cur.rect, pl.rect);
    std::vector<LabelCandidate> allowed;
    for (const auto& k : f)
      if (k.viable || !overlaps_label(id, k.rect) || overlaps_label(id, cur.rect)) allowed.push_back(k);
    cur.cost = cur_cost;
    if (!allowed.empty()) {
      LabelCandidate best = choose(id, allowed);
      if (best.cost < cur_cost - kEps) {
        cur.rect = best.rect;
        cur.viable = best.viable;
        cur.cost = best.cost;
      }
    }
    out.candidates[id] = std::move(f);
  }
  out.total_cost = total_cost(out.placements, model);

  for (const auto& id : out.order) {
    LabelPlacement& pl = out.placements[id];
    double threshold = cfg.w_centroid * std::pow(cfg.leader_displacement * pl.rect.h, 2);
    if (!pl.viable || pl.cost > threshold) {
      Point on = nearest_on_path(paths[id], pl.rect.center());
      pl.leader = Segment{on, nearest_on_rect(pl.rect, on)};
    }
  }
  return out;
}

LayoutResult layout_chart(const Chart& chart, const LayoutConfig& cfg) {
  LayoutResult r;
  for (StateId s : chart.preorder()) {
    const State& st = chart.state(s);
    if (st.kind != StateKind::And) continue;
    std::vector<Rect> boxes;
    for (StateId c : st.children) boxes.push_back(chart.state(c).box);
    auto seps = split_and_children(boxes, st.box);
    for (auto& sp : seps) sp.owner = s;
    r.separators[s] = std::move(seps);
  }
  for (const auto& c : connections(chart)) r.paths[c.id] = connection_path(chart, c, cfg);
  r.labels = place_labels(chart, cfg);
  return r;
}

std::string layout_debug_json(const LayoutResult& r) {
  using nlohmann::json;
  json conns = json::object();
  for (const auto& [id, cands] : r.labels.candidates) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : cands) {
      lo = std::min(lo, c.cost);
      hi = std::max(hi, c.cost);
    }
    json arr = json::array();
    for (const auto& c : cands) {
      double norm = hi - lo > kEps ? (c.cost - lo) / (hi - lo) : 0.0;
      arr.push_back({{"rect", {c.rect.x, c.rect.y, c.rect.w, c.rect.h}},
                     {"anchor", c.anchor},
                     {"side", c.side == Side::Left ? "left" : "right"},
                     {"cost", norm},
                     {"viable", c.viable}});
    }
    conns[id] = arr;
  }
  json seps = json::object();
  for (const auto& [s, list] : r.separators) {
    json arr = json::array();
    for (const auto& sp : list)
      arr.push_back({{"axis", sp.axis == Axis::Vertical ? "vertical" : "horizontal"},
                     {"position", sp.position},
                     {"from", sp.from},
                     {"to", sp.to}});
    seps[state_object_id(s)] = arr;
  }
  return json{{"candidates", conns}, {"separators", seps}}.dump(2) + "\n";
}

}  // namespace pchart
