#include "pchart/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pchart {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string stroke_of(StateKind k) {
  switch (k) {
    case StateKind::And: return "and";
    case StateKind::Xor: return "xor";
    case StateKind::Basic: return "basic";
  }
  return "basic";
}

}  // namespace

std::string object_of(const DisplayItem& item) {
  struct V {
    std::string operator()(const dl::Box& b) const { return state_object_id(b.state); }
    std::string operator()(const dl::DashedLine& d) const { return state_object_id(d.separator.owner); }
    std::string operator()(const dl::Path& p) const { return p.connection; }
    std::string operator()(const dl::Text& t) const { return t.object; }
    std::string operator()(const dl::Marker& m) const { return "p" + std::to_string(m.pseudo); }
    std::string operator()(const dl::Leader& l) const { return l.connection; }
  };
  return std::visit(V{}, item);
}

DisplayList build_display_list(const Chart& chart, const LayoutResult& layout, const RenderStyle& style) {
  DisplayList out;
  out.chart = chart.name;
  LayoutConfig text_cfg;
  for (StateId s : chart.preorder()) {
    const State& st = chart.state(s);
    out.items.push_back(dl::Box{st.box, style.corner_radius, stroke_of(st.kind), s, chart.parent(s)});
    LabelSize ns = label_size(st.name, text_cfg);
    out.items.push_back(
        dl::Text{{st.box.x + style.name_inset, st.box.y + style.name_inset, ns.w, ns.h}, st.name, state_object_id(s),
                 dl::TextRole::StateName});
    if (st.invariant) {
      std::string txt = to_string(*st.invariant);
      LabelSize is = label_size(txt, text_cfg);
      out.items.push_back(dl::Text{{st.box.x + style.name_inset, st.box.bottom() - style.name_inset - is.h, is.w, is.h},
                                   txt, state_object_id(s), dl::TextRole::Invariant});
    }
    if (st.kind == StateKind::And) {
      auto it = layout.separators.find(s);
      if (it == layout.separators.end()) throw MissingLayout(state_object_id(s));
      for (const auto& sp : it->second) out.items.push_back(dl::DashedLine{sp});
    }
  }
  auto conns = connections(chart);
  for (const auto& c : conns) {
    auto it = layout.paths.find(c.id);
    if (it == layout.paths.end()) throw MissingLayout(c.id);
    out.items.push_back(dl::Path{it->second, !c.to_pseudo.has_value(), c.id});
  }
  for (const auto& p : pseudo_nodes(chart)) out.items.push_back(dl::Marker{p.at, p.probabilistic, p.id});
  for (const auto& c : conns) {
    if (c.label.empty()) continue;
    auto it = layout.labels.placements.find(c.id);
    if (it == layout.labels.placements.end()) throw MissingLayout(c.id);
    if (it->second.leader) out.items.push_back(dl::Leader{it->second.leader->a, it->second.leader->b, c.id});
  }
  for (const auto& c : conns) {
    if (c.label.empty()) continue;
    const auto& pl = layout.labels.placements.at(c.id);
    out.items.push_back(dl::Text{pl.rect, c.label, c.id, dl::TextRole::Label});
  }
  return out;
}

std::string render_svg(const DisplayList& list, std::optional<CanvasSize> size, const RenderStyle& style) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  auto grow = [&](Point p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  };
  auto grow_rect = [&](const Rect& r) {
    grow({r.x, r.y});
    grow({r.right(), r.bottom()});
  };
  for (const auto& item : list.items) {
    if (auto* b = std::get_if<dl::Box>(&item)) grow_rect(b->rect);
    else if (auto* t = std::get_if<dl::Text>(&item)) grow_rect(t->rect);
    else if (auto* p = std::get_if<dl::Path>(&item)) for (const auto& q : p->points) grow(q);
    else if (auto* m = std::get_if<dl::Marker>(&item)) grow_rect({m->at.x - style.marker_radius, m->at.y - style.marker_radius, 2 * style.marker_radius, 2 * style.marker_radius});
    else if (auto* l = std::get_if<dl::Leader>(&item)) {
      grow(l->from);
      grow(l->to);
    }
  }
  if (x0 > x1) x0 = y0 = x1 = y1 = 0;
  double vx = x0 - style.margin, vy = y0 - style.margin;
  double vw = x1 - x0 + 2 * style.margin, vh = y1 - y0 + 2 * style.margin;
  double w = size ? size->w : vw, h = size ? size->h : vh;

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" viewBox=\"" << num(vx) << " " << num(vy) << " " << num(vw) << " " << num(vh) << "\">\n";
  o << "<g id=\"chart\" font-family=\"sans-serif\" font-size=\"" << num(style.text_size) << "\">\n";

  std::vector<StateId> open;
  auto indent = [&]() { return std::string(2 * (open.size() + 1), ' '); };
  auto close_to = [&](std::optional<StateId> parent) {
    while (!open.empty() && (!parent || open.back() != *parent)) {
      open.pop_back();
      o << indent() << "</g>\n";
    }
  };
  auto text_el = [&](const dl::Text& t, const std::string& cls) {
    Point c = t.rect.center();
    o << indent() << "<text class=\"" << cls << "\" data-object=\"" << escape(t.object) << "\" x=\"" << num(c.x)
      << "\" y=\"" << num(c.y + style.text_size * 0.35) << "\" text-anchor=\"middle\" fill=\"" << style.label_fill << "\">"
      << escape(t.content) << "</text>\n";
  };

  for (const auto& item : list.items) {
    if (auto* b = std::get_if<dl::Box>(&item)) {
      close_to(b->parent);
      o << indent() << "<g id=\"" << state_object_id(b->state) << "\" class=\"state " << b->stroke << "\">\n";
      open.push_back(b->state);
      o << indent() << "<rect x=\"" << num(b->rect.x) << "\" y=\"" << num(b->rect.y) << "\" width=\"" << num(b->rect.w)
        << "\" height=\"" << num(b->rect.h) << "\" rx=\"" << num(b->corner_radius) << "\" ry=\"" << num(b->corner_radius)
        << "\" fill=\"" << style.state_fill << "\" stroke=\"" << style.state_stroke << "\"/>\n";
      continue;
    }
    if (auto* t = std::get_if<dl::Text>(&item); t && t->role != dl::TextRole::Label) {
      text_el(*t, t->role == dl::TextRole::StateName ? "state-name" : "invariant");
      continue;
    }
    if (auto* d = std::get_if<dl::DashedLine>(&item)) {
      const Separator& s = d->separator;
      bool v = s.axis == Axis::Vertical;
      o << indent() << "<line class=\"separator\" x1=\"" << num(v ? s.position : s.from) << "\" y1=\""
        << num(v ? s.from : s.position) << "\" x2=\"" << num(v ? s.position : s.to) << "\" y2=\""
        << num(v ? s.to : s.position) << "\" stroke=\"" << style.state_stroke << "\" stroke-dasharray=\""
        << style.separator_dash << "\"/>\n";
      continue;
    }
    close_to(std::nullopt);
    if (auto* p = std::get_if<dl::Path>(&item)) {
      o << indent() << "<g id=\"" << escape(p->connection) << "\" class=\"connection\">\n";
      std::string d;
      for (std::size_t i = 0; i < p->points.size(); ++i)
        d += (i ? " L " : "M ") + num(p->points[i].x) + " " + num(p->points[i].y);
      o << indent() << "  <path d=\"" << d << "\" fill=\"none\" stroke=\"" << style.path_stroke << "\"/>\n";
      if (p->arrowhead && p->points.size() >= 2) {
        Point tip = p->points.back(), prev = p->points[p->points.size() - 2];
        double dx = tip.x - prev.x, dy = tip.y - prev.y, l = std::hypot(dx, dy);
        if (l > 1e-9) {
          dx /= l;
          dy /= l;
          Point base{tip.x - dx * style.arrow_length, tip.y - dy * style.arrow_length};
          double hw = style.arrow_width / 2;
          o << indent() << "  <path class=\"arrowhead\" d=\"M " << num(tip.x) << " " << num(tip.y) << " L "
            << num(base.x - dy * hw) << " " << num(base.y + dx * hw) << " L " << num(base.x + dy * hw) << " "
            << num(base.y - dx * hw) << " Z\" fill=\"" << style.path_stroke << "\"/>\n";
        }
      }
      o << indent() << "</g>\n";
    } else if (auto* m = std::get_if<dl::Marker>(&item)) {
      double r = style.marker_radius;
      std::string d;
      if (m->probabilistic)
        d = "M " + num(m->at.x - r) + " " + num(m->at.y) + " a " + num(r) + " " + num(r) + " 0 1 0 " + num(2 * r) +
            " 0 a " + num(r) + " " + num(r) + " 0 1 0 " + num(-2 * r) + " 0 Z";
      else
        d = "M " + num(m->at.x) + " " + num(m->at.y - r) + " L " + num(m->at.x + r) + " " + num(m->at.y) + " L " +
            num(m->at.x) + " " + num(m->at.y + r) + " L " + num(m->at.x - r) + " " + num(m->at.y) + " Z";
      o << indent() << "<path id=\"p" << m->pseudo << "\" class=\"marker " << (m->probabilistic ? "prob" : "cond")
        << "\" d=\"" << d << "\" fill=\"" << (m->probabilistic ? style.path_stroke : style.state_fill) << "\" stroke=\""
        << style.path_stroke << "\"/>\n";
    } else if (auto* l = std::get_if<dl::Leader>(&item)) {
      o << indent() << "<line class=\"leader\" data-object=\"" << escape(l->connection) << "\" x1=\"" << num(l->from.x)
        << "\" y1=\"" << num(l->from.y) << "\" x2=\"" << num(l->to.x) << "\" y2=\"" << num(l->to.y) << "\" stroke=\""
        << style.path_stroke << "\" stroke-dasharray=\"" << style.leader_dash << "\"/>\n";
    } else if (auto* t = std::get_if<dl::Text>(&item)) {
      text_el(*t, "label");
    }
  }
  close_to(std::nullopt);
  o << "</g>\n</svg>\n";
  return o.str();
}

nlohmann::json to_json(const DisplayList& list) {
  using nlohmann::json;
  auto rect = [](const Rect& r) { return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; };
  auto pt = [](Point p) { return json{{"x", p.x}, {"y", p.y}}; };
  json items = json::array();
  for (const auto& item : list.items) {
    json j;
    if (auto* b = std::get_if<dl::Box>(&item)) {
      j = {{"type", "box"}, {"rect", rect(b->rect)}, {"cornerRadius", b->corner_radius}, {"stroke", b->stroke}};
      if (b->parent) j["parent"] = state_object_id(*b->parent);
    } else if (auto* d = std::get_if<dl::DashedLine>(&item)) {
      const auto& s = d->separator;
      j = {{"type", "dashedLine"},
           {"axis", s.axis == Axis::Vertical ? "vertical" : "horizontal"},
           {"position", s.position},
           {"from", s.from},
           {"to", s.to}};
    } else if (auto* p = std::get_if<dl::Path>(&item)) {
      json pts = json::array();
      for (const auto& q : p->points) pts.push_back(pt(q));
      j = {{"type", "path"}, {"points", pts}, {"arrowhead", p->arrowhead}};
    } else if (auto* t = std::get_if<dl::Text>(&item)) {
      static const char* roles[] = {"stateName", "invariant", "label"};
      j = {{"type", "text"}, {"rect", rect(t->rect)}, {"content", t->content}, {"role", roles[static_cast<int>(t->role)]}};
    } else if (auto* m = std::get_if<dl::Marker>(&item)) {
      j = {{"type", "marker"}, {"at", pt(m->at)}, {"kind", m->probabilistic ? "prob" : "cond"}};
    } else if (auto* l = std::get_if<dl::Leader>(&item)) {
      j = {{"type", "leader"}, {"from", pt(l->from)}, {"to", pt(l->to)}};
    }
    j["object"] = object_of(item);
    items.push_back(std::move(j));
  }
  return json{{"chart", list.chart}, {"items", items}};
}

}  // namespace pchart
