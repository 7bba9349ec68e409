#include "pchart/protocol.hpp"

#include <fstream>
#include <sstream>

#include "pchart/analysis.hpp"
#include "pchart/codegen.hpp"
#include "pchart/compiler.hpp"
#include "pchart/layout.hpp"
#include "pchart/render.hpp"

namespace pchart {

using nlohmann::json;

// ---------------------------------------------------------------- envelope

Envelope parse_envelope(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("message is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  Envelope e;
  auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ProtocolError("message needs a string 'type'");
  e.type = type->get<std::string>();
  auto chart = j.find("chartId");
  if (chart == j.end() || !chart->is_string()) throw ProtocolError("message needs a string 'chartId'");
  e.chart_id = chart->get<std::string>();
  auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_integer()) throw ProtocolError("message needs an integer 'seq'");
  e.seq = seq->get<std::int64_t>();
  auto payload = j.find("payload");
  if (payload != j.end()) {
    if (!payload->is_object()) throw ProtocolError("'payload' must be an object");
    e.payload = *payload;
  }
  return e;
}

json to_json(const Envelope& e) {
  return json{{"type", e.type}, {"chartId", e.chart_id}, {"seq", e.seq}, {"payload", e.payload}};
}

std::string to_text(const Envelope& e) { return to_json(e).dump(); }

// ---------------------------------------------------------------- payloads

json chart_state_payload(const ChartSlot& slot) {
  return json{{"version", slot.version}, {"chart", json::parse(serialize_chart(slot.chart))}};
}

json display_list_payload(const Chart& chart, std::int64_t version) {
  LayoutResult layout = layout_chart(chart);
  return json{{"version", version}, {"displayList", to_json(build_display_list(chart, layout))}};
}

namespace {

json diagnostics_json(const std::vector<Diagnostic>& ds) {
  json arr = json::array();
  for (const auto& d : ds)
    arr.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"},
                   {"object", d.object_id},
                   {"message", d.message},
                   {"rule", d.rule}});
  return arr;
}

StateId resolve_state(const Chart& chart, const json& v) {
  if (v.is_number_integer()) {
    StateId id = v.get<StateId>();
    if (!chart.has_state(id)) throw Error("UnknownState", "no state with id " + std::to_string(id));
    return id;
  }
  if (v.is_string()) {
    auto id = chart.find_state(v.get<std::string>());
    if (!id) throw Error("UnknownState", "no state named '" + v.get<std::string>() + "'");
    return *id;
  }
  throw Error("BadRequest", "target must be a state id or name");
}

json trace_json(const GCProgram& p, const std::vector<WitnessStep>& trace) {
  json arr = json::array();
  for (const auto& s : trace) {
    json vals = json::object();
    for (std::size_t i = 0; i < s.post.size(); ++i) vals[p.variables()[i].name] = s.post[i];
    arr.push_back({{"event", s.event}, {"command", s.command}, {"outcome", s.outcome}, {"state", vals}});
  }
  return arr;
}

void persist(const std::filesystem::path& dir, const std::string& id, const Chart& chart) {
  std::filesystem::create_directories(dir);
  auto path = dir / (id + ".pchart");
  auto tmp = dir / (id + ".pchart.tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << serialize_chart(chart);
    if (!out) throw Error("IOError", "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

json run_analysis(const Chart& chart, const json& request) {
  if (!request.is_object() || !request.contains("kind") || !request["kind"].is_string())
    throw Error("BadRequest", "analysis_request needs a string 'kind'");
  std::string kind = request["kind"].get<std::string>();
  json params = request.value("params", json::object());
  if (kind == "compile") {
    GCProgram p = compile(chart);
    return {{"program", pretty_print(p)}, {"commands", p.commands.size()}};
  }
  if (kind == "check") {
    GCProgram p = compile(chart);
    auto vs = check_invariants(chart, p);
    json arr = json::array();
    for (const auto& v : vs) {
      json j{{"state", state_object_id(v.state)}, {"invariant", to_string(v.violated)}, {"event", v.event},
             {"trace", trace_json(p, v.trace)}};
      if (v.command) j["command"] = *v.command;
      if (v.trans) j["transition"] = transition_object_id(*v.trans);
      arr.push_back(std::move(j));
    }
    return {{"violations", arr}, {"count", vs.size()}};
  }
  if (kind == "query") {
    GCProgram p = compile(chart);
    FlatSpace fs = enumerate_states(p);
    std::vector<Query> qs;
    if (params.contains("kind")) {
      auto k = parse_query_kind(params["kind"].is_string() ? params["kind"].get<std::string>() : "");
      if (!k) throw Error("BadRequest", "query kind must be Pmin, Pmax, Emin or Emax");
      qs.push_back({0, *k, resolve_state(chart, params.value("target", json())), chart.root});
    } else {
      qs = chart.queries;
    }
    json arr = json::array();
    for (const auto& q : qs) {
      QueryResult r = run_query(fs, q);
      json j{{"kind", std::string(to_string(q.kind))}, {"target", state_object_id(q.target)}, {"value", r.value},
             {"iterations", r.iterations}, {"states", r.state_count}};
      if (q.id) j["id"] = q.id;
      arr.push_back(std::move(j));
    }
    return {{"results", arr}};
  }
  if (kind == "codegen") {
    std::string target = params.value("target", std::string("prism"));
    GCProgram p = compile(chart);
    json files = json::object();
    if (target == "c") {
      CCodeUnit u = gen_c(p, chart);
      files[u.name + ".h"] = u.header;
      files[u.name + ".c"] = u.source;
      files[u.name + "_harness.c"] = u.harness;
    } else if (target == "prism") {
      PrismUnit u = gen_prism(p, chart);
      files[u.name + ".prism"] = u.model;
      files[u.name + ".props"] = u.properties;
    } else {
      throw Error("BadRequest", "codegen target must be c or prism");
    }
    return {{"files", files}};
  }
  throw Error("BadRequest", "unknown analysis kind '" + kind + "'");
}

Chart replay(const Chart& initial, const std::vector<json>& log) {
  Chart c = initial;
  for (std::size_t i = 0; i < log.size(); ++i) {
    ActionResult r = apply_action(c, action_from_json(log[i]));
    if (!r.applied) throw Error("ReplayDiverged", "logged action " + std::to_string(i) + " was rejected on replay");
    c = std::move(r.chart);
  }
  return c;
}

bool ensure_chart(ServerState& state, const std::string& chart_id) {
  if (state.charts.count(chart_id)) return true;
  if (!state.dir) return false;
  if (chart_id.empty() || chart_id.find_first_of("/\\") != std::string::npos || chart_id.find("..") != std::string::npos)
    return false;
  std::ifstream in(*state.dir / (chart_id + ".pchart"), std::ios::binary);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    Chart c = parse_chart(ss.str());
    state.charts[chart_id] = ChartSlot{c, c, 0, {}};
  } catch (const Error&) {
    return false;
  }
  return true;
}

// ---------------------------------------------------------------- dispatch

std::vector<Outgoing> handle_message(ServerState& state, const std::string& session, const Envelope& m) {
  std::vector<Outgoing> out;
  Session& s = state.sessions[session];
  s.id = session;
  auto send = [&](Session& to, const std::string& type, const std::string& chart, json payload) {
    out.push_back({to.id, Envelope{type, chart, ++to.out_seq, std::move(payload)}});
  };
  auto fail = [&](const std::string& code, const std::string& message, json extra = json::object()) {
    extra["code"] = code;
    extra["message"] = message;
    extra["inReplyTo"] = m.seq;
    send(s, "error", m.chart_id, std::move(extra));
    return out;
  };

  if (m.seq <= s.last_seq)
    return fail("StaleSeq", "seq " + std::to_string(m.seq) + " is not above " + std::to_string(s.last_seq));
  s.last_seq = m.seq;

  if (m.type == "hello") {
    if (!ensure_chart(state, m.chart_id)) return fail("UnknownChart", "no chart '" + m.chart_id + "'");
    s.chart_id = m.chart_id;
    s.capabilities.clear();
    if (m.payload.contains("capabilities") && m.payload["capabilities"].is_array())
      for (const auto& c : m.payload["capabilities"])
        if (c.is_string()) s.capabilities.push_back(c.get<std::string>());
    const ChartSlot& slot = state.charts.at(m.chart_id);
    send(s, "chart_state", m.chart_id, chart_state_payload(slot));
    send(s, "display_list", m.chart_id, display_list_payload(slot.chart, slot.version));
    return out;
  }
  if (m.type != "apply_actions" && m.type != "analysis_request")
    return fail("UnknownType", "clients may send hello, apply_actions or analysis_request, not '" + m.type + "'");
  if (s.chart_id != m.chart_id || !state.charts.count(m.chart_id))
    return fail("NotAttached", "send hello for chart '" + m.chart_id + "' first");
  ChartSlot& slot = state.charts.at(m.chart_id);

  if (m.type == "analysis_request") {
    try {
      json result = run_analysis(slot.chart, m.payload);
      send(s, "analysis_result", m.chart_id,
           {{"kind", m.payload["kind"]}, {"version", slot.version}, {"inReplyTo", m.seq}, {"result", result}});
    } catch (const InvariantViolation& e) {
      return fail(e.code(), e.what(), {{"diagnostics", diagnostics_json(e.diagnostics())}});
    } catch (const Error& e) {
      return fail(e.code(), e.what());
    } catch (const std::exception& e) {
      return fail("InternalError", e.what());
    }
    return out;
  }

  // apply_actions
  if (!m.payload.contains("actions") || !m.payload["actions"].is_array())
    return fail("BadRequest", "apply_actions needs an 'actions' array");
  std::vector<EditorAction> actions;
  std::vector<json> canonical;
  for (std::size_t i = 0; i < m.payload["actions"].size(); ++i) {
    try {
      actions.push_back(action_from_json(m.payload["actions"][i]));
      canonical.push_back(to_json(actions.back()));
    } catch (const SchemaViolation& e) {
      return fail("BadAction", e.what(), {{"failedIndex", i}});
    }
  }
  BatchResult r = apply_actions(slot.chart, actions);
  if (r.failed)
    return fail("Rejected", "action " + std::to_string(*r.failed) + " was rejected",
                {{"failedIndex", *r.failed}, {"diagnostics", diagnostics_json(r.diagnostics)}});
  if (state.dir) {
    try {
      persist(*state.dir, m.chart_id, r.chart);
    } catch (const std::exception& e) {
      return fail("IOError", e.what());
    }
  }
  slot.chart = std::move(r.chart);
  slot.version += static_cast<std::int64_t>(actions.size());
  for (auto& a : canonical) slot.log.push_back(std::move(a));
  send(s, "action_ack", m.chart_id,
       {{"inReplyTo", m.seq}, {"applied", actions.size()}, {"version", slot.version},
        {"warnings", diagnostics_json(r.diagnostics)}});
  json cs = chart_state_payload(slot);
  json dl = display_list_payload(slot.chart, slot.version);
  for (auto& [id, other] : state.sessions) {
    if (other.chart_id != m.chart_id) continue;
    send(other, "chart_state", m.chart_id, cs);
    send(other, "display_list", m.chart_id, dl);
  }
  return out;
}

// ---------------------------------------------------------------- hub

Hub::Hub(std::optional<std::filesystem::path> dir) { state_.dir = std::move(dir); }

std::string Hub::connect(Sender send) {
  std::lock_guard<std::mutex> lock(mu_);
  std::string id = "session-" + std::to_string(next_session_++);
  senders_[id] = std::move(send);
  state_.sessions[id].id = id;
  return id;
}

void Hub::disconnect(const std::string& session) {
  std::lock_guard<std::mutex> lock(mu_);
  senders_.erase(session);
  state_.sessions.erase(session);
}

void Hub::deliver(const std::vector<Outgoing>& out) {
  for (const auto& o : out) {
    auto it = senders_.find(o.session);
    if (it != senders_.end()) it->second(to_text(o.message));
  }
}

void Hub::receive(const std::string& session, const std::string& text) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!senders_.count(session)) return;
  }
  Envelope m;
  try {
    m = parse_envelope(text);
  } catch (const ProtocolError& e) {
    std::lock_guard<std::mutex> lock(mu_);
    Session& s = state_.sessions[session];
    s.id = session;
    deliver({{session, Envelope{"error", "", ++s.out_seq, {{"code", e.code()}, {"message", e.what()}}}}});
    return;
  }
  if (m.type == "analysis_request") {
    Chart snapshot;
    std::int64_t version = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      Session& s = state_.sessions[session];
      s.id = session;
      bool ok = m.seq > s.last_seq && s.chart_id == m.chart_id && state_.charts.count(m.chart_id);
      if (!ok) {
        deliver(handle_message(state_, session, m));
        return;
      }
      s.last_seq = m.seq;
      snapshot = state_.charts.at(m.chart_id).chart;
      version = state_.charts.at(m.chart_id).version;
    }
    json payload;
    std::string type = "analysis_result";
    try {
      payload = {{"kind", m.payload.value("kind", json())}, {"version", version}, {"inReplyTo", m.seq},
                 {"result", run_analysis(snapshot, m.payload)}};
    } catch (const InvariantViolation& e) {
      type = "error";
      payload = {{"code", e.code()}, {"message", e.what()}, {"inReplyTo", m.seq},
                 {"diagnostics", diagnostics_json(e.diagnostics())}};
    } catch (const Error& e) {
      type = "error";
      payload = {{"code", e.code()}, {"message", e.what()}, {"inReplyTo", m.seq}};
    } catch (const std::exception& e) {
      type = "error";
      payload = {{"code", "InternalError"}, {"message", e.what()}, {"inReplyTo", m.seq}};
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto it = state_.sessions.find(session);
    if (it == state_.sessions.end()) return;
    deliver({{session, Envelope{type, m.chart_id, ++it->second.out_seq, payload}}});
    return;
  }
  std::lock_guard<std::mutex> lock(mu_);
  deliver(handle_message(state_, session, m));
}

std::optional<ChartSlot> Hub::slot(const std::string& chart_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = state_.charts.find(chart_id);
  if (it == state_.charts.end()) return std::nullopt;
  return it->second;
}

void Hub::add_chart(const std::string& chart_id, const Chart& chart) {
  std::lock_guard<std::mutex> lock(mu_);
  state_.charts[chart_id] = ChartSlot{chart, chart, 0, {}};
}

}  // namespace pchart
