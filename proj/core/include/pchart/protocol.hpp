#pragma once

// Synchronization protocol between editor views and the chart server.
// Message catalogue and examples: docs/protocol.md.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pchart/actions.hpp"
#include "pchart/chart.hpp"

namespace pchart {

struct Envelope {
  std::string type;
  std::string chart_id;
  std::int64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message) : Error("ProtocolError", message) {}
};

// Throws ProtocolError for anything that is not a well-formed envelope.
Envelope parse_envelope(std::string_view text);
std::string to_text(const Envelope& e);
nlohmann::json to_json(const Envelope& e);

struct Session {
  std::string id;
  std::string chart_id;        // empty until hello
  std::int64_t last_seq = 0;   // highest accepted client seq
  std::int64_t out_seq = 0;    // last seq sent to this session
  std::vector<std::string> capabilities;
};

struct ChartSlot {
  Chart initial;
  Chart chart;
  std::int64_t version = 0;                 // accepted actions so far
  std::vector<nlohmann::json> log;          // accepted actions in order
};

struct ServerState {
  std::map<std::string, ChartSlot> charts;
  std::map<std::string, Session> sessions;
  std::optional<std::filesystem::path> dir;  // `<dir>/<chartId>.pchart`, saved on every accepted action
};

struct Outgoing {
  std::string session;
  Envelope message;
};

// Loads `<dir>/<id>.pchart` into the state if not present; false when absent or invalid.
bool ensure_chart(ServerState& state, const std::string& chart_id);

// Processes one client message. The state changes only for accepted hello and
// apply_actions messages; errors are replies.
std::vector<Outgoing> handle_message(ServerState& state, const std::string& session, const Envelope& m);

// Result payload of an analysis request on a chart snapshot.
nlohmann::json run_analysis(const Chart& chart, const nlohmann::json& request);

// chart_state / display_list payloads.
nlohmann::json chart_state_payload(const ChartSlot& slot);
nlohmann::json display_list_payload(const Chart& chart, std::int64_t version);

// Replays an action log from the initial chart.
Chart replay(const Chart& initial, const std::vector<nlohmann::json>& log);

// Thread-safe front end used by the network transport: one writer per chart,
// analysis on immutable snapshots outside the lock.
class Hub {
 public:
  using Sender = std::function<void(const std::string&)>;

  explicit Hub(std::optional<std::filesystem::path> dir = std::nullopt);
  std::string connect(Sender send);
  void disconnect(const std::string& session);
  void receive(const std::string& session, const std::string& text);

  // Snapshot of a chart slot, for tests.
  std::optional<ChartSlot> slot(const std::string& chart_id) const;
  void add_chart(const std::string& chart_id, const Chart& chart);

 private:
  void deliver(const std::vector<Outgoing>& out);

  mutable std::mutex mu_;
  ServerState state_;
  std::map<std::string, Sender> senders_;
  std::int64_t next_session_ = 1;
};

}  // namespace pchart
