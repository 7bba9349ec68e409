#pragma once

// WebSocket transport for the chart synchronization protocol.
// One JSON envelope per text frame.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "pchart/protocol.hpp"

namespace pchart {

class SyncServer {
 public:
  // Port 0 binds an ephemeral port; see port().
  SyncServer(Hub& hub, const std::string& address, unsigned short port, unsigned threads = 2);
  ~SyncServer();
  SyncServer(const SyncServer&) = delete;
  SyncServer& operator=(const SyncServer&) = delete;

  unsigned short port() const;
  // Blocks until stop().
  void run();
  void stop();
  // SIGINT and SIGTERM call stop().
  void stop_on_signals();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Port from PCHART_PORT when set and valid, else `fallback`.
unsigned short default_port(unsigned short fallback = 8765);

}  // namespace pchart
