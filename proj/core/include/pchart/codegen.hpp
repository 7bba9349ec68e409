#pragma once

// C sources for deterministic programs and PRISM model/property files.

#include <filesystem>
#include <string>
#include <vector>

#include "pchart/chart.hpp"
#include "pchart/compiler.hpp"

namespace pchart {

struct CCodeUnit {
  std::string name;  // file stem
  std::string header;
  std::string source;
  std::string harness;
  std::vector<std::string> event_functions;
};

struct PrismUnit {
  std::string name;
  std::string model;
  std::string properties;
};

class ProbabilisticChart : public Error {
 public:
  explicit ProbabilisticChart(int command)
      : Error("ProbabilisticChart", "command " + std::to_string(command) + " has probabilistic outcomes; C code needs a deterministic chart"),
        command_(command) {}
  int command() const noexcept { return command_; }

 private:
  int command_;
};

CCodeUnit gen_c(const GCProgram& p, const Chart& chart);
PrismUnit gen_prism(const GCProgram& p, const Chart& chart);

// Guard of each command (by id - 1) conjoined with the negation of every
// strictly higher-priority guard for the same event; time-advance commands keep their guard.
std::vector<Expr> strengthened_guards(const GCProgram& p);

// Action label of a command in the PRISM model.
std::string prism_action(const GuardedCommand& c);

// Writes `<name>.h`, `<name>.c`, `<name>_harness.c` or `<name>.prism`, `<name>.props`; returns the paths.
std::vector<std::filesystem::path> write_unit(const CCodeUnit& u, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_unit(const PrismUnit& u, const std::filesystem::path& dir);

}  // namespace pchart
