#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "pchart/analysis.hpp"
#include "pchart/codegen.hpp"
#include "pchart/compiler.hpp"
#include "pchart/layout.hpp"
#include "pchart/render.hpp"
#include "server.hpp"

namespace pchart {

namespace {

struct UsageError {
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError{"cannot read " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw UsageError{"cannot write " + path};
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

StateId resolve_target(const Chart& chart, const std::string& name) {
  auto id = chart.find_state(name);
  if (!id) throw Error("UnknownState", "no state named '" + name + "'");
  return *id;
}

void print_violation(std::ostream& out, const Chart& chart, const GCProgram& p, const Violation& v) {
  out << "violation: invariant of " << chart.qualified_name(v.state) << " (" << to_string(v.violated) << ")";
  if (v.command) {
    out << " broken by command " << *v.command;
    if (v.trans) out << " (transition t" << *v.trans << ")";
    out << " on event " << v.event;
  } else {
    out << " fails initially";
  }
  out << "\n";
  out << "witness:\n";
  for (std::size_t i = 0; i < v.trace.size(); ++i) {
    const auto& s = v.trace[i];
    out << "  " << (i + 1) << ". " << s.event << " [command " << s.command << ", outcome " << s.outcome << "]:";
    std::istringstream lines(dump_state(p, s.post));
    for (std::string line; std::getline(lines, line);) out << " " << line;
    out << "\n";
  }
  if (v.trace.empty()) {
    out << "  initial:";
    std::istringstream lines(dump_state(p, v.post));
    for (std::string line; std::getline(lines, line);) out << " " << line;
    out << "\n";
  }
}

int cmd_validate(const std::string& file, std::ostream& out, std::ostream& err) {
  Chart c = parse_chart_unchecked(read_file(file));
  auto ds = validate(c);
  for (const auto& d : ds) err << file << ": " << to_string(d) << "\n";
  if (has_errors(ds)) return kExitDiagnostics;
  out << "ok: " << c.states.size() << " states, " << c.transitions.size() << " transitions\n";
  return kExitOk;
}

int cmd_compile(const std::string& file, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  out << pretty_print(compile(c));
  return kExitOk;
}

int cmd_check(const std::string& file, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  GCProgram p = compile(c);
  auto vs = check_invariants(c, p);
  for (const auto& v : vs) print_violation(out, c, p, v);
  try {
    FlatSpace fs = enumerate_states(p);
    for (const auto& k : check_conflicts(p, fs)) {
      out << "warning: commands";
      for (int id : k.commands) out << " " << id;
      out << " conflict on event " << k.event << " in flat state " << k.flat_state << "\n";
    }
  } catch (const RangeViolation&) {
  }
  out << vs.size() << (vs.size() == 1 ? " violation\n" : " violations\n");
  return vs.empty() ? kExitOk : kExitDiagnostics;
}

int cmd_query(const std::string& file, const std::string& kind, const std::string& target, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  FlatSpace fs = enumerate_states(compile(c));
  if (!kind.empty() || !target.empty()) {
    if (kind.empty() || target.empty()) throw UsageError{"--kind and --target go together"};
    auto k = parse_query_kind(kind);
    if (!k) throw UsageError{"--kind must be Pmin, Pmax, Emin or Emax"};
    Query q{0, *k, resolve_target(c, target), c.root};
    out << format_value(run_query(fs, q).value) << "\n";
    return kExitOk;
  }
  for (const auto& q : c.queries) {
    out << "q" << q.id << " " << to_string(q.kind) << " " << c.qualified_name(q.target) << " = "
        << format_value(run_query(fs, q).value) << "\n";
  }
  return kExitOk;
}

int cmd_codegen(const std::string& file, const std::string& target, const std::string& dir, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  GCProgram p = compile(c);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  if (target == "c") written = write_unit(gen_c(p, c), dir);
  else written = write_unit(gen_prism(p, c), dir);
  for (const auto& f : written) out << f.string() << "\n";
  return kExitOk;
}

int cmd_render(const std::string& file, const std::string& svg, const std::string& debug, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  LayoutResult layout = layout_chart(c);
  write_file(svg, render_svg(build_display_list(c, layout)));
  out << svg << "\n";
  if (!debug.empty()) {
    write_file(debug, layout_debug_json(layout));
    out << debug << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& file, const std::vector<std::string>& events, std::uint64_t seed,
                 bool deterministic, std::ostream& out) {
  Chart c = parse_chart(read_file(file));
  GCProgram p = compile(c);
  Trace t = simulate(p, events, seed, deterministic ? SimResolution::Deterministic : SimResolution::Random);
  out << dump_state(p, t.initial) << "--\n";
  for (const auto& s : t.steps) {
    out << "event=" << s.event << " fired=" << (s.fired ? std::to_string(*s.fired) : "none") << " cost=" << s.cost.to_string()
        << "\n"
        << dump_state(p, s.post) << "--\n";
  }
  return kExitOk;
}

int cmd_serve(const std::string& dir, unsigned short port, const std::string& address, std::ostream& out) {
  if (!std::filesystem::is_directory(dir)) throw UsageError{dir + " is not a directory"};
  Hub hub{std::filesystem::path(dir)};
  SyncServer server(hub, address, port);
  out << "serving " << dir << " on ws://" << address << ":" << server.port() << "\n" << std::flush;
  server.stop_on_signals();
  server.run();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pchart: probabilistic statechart workbench"};
  app.require_subcommand(1);

  std::string file, kind, target, dir, svg, debug, events, address = "127.0.0.1";
  std::uint64_t seed = 1;
  bool deterministic = false;
  unsigned short port = default_port();

  auto* validate_cmd = app.add_subcommand("validate", "check a chart document");
  validate_cmd->add_option("file", file, "chart file")->required();
  auto* compile_cmd = app.add_subcommand("compile", "print the guarded-command program");
  compile_cmd->add_option("file", file, "chart file")->required();
  auto* check_cmd = app.add_subcommand("check", "verify state invariants");
  check_cmd->add_option("file", file, "chart file")->required();
  auto* query_cmd = app.add_subcommand("query", "reachability probability or expected cost");
  query_cmd->add_option("file", file, "chart file")->required();
  query_cmd->add_option("--kind", kind, "Pmin, Pmax, Emin or Emax");
  query_cmd->add_option("--target", target, "target state name or path");
  auto* codegen_cmd = app.add_subcommand("codegen", "generate C or PRISM sources");
  codegen_cmd->add_option("file", file, "chart file")->required();
  codegen_cmd->add_option("--target", target, "c or prism")->required()->check(CLI::IsMember({"c", "prism"}));
  codegen_cmd->add_option("--out", dir, "output directory")->required();
  auto* render_cmd = app.add_subcommand("render", "lay out and render SVG");
  render_cmd->add_option("file", file, "chart file")->required();
  render_cmd->add_option("--out", svg, "SVG output file")->required();
  render_cmd->add_option("--debug", debug, "layout debug JSON output file");
  auto* simulate_cmd = app.add_subcommand("simulate", "run an event script");
  simulate_cmd->add_option("file", file, "chart file")->required();
  simulate_cmd->add_option("--events", events, "comma-separated events")->required();
  simulate_cmd->add_option("--seed", seed, "random seed");
  simulate_cmd->add_flag("--deterministic", deterministic, "resolve choices deterministically");
  auto* serve_cmd = app.add_subcommand("serve", "run the chart synchronization server");
  serve_cmd->add_option("dir", dir, "directory of .pchart files")->required();
  serve_cmd->add_option("--port", port, "TCP port (default PCHART_PORT or 8765)");
  serve_cmd->add_option("--address", address, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(file, out, err);
    if (*compile_cmd) return cmd_compile(file, out);
    if (*check_cmd) return cmd_check(file, out);
    if (*query_cmd) return cmd_query(file, kind, target, out);
    if (*codegen_cmd) return cmd_codegen(file, target, dir, out);
    if (*render_cmd) return cmd_render(file, svg, debug, out);
    if (*simulate_cmd) {
      std::vector<std::string> script;
      std::stringstream ss(events);
      for (std::string e; std::getline(ss, e, ',');)
        if (!e.empty()) script.push_back(e);
      return cmd_simulate(file, script, seed, deterministic, out);
    }
    if (*serve_cmd) return cmd_serve(dir, port, address, out);
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n";
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    for (const auto& d : e.diagnostics()) err << file << ": " << to_string(d) << "\n";
    return kExitDiagnostics;
  } catch (const Error& e) {
    err << file << ": " << e.code() << ": " << e.what() << "\n";
    return kExitDiagnostics;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pchart
