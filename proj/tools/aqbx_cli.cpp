// Command-line front end for the experiment drivers.

#include <aqbx/experiments.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

// One line on stderr that scripts can parse: error kind=<kind> message="<text>".
int report(std::string_view kind, const std::string& message, int code) {
  std::string quoted;
  for (char ch : message) {
    if (ch == '"' || ch == '\\') quoted += '\\';
    quoted += ch == '\n' ? ' ' : ch;
  }
  std::cerr << "error kind=" << kind << " message=\"" << quoted << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive QBX layer-potential experiments"};
  std::string config_path, out_path;
  std::uint64_t seed = 0;
  bool paper = false, print_config = false;
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "write CSV here instead of stdout");
  auto* seed_opt = app.add_option("--seed", seed, "seed of the random sources");
  app.add_flag("--paper", paper, "paper-scale defaults (200 panels)");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  app.require_subcommand(1, 1);
  const char* commands[][2] = {{"estimate-map", "measured and estimated direct-quadrature errors on a grid"},
                               {"field", "AQBX-corrected field and its error on a grid"},
                               {"table-tol", "error and work over tolerances"},
                               {"table-rh", "error and work over expansion distances"},
                               {"close-source", "errors for a source approaching the boundary"},
                               {"solve", "GMRES solves with the two-sided AQBX operator"}};
  for (const auto& c : commands) app.add_subcommand(c[0], c[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report("usage", e.what(), 2);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    aqbx::ExperimentConfig cfg = aqbx::default_config(command, paper);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) aqbx::fail(aqbx::ErrorKind::Io, "cannot read " + config_path);
      cfg = aqbx::parse_config(in, cfg);
    }
    if (*seed_opt) cfg.seed = seed;
    aqbx::validate_config(cfg);
    if (print_config) {
      std::cout << aqbx::serialize_config(cfg);
      return 0;
    }
    const aqbx::Table table = aqbx::run_command(command, cfg);
    if (out_path.empty()) {
      table.write(std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) aqbx::fail(aqbx::ErrorKind::Io, "cannot write " + out_path);
      table.write(out);
      if (!out) aqbx::fail(aqbx::ErrorKind::Io, "write failed: " + out_path);
    }
  } catch (const aqbx::Error& e) {
    return report(aqbx::to_string(e.kind()), e.what(), e.kind() == aqbx::ErrorKind::Config ? 2 : 1);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 0;
}
