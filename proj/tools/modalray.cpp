/**
 * @file modalray.cpp
 * @brief Command-line entry point: modes, trace, fronts, verify.
 */
#include "modalray/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Single-mode pulse propagation in a shallow-water waveguide"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  modalray::RunOptions opt;

  for (const char* name : {"modes", "trace", "fronts", "verify"}) {
    const std::string help = std::string(name) == "modes"    ? "Mode table at the source nodes"
                             : std::string(name) == "trace"  ? "Ray states at every checkpoint"
                             : std::string(name) == "fronts" ? "Front slices, level fronts and SVG"
                                                             : "Run the invariant checks";
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--output-dir", opt.output_dir, "Directory for CSV, SVG and manifest");
    sub->add_option("--override", overrides, "Dot-path assignment key=value (repeatable)")
        ->take_all()
        ->allow_extra_args(false);
    sub->add_option("--threads", opt.threads, "Worker threads (default: MODALRAY_THREADS or all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return modalray::run_command(command, config_path, overrides, opt, std::cerr);
}
