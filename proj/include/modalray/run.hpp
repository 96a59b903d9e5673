/**
 * @file run.hpp
 * @brief Subcommand orchestration: ray fans, file emission, manifests, exit codes.
 */
#ifndef MODALRAY_RUN_HPP
#define MODALRAY_RUN_HPP

#include "modalray/config.hpp"
#include "modalray/fronts.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace modalray {

struct RunOptions {
  std::string output_dir = ".";
  unsigned threads = 0;  ///< 0: MODALRAY_THREADS, else hardware concurrency
};

/// One (alpha, mu1) fan over the configured mu2 grid.
struct FanRun {
  double alpha = 0.0;
  double mu1 = 0.0;
  HamiltonianModel model;
  RayFan fan;
  std::vector<std::vector<AmplitudeSample>> amplitudes;  ///< per ray, per sample; empty without propagators
};

/// Integrates every (alpha, mu1, mu2) node in parallel; rays are ordered by mu2 within a fan.
std::vector<FanRun> compute_fans(const RunConfig& cfg, const IntegrationSettings& settings,
                                 unsigned threads);

/// Sample grid of a run: 0, the checkpoints within range, tau_end.
std::vector<double> nominal_samples(const IntegrationSettings& settings);

int run_modes(const RunConfig& cfg, const RunOptions& opt);
int run_trace(const RunConfig& cfg, const RunOptions& opt);
int run_fronts(const RunConfig& cfg, const RunOptions& opt);
/// Exit code 0 when every invariant check passes, 1 otherwise.
int run_verify(const RunConfig& cfg, const RunOptions& opt);

/// Full pipeline: read JSON, apply dot-path overrides, validate, dispatch.
/// Errors are reported on `err` and mapped to their class exit code.
int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides, const RunOptions& opt,
                std::ostream& err);

}  // namespace modalray

#endif
