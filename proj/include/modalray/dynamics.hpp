/**
 * @file dynamics.hpp
 * @brief Ray marching in the natural parameter with co-integrated variations.
 *
 * The natural parameter tau_nat is defined by d tau_nat = (dH/dp_tau) d sigma,
 * so tau = tau0 + tau_nat and p_tau is constant. Both are set analytically; only
 * (x, y, p_x, p_y) and the accumulators are integrated by classical RK4.
 */
#ifndef MODALRAY_DYNAMICS_HPP
#define MODALRAY_DYNAMICS_HPP

#include "modalray/hamiltonian.hpp"
#include "modalray/source.hpp"
#include "modalray/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace modalray {

struct IntegrationSettings {
  double tau_end = 10.0;
  double step = 1e-3;
  /// Sample points in tau_nat; tau_end is always added. 0 is always sampled.
  std::vector<double> checkpoints;
  bool propagators = false;  ///< P_sigma and P_nat
  bool tensor = false;       ///< rank-3 propagation tensor (implies propagators)
  bool interior = false;     ///< integrals of P_nat^T grad G (implies propagators)
  bool dissipation = true;   ///< accumulate T_diss
  double cutoff_ratio = 1e-8;  ///< truncate once k^2 < cutoff_ratio * w^2
};

/// Integrals over [0, tau_nat] of P_nat^T grad G for the built-in integrands.
struct InteriorIntegrals {
  Vec6 phase = Vec6::Zero();      ///< G = -|p|^2 / c
  Vec6 arclen = Vec6::Zero();     ///< G = |p| / |c|
  Vec6 inv_clock = Vec6::Zero();  ///< G = 1 / c
  Vec6 diss = Vec6::Zero();       ///< G = (p . ratio + lambda_tilde) / c
};

struct RayState {
  double tau_nat = 0.0;
  Vec6 f = Vec6::Zero();
  double phase = 0.0;
  double T_diss = 0.0;
  double arclen = 0.0;
  double sigma = 0.0;
  double H = 0.0;
  Mat6 P_sigma = Mat6::Identity();
  Mat6 P_nat = Mat6::Identity();
  std::optional<Tensor6> Ptensor;
  InteriorIntegrals integrals;
};

struct RaySolution {
  SourceNode source;
  int l = 0;
  double alpha = 0.0;
  IntegrationSettings settings;
  std::vector<RayState> samples;
  double H0 = 0.0;
  bool truncated = false;
  double truncation_tau = 0.0;
  std::string truncation_reason;
  std::size_t steps = 0;

  /// Sample index at tau_nat (exact checkpoint match within 1e-9 * step), if present.
  std::optional<std::size_t> find(double tau_nat) const;
};

/// RK4 march from one source node. Throws DegenerateClock; cutoff truncates the ray.
RaySolution integrate_ray(const HamiltonianModel& model, const SourceNode& start,
                          const IntegrationSettings& settings);

struct PropagatorPair {
  double tau_nat;
  Mat6 P_sigma;
  Mat6 P_nat;
};

/// Propagators at the checkpoints of `ray`, re-marching if they were not co-integrated.
std::vector<PropagatorPair> integrate_propagator(const HamiltonianModel& model,
                                                 const RaySolution& ray);

/// Propagation tensor at the checkpoints of `ray`, re-marching if needed.
std::vector<Tensor6> integrate_propagation_tensor(const HamiltonianModel& model,
                                                  const RaySolution& ray);

/// T_diss at the checkpoints of `ray`, re-marching if it was disabled.
std::vector<double> dissipation_integral(const HamiltonianModel& model, const RaySolution& ray);

/// Integrand and phase-space gradient of the dissipation density (p . ratio + lambda_tilde) / c.
struct DissipationDensity {
  double value = 0.0;
  Vec6 grad = Vec6::Zero();
};
/// `ev` must carry the ratio; with_grad additionally needs its Hessian.
DissipationDensity dissipation_density(const HamiltonianModel& model, const HamiltonianEval& ev,
                                       const Vec6& f, bool with_grad);

}  // namespace modalray

#endif
