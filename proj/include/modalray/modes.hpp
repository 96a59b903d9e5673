/**
 * @file modes.hpp
 * @brief Vertical eigenproblem with transmission conditions at the bottom.
 *
 * For a constant contrast in the water column the scaled problem on [0, 1]
 * has eigenfunctions psi(s) = sin(gamma s) / sin(gamma) and eigenvalues k
 * solving cot(gamma) = -alpha k / gamma with k^2 + gamma^2 = w^2.
 *
 * Only trapped modes with real k > 0 are handled; anything at or past the
 * cutoff q_l = pi (l + 1/2) is rejected with ModeBelowCutoff.
 */
#ifndef MODALRAY_MODES_HPP
#define MODALRAY_MODES_HPP

#include "modalray/environment.hpp"
#include "modalray/series.hpp"
#include "modalray/types.hpp"

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

namespace modalray {

struct ModeQuery {
  int l = 0;
  double p_tau = 0.0;
  Vec2 r = Vec2::Zero();
  double alpha = 0.0;
};

struct VerticalMode {
  int l = 0;
  double alpha = 0.0;
  double w_sq = 0.0;         ///< duct strength nu^2 p_tau^2 h^2
  double gamma = 0.0;        ///< internal vertical wavenumber
  double k = 0.0;            ///< below-bottom decay rate (scaled by h)
  double norm_psi_sq = 0.0;  ///< ||psi||^2 on [0, 1] with psi(1) = 1
  double beta_1 = 0.0;       ///< normalization of the L eigenfunction
  double beta_alpha = 0.0;   ///< normalization of the adjoint eigenfunction
  double lambda = 0.0;       ///< k^2 / h^2
  double h = 1.0;            ///< depth the mode was evaluated at
  double residual = 0.0;     ///< |cot gamma + alpha k / gamma|
};

/// q_l = pi (l + 1/2), the alpha = 0 internal wavenumber.
double cutoff_wavenumber(int l);

/// w^2 = nu^2 p_tau^2 h(r)^2.
double duct_strength(const MediumModel& medium, double p_tau, const Vec2& r);

/// Number of modes with q_l < w (strict).
int mode_count(double w);

/// cot(gamma) + alpha sqrt(w^2 - gamma^2) / gamma.
double dispersion_function(double gamma, double w_sq, double alpha);

/// Root of the dispersion relation on (q_l, min((l+1) pi, w)).
/// A nearby previous root may be passed as `hint` to shorten the Newton phase.
double solve_gamma(int l, double w_sq, double alpha, double hint = 0.0);

/// Full mode record for scaled duct strength w_sq at depth h.
VerticalMode solve_mode(int l, double alpha, double w_sq, double h);
VerticalMode solve_eigenvalue(const MediumModel& medium, const ModeQuery& query);

/// First-order-in-alpha approximation of k_l^2; no root finding.
double approx_eigenvalue(int l, double w_sq, double alpha);

/// The integral of sin^2(gamma s) over [0, 1], i.e. 1/2 [1 - sin(2 gamma) / (2 gamma)].
double sine_profile_norm_sq(double gamma);

/// ||psi||^2 for psi(s) = sin(gamma s) / sin(gamma); equals sine_profile_norm_sq at gamma = q_l.
double norm_psi_sq(double gamma);

/// [norm_sq + a^2 / (2 k)]^(-1/2); a = 1 for L, a = alpha for the adjoint.
double normalization_beta(double a, double k, double norm_sq);

/// Normalized mode template at depth z with tail coefficient a.
double eval_mode(double z, double a, const VerticalMode& mode, double h);

/// <Psi(1), Psi(alpha)> in closed form.
double biorth_inner(const VerticalMode& mode, double alpha);

/// <grad Psi(1), Psi(alpha)> / <Psi(1), Psi(alpha)> in closed form.
Vec2 biorth_gradient_ratio(const VerticalMode& mode, double alpha, const Vec2& grad_h_over_h,
                           const Vec2& grad_k_norm);

/// Taylor expansions in w^2 of the root and derived mode quantities.
struct ModeSeries {
  Series<3> gamma;
  Series<3> k;
  Series<3> k_sq;
  Series<3> norm_sq;
};

/// `order` is the highest exact coefficient needed (1 or 3); `hint` as in solve_gamma.
ModeSeries mode_series(int l, double alpha, double w_sq, int order = 3, double hint = 0.0);

/// Horizontal gradient of k ||psi||^2 at fixed p_tau.
Vec2 grad_k_norm(const MediumModel& medium, int l, double p_tau, const Vec2& r);

/// The biorthogonal ratio is S(p_tau, h) grad h; S and its first partials.
struct RatioScalar {
  double s = 0.0;
  double ds_dp = 0.0;
  double ds_dh = 0.0;
};

RatioScalar biorth_ratio_scalar(int l, double alpha, double nu_sq, double p_tau, double h,
                                bool with_derivatives);
/// Same, reusing an expansion already computed at w^2 = nu_sq p_tau^2 h^2.
RatioScalar biorth_ratio_scalar(const ModeSeries& series, double alpha, double nu_sq, double p_tau,
                                double h, bool with_derivatives);

/**
 * Thread-safe memo of solved modes keyed by the exact bit pattern of
 * (l, alpha, w^2). Bounded; cleared wholesale when full.
 */
class ModeCache {
 public:
  explicit ModeCache(std::size_t capacity = 4096) : capacity_(capacity) {}

  VerticalMode solve(int l, double alpha, double w_sq, double h);
  std::size_t hits() const { return hits_; }
  std::size_t size() const;

 private:
  struct Key {
    int l;
    std::uint64_t alpha_bits;
    std::uint64_t w_bits;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, VerticalMode, KeyHash> map_;
  std::atomic<std::size_t> hits_{0};
};

}  // namespace modalray

#endif
