/**
 * @file hamiltonian.hpp
 * @brief Effective single-mode Hamiltonian and its derivatives up to third order.
 *
 * H(f) = (p_tau^2 + lambda(p_tau, r) - |p|^2) / 2 on f = (tau, x, y, p_tau, p_x, p_y).
 * lambda = k^2 / h^2 depends on (p_tau, r) only through p_tau and h(r), so all
 * derivatives live in the (x, y, p_tau) block.
 */
#ifndef MODALRAY_HAMILTONIAN_HPP
#define MODALRAY_HAMILTONIAN_HPP

#include "modalray/environment.hpp"
#include "modalray/modes.hpp"
#include "modalray/types.hpp"

#include <array>
#include <functional>

namespace modalray {

struct PhasePoint {
  double tau = 0.0;
  Vec2 r = Vec2::Zero();
  double p_tau = 0.0;
  Vec2 p = Vec2::Zero();

  PhasePoint() = default;
  explicit PhasePoint(const Vec6& f)
      : tau(f(idx::tau)), r(f(idx::x), f(idx::y)), p_tau(f(idx::p_tau)), p(f(idx::p_x), f(idx::p_y)) {}

  Vec6 vec() const {
    Vec6 f;
    f << tau, r.x(), r.y(), p_tau, p.x(), p.y();
    return f;
  }
};

/// How eigenvalue derivatives are obtained.
enum class DerivativeSource {
  implicit,           ///< exact Taylor expansion of the dispersion root
  finite_difference,  ///< nested central differences of the eigenvalue solve
};

/// Dissipative eigenvalue perturbation lambda_tilde(p_tau, r); empty means zero.
using LambdaTilde = std::function<double(double p_tau, const Vec2& r)>;

/// lambda and its derivatives over (x, y, p_tau), i.e. f-indices 1..3.
struct LambdaJet {
  double value = 0.0;
  Vec3 d1 = Vec3::Zero();
  Mat3 d2 = Mat3::Zero();
  std::array<double, 27> d3{};
  double w_sq = 0.0;
  double k_sq = 0.0;

  double third(int a, int b, int c) const { return d3[(a * 3 + b) * 3 + c]; }
};

struct HamiltonianEval {
  double value = 0.0;
  Vec6 grad = Vec6::Zero();
  Mat6 hess = Mat6::Zero();
  Tensor6 third;
  LambdaJet jet;
  double depth = 0.0;
  RatioScalar ratio;  ///< biorthogonal ratio scalar, filled on request
};

class HamiltonianModel {
 public:
  HamiltonianModel(MediumModel medium, int l, LambdaTilde lambda_tilde = {},
                   DerivativeSource source = DerivativeSource::implicit);

  const MediumModel& medium() const { return medium_; }
  int mode_index() const { return l_; }
  double alpha() const { return medium_.alpha(); }
  DerivativeSource derivative_source() const { return source_; }

  double lambda(double p_tau, const Vec2& r) const;
  /// Derivatives of lambda through the given order (0..3).
  LambdaJet lambda_jet(double p_tau, const Vec2& r, int order) const;

  double hamiltonian(const Vec6& f) const;
  Vec6 grad(const Vec6& f) const;
  Mat6 hessian(const Vec6& f) const;
  Tensor6 third_derivative(const Vec6& f) const;

  /// One spectral solve serving H and its derivatives through `order`.
  /// `gamma_hint`, if given, seeds the root search and receives the new root.
  HamiltonianEval evaluate(const Vec6& f, int order, bool with_ratio = false,
                           double* gamma_hint = nullptr) const;

  /// dH/dp_tau = p_tau + lambda_p / 2, the natural clock rate d tau_nat / d sigma.
  double clock_rate(const Vec6& f) const;

  /// dr/d tau_nat = -p / (dH/dp_tau). Throws DegenerateClock.
  Vec2 group_velocity(const Vec6& f) const;

  bool has_lambda_tilde() const { return static_cast<bool>(lambda_tilde_); }
  double lambda_tilde(double p_tau, const Vec2& r) const;
  /// (d/dx, d/dy, d/dp_tau) of lambda_tilde by central differences.
  Vec3 lambda_tilde_gradient(double p_tau, const Vec2& r) const;

 private:
  LambdaJet implicit_jet(double p_tau, const Vec2& r, int order, ModeSeries* keep,
                         double* gamma_hint) const;
  LambdaJet fd_jet(double p_tau, const Vec2& r, int order) const;

  MediumModel medium_;
  int l_;
  LambdaTilde lambda_tilde_;
  DerivativeSource source_;
};

/// Clock rates below this magnitude are treated as degenerate.
inline constexpr double kClockFloor = 1e-12;

}  // namespace modalray

#endif
