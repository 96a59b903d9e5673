/**
 * @file oracles.hpp
 * @brief Independent reference computations used by the tests.
 *
 * Nothing here calls the library's root finder, closed-form inner products or
 * ray marcher; only the Hamiltonian derivatives (checked separately against
 * finite differences) are reused by the sigma-clock integrator.
 */
#ifndef MODALRAY_TESTS_ORACLES_HPP
#define MODALRAY_TESTS_ORACLES_HPP

#include "modalray/hamiltonian.hpp"
#include "modalray/types.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

using modalray::Mat6;
using modalray::Vec2;
using modalray::Vec6;

/// Root of gamma cos(gamma) + alpha sqrt(w^2 - gamma^2) sin(gamma) on (q_l, min((l+1) pi, w)) by bisection.
inline double dispersion_root(int l, double w_sq, double alpha) {
  const double q = std::numbers::pi * (l + 0.5);
  const double w = std::sqrt(w_sq);
  auto F = [&](double g) { return g * std::cos(g) + alpha * std::sqrt(std::max(w_sq - g * g, 0.0)) * std::sin(g); };
  double lo = q, hi = std::min((l + 1) * std::numbers::pi, w);
  auto tol = [](double a, double b) { return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(a); };
  const auto r = boost::math::tools::bisect(F, lo, hi, tol);
  return 0.5 * (r.first + r.second);
}

/// Unnormalized template: sin(gamma z / h) / sin(gamma) in water, a exp(-k (z/h - 1)) below.
inline double raw_template(double z, double a, double gamma, double k, double h) {
  const double s = z / h;
  return s <= 1.0 ? std::sin(gamma * s) / std::sin(gamma) : a * std::exp(-k * (s - 1.0));
}

/// Integral over z in [0, inf) of u(z) v(z), split at the interface z = h.
inline double integrate_profile(const std::function<double(double)>& integrand, double h) {
  using boost::math::quadrature::gauss_kronrod;
  const double water = gauss_kronrod<double, 61>::integrate(integrand, 0.0, h, 15, 1e-14);
  boost::math::quadrature::exp_sinh<double> tail;
  const double below = tail.integrate([&](double t) { return integrand(h + t); }, 1e-14);
  return water + below;
}

/// Quadrature normalization constant of the template with tail coefficient a.
inline double beta(double a, double gamma, double k, double h) {
  const double n = integrate_profile([&](double z) { return std::pow(raw_template(z, a, gamma, k, h), 2); }, h);
  return std::sqrt(h / n);
}

/// Normalized template (beta / sqrt(h)) * raw.
inline double mode(double z, double a, double gamma, double k, double h) {
  return beta(a, gamma, k, h) / std::sqrt(h) * raw_template(z, a, gamma, k, h);
}

/// <Psi(1), Psi(alpha)> by quadrature at duct strength w_sq and depth h.
inline double inner(int l, double alpha, double w_sq, double h) {
  const double g = dispersion_root(l, w_sq, alpha);
  const double k = std::sqrt(w_sq - g * g);
  const double b1 = beta(1.0, g, k, h), ba = beta(alpha, g, k, h);
  return integrate_profile(
      [&](double z) { return b1 * ba / h * raw_template(z, 1.0, g, k, h) * raw_template(z, alpha, g, k, h); }, h);
}

/// <d Psi(1) / dx, Psi(alpha)> / <Psi(1), Psi(alpha)> by centered differences of the
/// normalized mode over the depth h(x) = h0 + slope x, at fixed p_tau.
inline double gradient_ratio_x(int l, double alpha, double nu_sq, double p_tau, double h0, double slope,
                               double x, double dx = 1e-4) {
  auto solved = [&](double xx, double& g, double& k, double& h, double& b) {
    h = h0 + slope * xx;
    const double w_sq = nu_sq * p_tau * p_tau * h * h;
    g = dispersion_root(l, w_sq, alpha);
    k = std::sqrt(w_sq - g * g);
    b = beta(1.0, g, k, h);
  };
  double gp, kp, hp, bp, gm, km, hm, bm, g0, k0, h0c, b0;
  solved(x + dx, gp, kp, hp, bp);
  solved(x - dx, gm, km, hm, bm);
  solved(x, g0, k0, h0c, b0);
  const double ba = beta(alpha, g0, k0, h0c);
  auto psi1 = [&](double z, double g, double k, double h, double b) { return b / std::sqrt(h) * raw_template(z, 1.0, g, k, h); };
  auto psia = [&](double z) { return ba / std::sqrt(h0c) * raw_template(z, alpha, g0, k0, h0c); };
  const double hmax = std::max(hp, hm);
  auto num_integrand = [&](double z) {
    return (psi1(z, gp, kp, hp, bp) - psi1(z, gm, km, hm, bm)) / (2 * dx) * psia(z);
  };
  // Split at the moving interface so each piece is smooth.
  using boost::math::quadrature::gauss_kronrod;
  const double hmin = std::min(hp, hm);
  double num = gauss_kronrod<double, 61>::integrate(num_integrand, 0.0, hmin, 15, 1e-14) +
               gauss_kronrod<double, 61>::integrate(num_integrand, hmin, h0c, 5, 1e-14) +
               gauss_kronrod<double, 61>::integrate(num_integrand, h0c, hmax, 5, 1e-14);
  boost::math::quadrature::exp_sinh<double> tail;
  num += tail.integrate([&](double t) { return num_integrand(hmax + t); }, 1e-14);
  const double den = integrate_profile([&](double z) { return psi1(z, g0, k0, h0c, b0) * psia(z); }, h0c);
  return num / den;
}

/// Flat bottom with alpha = 0: lambda = nu^2 p_tau^2 - q_l^2 / h^2 in closed form.
struct StraightRing {
  double nu_sq, h, c_bot, freq0, dfreq, radius;
  int l;

  double p_tau(double mu1) const { return -2 * std::numbers::pi / c_bot * (freq0 + dfreq * mu1); }
  double dp_tau() const { return -2 * std::numbers::pi / c_bot * dfreq; }
  double q_sq() const { return std::pow(std::numbers::pi * (l + 0.5), 2) / (h * h); }
  double p_norm(double mu1) const { return std::sqrt((1 + nu_sq) * std::pow(p_tau(mu1), 2) - q_sq()); }
  /// dH/dp_tau = (1 + nu^2) p_tau.
  double clock(double mu1) const { return (1 + nu_sq) * p_tau(mu1); }

  /// I_r f_r in the sigma clock at sigma, columns (d/d sigma, d/d mu1, d/d mu2), evaluated at mu.
  modalray::Mat3 jacobian(const Vec2& mu, double sigma) const {
    const double pt = p_tau(mu.x()), pn = p_norm(mu.x());
    const double dpn = (1 + nu_sq) * pt * dp_tau() / pn;
    const Vec2 e(std::cos(mu.y()), std::sin(mu.y())), de(-std::sin(mu.y()), std::cos(mu.y()));
    modalray::Mat3 m;
    // tau = tau0 + c sigma; r = R e - |p| e sigma.
    m.col(0) << clock(mu.x()), -pn * e;
    m.col(1) << c_bot + (1 + nu_sq) * dp_tau() * sigma, -dpn * sigma * e;
    m.col(2) << 0.0, (radius - pn * sigma) * de;
    return m;
  }

  /// Position (tau, x, y) at natural parameter tau_nat.
  modalray::Vec3 position(const Vec2& mu, double tau_nat) const {
    const double sigma = tau_nat / clock(mu.x());
    const Vec2 e(std::cos(mu.y()), std::sin(mu.y()));
    const Vec2 r = radius * e - p_norm(mu.x()) * e * sigma;
    return {c_bot * mu.x() + tau_nat, r.x(), r.y()};
  }

  /// A / A0 = sqrt(D0 / D).
  double amplitude_ratio(const Vec2& mu, double tau_nat) const {
    const double sigma = tau_nat / clock(mu.x());
    return std::sqrt(jacobian(mu, 0.0).determinant() / jacobian(mu, sigma).determinant());
  }
};

/// Phase point and sigma-flow propagator marched on the sigma clock by RK4.
struct SigmaFlow {
  Vec6 f;
  Mat6 P;
};

inline SigmaFlow sigma_flow(const modalray::HamiltonianModel& model, const Vec6& f0, double sigma_end, int steps) {
  const Mat6 J = modalray::symplectic_unit();
  auto rhs = [&](const SigmaFlow& y) {
    const Vec6 g = model.grad(y.f);
    const Mat6 h = model.hessian(y.f);
    return SigmaFlow{J * g, J * h * y.P};
  };
  SigmaFlow y{f0, Mat6::Identity()};
  const double dt = sigma_end / steps;
  for (int i = 0; i < steps; ++i) {
    const SigmaFlow k1 = rhs(y);
    const SigmaFlow k2 = rhs({y.f + 0.5 * dt * k1.f, y.P + 0.5 * dt * k1.P});
    const SigmaFlow k3 = rhs({y.f + 0.5 * dt * k2.f, y.P + 0.5 * dt * k2.P});
    const SigmaFlow k4 = rhs({y.f + dt * k3.f, y.P + dt * k3.P});
    y.f += dt / 6 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f);
    y.P += dt / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P);
  }
  return y;
}

}  // namespace oracle

#endif
