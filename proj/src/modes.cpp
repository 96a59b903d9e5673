#include "modalray/modes.hpp"

#include "modalray/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace modalray {

namespace {

constexpr double kPi = std::numbers::pi;

std::string describe(int l, double w) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "mode l = " << l << " is not trapped at w = " << w << " (q_l = " << cutoff_wavenumber(l)
      << ")";
  return msg.str();
}


}  // namespace

double cutoff_wavenumber(int l) { return kPi * (l + 0.5); }

double duct_strength(const MediumModel& medium, double p_tau, const Vec2& r) {
  const double h = medium.depth(r);
  return medium.nu_sq_bar() * p_tau * p_tau * h * h;
}

int mode_count(double w) {
  int n = 0;
  while (cutoff_wavenumber(n) < w) ++n;
  return n;
}

double dispersion_function(double gamma, double w_sq, double alpha) {
  const double k = std::sqrt(std::max(w_sq - gamma * gamma, 0.0));
  return std::cos(gamma) / std::sin(gamma) + alpha * k / gamma;
}

double solve_gamma(int l, double w_sq, double alpha, double hint) {
  const double w = std::sqrt(w_sq);
  const double q = cutoff_wavenumber(l);
  if (l < 0 || !(q < w)) throw ModeBelowCutoff(describe(l, w));
  if (alpha == 0.0) return q;

  const double delta = 1e-12 * w;
  double lo = q + delta;
  double hi = std::min((l + 1) * kPi, w) - delta;
  if (!(lo < hi)) throw ModeBelowCutoff(describe(l, w));

  constexpr double eps = std::numeric_limits<double>::epsilon();
  auto eval = [&](double x, double& slope) {
    const double sn = std::sin(x), cs = std::cos(x);
    const double k = std::sqrt(std::max(w_sq - x * x, 0.0));
    slope = -1.0 / (sn * sn) - alpha * (1.0 / k + k / (x * x));
    return cs / sn + alpha * k / x;
  };

  // Start from the hint or the first-order approximation.
  double x0 = 0.5 * (lo + hi);
  if (hint > lo && hint < hi) {
    x0 = hint;
  } else {
    const double k_sq_guess = approx_eigenvalue(l, w_sq, alpha);
    if (k_sq_guess > 0.0 && k_sq_guess < w_sq) {
      const double g0 = std::sqrt(w_sq - k_sq_guess);
      if (g0 > lo && g0 < hi) x0 = g0;
    }
  }

  // g is strictly decreasing on the bracket, so a converged interior Newton
  // iterate is the unique root. Otherwise fall back to the safeguarded search.
  {
    double x = x0, slope = 0.0;
    for (int it = 0; it < 8; ++it) {
      const double fx = eval(x, slope);
      const double step = fx / slope;
      const double next = x - step;
      if (!(next > lo && next < hi)) break;
      if (std::abs(step) <= 4.0 * eps * x) return next;
      x = next;
    }
  }

  double slope = 0.0;
  const double g_lo = eval(lo, slope);
  double g_hi = eval(hi, slope);
  if (g_hi >= 0.0 && w < (l + 1) * kPi) {
    // Within ~sqrt(delta) of cutoff the shifted end can miss the root; k = 0 at gamma = w.
    hi = w;
    g_hi = std::cos(hi) / std::sin(hi);
  }
  if (!(g_lo > 0.0 && g_hi < 0.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "no sign change on (" << lo << ", " << hi << "): g = " << g_lo << ", " << g_hi;
    throw RootBracketFailure(msg.str());
  }

  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = eval(x, slope);
    if (fx == 0.0) return x;
    if (fx > 0.0)
      lo = x;
    else
      hi = x;
    const double step = fx / slope;
    if (std::abs(step) <= 4.0 * eps * x) return (x - step > lo && x - step < hi) ? x - step : x;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    if (hi - lo <= 4.0 * eps * x) break;
  }
  return x;
}

double approx_eigenvalue(int l, double w_sq, double alpha) {
  const double q = cutoff_wavenumber(l);
  const double k0_sq = w_sq - q * q;
  if (!(k0_sq > 0.0)) throw ModeBelowCutoff(describe(l, std::sqrt(std::max(w_sq, 0.0))));
  const double k0 = std::sqrt(k0_sq);
  return k0_sq * (1.0 - 2.0 * alpha / (k0 + alpha * w_sq / (q * q)));
}

double sine_profile_norm_sq(double gamma) {
  return 0.5 * (1.0 - std::sin(2.0 * gamma) / (2.0 * gamma));
}

double norm_psi_sq(double gamma) {
  const double s = std::sin(gamma);
  return sine_profile_norm_sq(gamma) / (s * s);
}

double normalization_beta(double a, double k, double norm_sq) {
  return 1.0 / std::sqrt(norm_sq + a * a / (2.0 * k));
}

VerticalMode solve_mode(int l, double alpha, double w_sq, double h) {
  VerticalMode m;
  m.l = l;
  m.alpha = alpha;
  m.w_sq = w_sq;
  m.h = h;
  m.gamma = solve_gamma(l, w_sq, alpha);
  const double k_sq = w_sq - m.gamma * m.gamma;
  if (!(k_sq > 0.0)) throw ModeBelowCutoff(describe(l, std::sqrt(w_sq)));
  m.k = std::sqrt(k_sq);
  m.norm_psi_sq = norm_psi_sq(m.gamma);
  m.beta_1 = normalization_beta(1.0, m.k, m.norm_psi_sq);
  m.beta_alpha = normalization_beta(alpha, m.k, m.norm_psi_sq);
  m.lambda = k_sq / (h * h);
  m.residual = std::abs(std::cos(m.gamma) / std::sin(m.gamma) + alpha * m.k / m.gamma);
  return m;
}

VerticalMode solve_eigenvalue(const MediumModel& medium, const ModeQuery& query) {
  const double h = medium.depth(query.r);
  return solve_mode(query.l, query.alpha, duct_strength(medium, query.p_tau, query.r), h);
}

double eval_mode(double z, double a, const VerticalMode& mode, double h) {
  if (z < 0.0) throw NegativeDepthCoordinate("z = " + std::to_string(z));
  const double beta = normalization_beta(a, mode.k, mode.norm_psi_sq);
  const double scale = beta / std::sqrt(h);
  const double s = z / h;
  if (s <= 1.0) return scale * std::sin(mode.gamma * s) / std::sin(mode.gamma);
  return scale * a * std::exp(-mode.k * (s - 1.0));
}

double biorth_inner(const VerticalMode& mode, double alpha) {
  const double kn = 2.0 * mode.k * mode.norm_psi_sq;
  const double beta_a = normalization_beta(alpha, mode.k, mode.norm_psi_sq);
  const double beta_1 = normalization_beta(1.0, mode.k, mode.norm_psi_sq);
  return beta_a / beta_1 + (alpha - 1.0) / (std::sqrt(kn + 1.0) * std::sqrt(kn + alpha * alpha));
}

Vec2 biorth_gradient_ratio(const VerticalMode& mode, double alpha, const Vec2& grad_h_over_h,
                           const Vec2& grad_k_norm) {
  const double kn1 = 2.0 * mode.k * mode.norm_psi_sq + 1.0;
  const double pref = 1.0 - 1.0 / (1.0 + (alpha - 1.0) / kn1);
  return pref * (mode.k * grad_h_over_h - grad_k_norm / kn1);
}

ModeSeries mode_series(int l, double alpha, double w_sq, int order, double hint) {
  const auto w = Series<3>::variable(w_sq);
  ModeSeries out;
  if (alpha == 0.0) {
    if (!(cutoff_wavenumber(l) < std::sqrt(w_sq))) throw ModeBelowCutoff(describe(l, std::sqrt(w_sq)));
    out.gamma = Series<3>::constant(cutoff_wavenumber(l));
  } else {
    // Newton on the series doubles the number of exact coefficients per pass.
    auto g = Series<3>::constant(solve_gamma(l, w_sq, alpha, hint));
    const int passes = order <= 1 ? 1 : 2;
    for (int it = 0; it < passes; ++it) {
      Series<3> s, c;
      sincos(g, s, c);
      const auto k = sqrt(w - g * g);
      const auto f = g * c + alpha * k * s;
      const auto df = c - g * s + alpha * (k * c - g * s / k);
      g = g - f / df;
    }
    out.gamma = g;
  }
  out.k_sq = w - out.gamma * out.gamma;
  if (!(out.k_sq.value() > 0.0)) throw ModeBelowCutoff(describe(l, std::sqrt(w_sq)));
  out.k = sqrt(out.k_sq);
  Series<3> s, c;
  sincos(out.gamma, s, c);
  out.norm_sq = 0.5 * (1.0 - s * c / out.gamma) / (s * s);
  return out;
}

Vec2 grad_k_norm(const MediumModel& medium, int l, double p_tau, const Vec2& r) {
  const double h = medium.depth(r);
  const double nu = medium.nu_sq_bar();
  const auto ms = mode_series(l, medium.alpha(), nu * p_tau * p_tau * h * h);
  const auto kn = ms.k * ms.norm_sq;
  return kn.c[1] * 2.0 * nu * p_tau * p_tau * h * medium.grad_h();
}

RatioScalar biorth_ratio_scalar(int l, double alpha, double nu_sq, double p_tau, double h,
                                bool with_derivatives) {
  if (alpha == 1.0) return {};
  return biorth_ratio_scalar(mode_series(l, alpha, nu_sq * p_tau * p_tau * h * h), alpha, nu_sq,
                             p_tau, h, with_derivatives);
}

RatioScalar biorth_ratio_scalar(const ModeSeries& ms, double alpha, double nu_sq, double p_tau,
                                double h, bool with_derivatives) {
  RatioScalar out;
  if (alpha == 1.0) return out;
  const auto kn = ms.k * ms.norm_sq;
  const auto a = (alpha - 1.0) / (2.0 * kn + alpha);
  const auto c = differentiate(kn) / (2.0 * kn + 1.0);
  const double e = 2.0 * nu_sq * p_tau * p_tau * h;  // dW/dh, also the grad W / grad h factor
  const double bracket = ms.k.value() / h - c.value() * e;
  out.s = a.value() * bracket;
  if (!with_derivatives) return out;

  const double w_p = 2.0 * nu_sq * p_tau * h * h;
  const double w_h = e;
  const double a1 = a.c[1], k1 = ms.k.c[1], c1 = c.c[1];
  const double along_w = a1 * bracket + a.value() * (k1 / h - c1 * e);
  out.ds_dp = w_p * along_w - a.value() * c.value() * 4.0 * nu_sq * p_tau * h;
  out.ds_dh = w_h * along_w +
              a.value() * (-ms.k.value() / (h * h) - c.value() * 2.0 * nu_sq * p_tau * p_tau);
  return out;
}

std::size_t ModeCache::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint64_t v : {static_cast<std::uint64_t>(k.l), k.alpha_bits, k.w_bits}) {
    h ^= v;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

VerticalMode ModeCache::solve(int l, double alpha, double w_sq, double h) {
  const Key key{l, std::bit_cast<std::uint64_t>(alpha), std::bit_cast<std::uint64_t>(w_sq)};
  {
    std::shared_lock lock(mutex_);
    if (auto it = map_.find(key); it != map_.end()) {
      ++hits_;
      VerticalMode m = it->second;
      m.h = h;
      m.lambda = (w_sq - m.gamma * m.gamma) / (h * h);
      return m;
    }
  }
  VerticalMode m = solve_mode(l, alpha, w_sq, h);
  std::unique_lock lock(mutex_);
  if (map_.size() >= capacity_) map_.clear();
  map_.emplace(key, m);
  return m;
}

std::size_t ModeCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

}  // namespace modalray
