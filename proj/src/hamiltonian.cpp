#include "modalray/hamiltonian.hpp"

#include "modalray/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modalray {

namespace {

// Mixed partials of lambda(p, h) indexed [order in p][order in h].
using PartialTable = std::array<std::array<double, 4>, 4>;

void fill_jet(const PartialTable& lam, const Vec2& g, int order, LambdaJet& jet) {
  // Jet slots 0, 1 act through h with factors g.x, g.y; slot 2 is p_tau.
  auto factor = [&](int slot) { return slot == 2 ? 1.0 : g(slot); };
  jet.value = lam[0][0];
  if (order < 1) return;
  for (int a = 0; a < 3; ++a) jet.d1(a) = a == 2 ? lam[1][0] : lam[0][1] * factor(a);
  if (order < 2) return;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const int np = (a == 2) + (b == 2);
      double v = lam[np][2 - np];
      if (a != 2) v *= factor(a);
      if (b != 2) v *= factor(b);
      jet.d2(a, b) = v;
    }
  if (order < 3) return;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int np = (a == 2) + (b == 2) + (c == 2);
        double v = lam[np][3 - np];
        for (int s : {a, b, c})
          if (s != 2) v *= factor(s);
        jet.d3[(a * 3 + b) * 3 + c] = v;
      }
}

}  // namespace

HamiltonianModel::HamiltonianModel(MediumModel medium, int l, LambdaTilde lambda_tilde,
                                   DerivativeSource source)
    : medium_(std::move(medium)), l_(l), lambda_tilde_(std::move(lambda_tilde)), source_(source) {
  if (l < 0) throw ValidationError("mode.l must be non-negative");
}

LambdaJet HamiltonianModel::implicit_jet(double p, const Vec2& r, int order, ModeSeries* keep,
                                         double* gamma_hint) const {
  const double h = medium_.depth(r);
  const double a = medium_.nu_sq_bar();
  const double w_sq = a * p * p * h * h;
  const ModeSeries ms =
      mode_series(l_, medium_.alpha(), w_sq, order >= 2 ? 3 : 1, gamma_hint ? *gamma_hint : 0.0);
  if (keep) *keep = ms;
  if (gamma_hint) *gamma_hint = ms.gamma.value();

  const double k0 = ms.k_sq.c[0];
  const double k1 = ms.k_sq.derivative(1);
  const double k2 = ms.k_sq.derivative(2);
  const double k3 = ms.k_sq.derivative(3);

  const double wp = 2 * a * p * h * h, wh = 2 * a * p * p * h;
  const double wpp = 2 * a * h * h, wph = 4 * a * p * h, whh = 2 * a * p * p;
  const double wpph = 4 * a * h, wphh = 4 * a * p;

  // F(p, h) = k^2(W(p, h)) by the chain rule.
  PartialTable f{};
  f[0][0] = k0;
  f[1][0] = k1 * wp;
  f[0][1] = k1 * wh;
  f[2][0] = k2 * wp * wp + k1 * wpp;
  f[1][1] = k2 * wp * wh + k1 * wph;
  f[0][2] = k2 * wh * wh + k1 * whh;
  f[3][0] = k3 * wp * wp * wp + 3 * k2 * wp * wpp;
  f[2][1] = k3 * wp * wp * wh + k2 * (2 * wp * wph + wh * wpp) + k1 * wpph;
  f[1][2] = k3 * wp * wh * wh + k2 * (2 * wh * wph + wp * whh) + k1 * wphh;
  f[0][3] = k3 * wh * wh * wh + 3 * k2 * wh * whh;

  // lambda = F u with u = h^-2; Leibniz in h.
  const std::array<double, 4> u{1 / (h * h), -2 / (h * h * h), 6 / (h * h * h * h),
                                -24 / (h * h * h * h * h)};
  constexpr int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  PartialTable lam{};
  for (int np = 0; np <= 3; ++np)
    for (int nh = 0; np + nh <= 3; ++nh) {
      double s = 0.0;
      for (int j = 0; j <= nh; ++j) s += binom[nh][j] * f[np][nh - j] * u[j];
      lam[np][nh] = s;
    }

  LambdaJet jet;
  jet.w_sq = w_sq;
  jet.k_sq = k0;
  fill_jet(lam, medium_.grad_h(), order, jet);
  return jet;
}

LambdaJet HamiltonianModel::fd_jet(double p, const Vec2& r, int order) const {
  auto lam = [&](const Vec3& v) { return lambda(v(2), v.head<2>()); };
  const Vec3 v0(r.x(), r.y(), p);
  const double h = medium_.depth(r);
  const double gn = medium_.grad_h().norm();
  const double r_scale = gn > 0.0 ? std::min(h / gn, 1e4) : 1e4;
  const Vec3 scale(r_scale, r_scale, std::max(std::abs(p), 1e-3));

  auto gradient = [&](const Vec3& v, double rel) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
      const double s = rel * scale(a);
      Vec3 vp = v, vm = v;
      vp(a) += s;
      vm(a) -= s;
      g(a) = (lam(vp) - lam(vm)) / (2 * s);
    }
    return g;
  };
  auto hessian = [&](const Vec3& v, double rel) {
    Mat3 m;
    const double c = lam(v);
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        const double sa = rel * scale(a), sb = rel * scale(b);
        if (a == b) {
          Vec3 vp = v, vm = v;
          vp(a) += sa;
          vm(a) -= sa;
          m(a, a) = (lam(vp) - 2 * c + lam(vm)) / (sa * sa);
        } else {
          Vec3 pp = v, pm = v, mp = v, mm = v;
          pp(a) += sa, pp(b) += sb;
          pm(a) += sa, pm(b) -= sb;
          mp(a) -= sa, mp(b) += sb;
          mm(a) -= sa, mm(b) -= sb;
          m(a, b) = m(b, a) = (lam(pp) - lam(pm) - lam(mp) + lam(mm)) / (4 * sa * sb);
        }
      }
    return m;
  };

  LambdaJet jet;
  const double w_sq = medium_.nu_sq_bar() * p * p * h * h;
  jet.w_sq = w_sq;
  jet.value = lam(v0);
  jet.k_sq = jet.value * h * h;
  if (order >= 1) jet.d1 = gradient(v0, 1e-5);
  if (order >= 2) jet.d2 = hessian(v0, 1e-4);
  if (order >= 3) {
    for (int c = 0; c < 3; ++c) {
      const double s = 1e-3 * scale(c);
      Vec3 vp = v0, vm = v0;
      vp(c) += s;
      vm(c) -= s;
      const Mat3 d = (hessian(vp, 1e-4) - hessian(vm, 1e-4)) / (2 * s);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) jet.d3[(a * 3 + b) * 3 + c] = d(a, b);
    }
    // Symmetrize over all index permutations.
    std::array<double, 27> sym{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c)
          sym[(a * 3 + b) * 3 + c] =
              (jet.third(a, b, c) + jet.third(a, c, b) + jet.third(b, a, c) + jet.third(b, c, a) +
               jet.third(c, a, b) + jet.third(c, b, a)) /
              6.0;
    jet.d3 = sym;
  }
  return jet;
}

double HamiltonianModel::lambda(double p_tau, const Vec2& r) const {
  const double h = medium_.depth(r);
  const double w_sq = medium_.nu_sq_bar() * p_tau * p_tau * h * h;
  const double gamma = solve_gamma(l_, w_sq, medium_.alpha());
  return (w_sq - gamma * gamma) / (h * h);
}

LambdaJet HamiltonianModel::lambda_jet(double p_tau, const Vec2& r, int order) const {
  if (source_ == DerivativeSource::finite_difference) return fd_jet(p_tau, r, order);
  return implicit_jet(p_tau, r, order, nullptr, nullptr);
}

HamiltonianEval HamiltonianModel::evaluate(const Vec6& f, int order, bool with_ratio,
                                           double* gamma_hint) const {
  const double p_tau = f(idx::p_tau);
  const Vec2 r(f(idx::x), f(idx::y));
  const Vec2 p(f(idx::p_x), f(idx::p_y));

  HamiltonianEval out;
  out.depth = medium_.depth(r);
  if (source_ == DerivativeSource::implicit) {
    ModeSeries ms;
    out.jet = implicit_jet(p_tau, r, order, with_ratio ? &ms : nullptr, gamma_hint);
    if (with_ratio)
      out.ratio = biorth_ratio_scalar(ms, medium_.alpha(), medium_.nu_sq_bar(), p_tau, out.depth,
                                      order >= 2);
  } else {
    out.jet = fd_jet(p_tau, r, order);
    if (with_ratio)
      out.ratio = biorth_ratio_scalar(l_, medium_.alpha(), medium_.nu_sq_bar(), p_tau, out.depth,
                                      order >= 2);
  }
  const LambdaJet& jet = out.jet;

  out.value = 0.5 * (p_tau * p_tau + jet.value - p.squaredNorm());
  if (order >= 1) {
    out.grad(idx::tau) = 0.0;
    out.grad(idx::x) = 0.5 * jet.d1(0);
    out.grad(idx::y) = 0.5 * jet.d1(1);
    out.grad(idx::p_tau) = p_tau + 0.5 * jet.d1(2);
    out.grad(idx::p_x) = -p.x();
    out.grad(idx::p_y) = -p.y();
  }
  if (order >= 2) {
    out.hess.block<3, 3>(1, 1) = 0.5 * jet.d2;
    out.hess(idx::p_tau, idx::p_tau) += 1.0;
    out.hess(idx::p_x, idx::p_x) = -1.0;
    out.hess(idx::p_y, idx::p_y) = -1.0;
  }
  if (order >= 3) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) out.third(a + 1, b + 1, c + 1) = 0.5 * jet.third(a, b, c);
  }
  return out;
}

double HamiltonianModel::hamiltonian(const Vec6& f) const { return evaluate(f, 0).value; }
Vec6 HamiltonianModel::grad(const Vec6& f) const { return evaluate(f, 1).grad; }
Mat6 HamiltonianModel::hessian(const Vec6& f) const { return evaluate(f, 2).hess; }
Tensor6 HamiltonianModel::third_derivative(const Vec6& f) const { return evaluate(f, 3).third; }

double HamiltonianModel::clock_rate(const Vec6& f) const { return grad(f)(idx::p_tau); }

Vec2 HamiltonianModel::group_velocity(const Vec6& f) const {
  const double c = clock_rate(f);
  if (std::abs(c) < kClockFloor) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "dH/dp_tau = " << c << " at p_tau = " << f(idx::p_tau);
    throw DegenerateClock(msg.str());
  }
  return -Vec2(f(idx::p_x), f(idx::p_y)) / c;
}

double HamiltonianModel::lambda_tilde(double p_tau, const Vec2& r) const {
  return lambda_tilde_ ? lambda_tilde_(p_tau, r) : 0.0;
}

Vec3 HamiltonianModel::lambda_tilde_gradient(double p_tau, const Vec2& r) const {
  if (!lambda_tilde_) return Vec3::Zero();
  const Vec3 v0(r.x(), r.y(), p_tau);
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    const double s = 1e-6 * std::max(1.0, std::abs(v0(a)));
    Vec3 vp = v0, vm = v0;
    vp(a) += s;
    vm(a) -= s;
    g(a) = (lambda_tilde_(vp(2), vp.head<2>()) - lambda_tilde_(vm(2), vm.head<2>())) / (2 * s);
  }
  return g;
}

}  // namespace modalray
