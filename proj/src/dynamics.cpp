#include "modalray/dynamics.hpp"

#include "modalray/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modalray {

namespace {

struct CutoffReached {
  std::string reason;
};

// Offsets into the flat integration state.
struct Layout {
  static constexpr int x = 0, y = 1, px = 2, py = 3, phase = 4, arclen = 5, sigma = 6, diss = 7;
  static constexpr int base = 8;
  int p_sigma = -1, p_nat = -1, tensor = -1, interior = -1;
  int size = base;

  explicit Layout(const IntegrationSettings& s) {
    if (s.propagators || s.tensor || s.interior) {
      p_sigma = size;
      size += 36;
      p_nat = size;
      size += 36;
    }
    if (s.tensor) {
      tensor = size;
      size += 216;
    }
    if (s.interior) {
      interior = size;
      size += 24;
    }
  }
};

using State = Eigen::VectorXd;
using MatMap = Eigen::Map<Mat6>;
using ConstMatMap = Eigen::Map<const Mat6>;

class RayRhs {
 public:
  RayRhs(const HamiltonianModel& model, const IntegrationSettings& settings, const Layout& layout,
         double tau0, double p_tau)
      : model_(model), settings_(settings), layout_(layout), tau0_(tau0), p_tau_(p_tau) {
    order_ = settings.tensor ? 3 : (layout.p_sigma >= 0 ? 2 : 1);
  }

  Vec6 phase_point(double t, const State& y) const {
    Vec6 f;
    f << tau0_ + t, y(Layout::x), y(Layout::y), p_tau_, y(Layout::px), y(Layout::py);
    return f;
  }

  void operator()(double t, const State& y, State& dy) const {
    const Vec6 f = phase_point(t, y);
    HamiltonianEval ev;
    try {
      ev = model_.evaluate(f, order_, settings_.dissipation, &gamma_hint_);
    } catch (const ModeBelowCutoff& e) {
      throw CutoffReached{e.what()};
    }
    if (ev.jet.k_sq < settings_.cutoff_ratio * ev.jet.w_sq) throw CutoffReached{"k^2 below cutoff ratio"};

    const double c = ev.grad(idx::p_tau);
    if (std::abs(c) < kClockFloor) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "dH/dp_tau = " << c << " at tau_nat = " << t;
      throw DegenerateClock(msg.str());
    }
    const double inv = 1.0 / c;
    const Vec2 p(f(idx::p_x), f(idx::p_y));
    const double p_sq = p.squaredNorm();

    dy.setZero(y.size());
    dy(Layout::x) = -p.x() * inv;
    dy(Layout::y) = -p.y() * inv;
    dy(Layout::px) = -ev.grad(idx::x) * inv;
    dy(Layout::py) = -ev.grad(idx::y) * inv;
    dy(Layout::phase) = p_tau_ - p_sq * inv;
    dy(Layout::arclen) = std::sqrt(p_sq) * std::abs(inv);
    dy(Layout::sigma) = inv;

    const bool interior = layout_.interior >= 0;
    DissipationDensity dd;
    if (settings_.dissipation) {
      dd = dissipation_density(model_, ev, f, interior);
      dy(Layout::diss) = dd.value;
    }

    if (layout_.p_sigma < 0) return;
    const Mat6 jh = inv * symplectic_unit() * ev.hess;
    ConstMatMap ps(y.data() + layout_.p_sigma);
    ConstMatMap pn(y.data() + layout_.p_nat);
    MatMap(dy.data() + layout_.p_sigma).noalias() = jh * ps;
    const Vec6 grad_c = ev.hess.row(idx::p_tau).transpose();
    const Vec6 grad_s = -grad_c * inv * inv;
    const Vec6 jg = apply_j(ev.grad);
    MatMap(dy.data() + layout_.p_nat).noalias() = jh * pn + jg * (grad_s.transpose() * pn);

    if (layout_.tensor >= 0) {
      const double* pt = y.data() + layout_.tensor;
      double* dpt = dy.data() + layout_.tensor;
      // J Hess acting on the first index of the tensor.
      for (int i = 0; i < 6; ++i)
        for (int jk = 0; jk < 36; ++jk) {
          double s = 0.0;
          for (int a = 0; a < 6; ++a) s += jh(i, a) * pt[a * 36 + jk];
          dpt[i * 36 + jk] = s;
        }
      // J T{P, P}: T is supported on indices 1..3 only.
      const Eigen::Matrix<double, 3, 6> p3 = ps.middleRows<3>(1);
      Mat6 w[3];
      for (int a = 0; a < 3; ++a) {
        Mat3 slice;
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) slice(l, m) = ev.third(a + 1, l + 1, m + 1);
        w[a].noalias() = p3.transpose() * slice * p3;
      }
      // (J W)_i = W_{i+3} for i < 3 and -W_{i-3} otherwise; W_a lives on a = 1..3.
      auto add = [&](int i, const Mat6& m, double sign) {
        for (int j = 0; j < 6; ++j)
          for (int k = 0; k < 6; ++k) dpt[i * 36 + j * 6 + k] += sign * inv * m(j, k);
      };
      add(0, w[2], 1.0);   // W_3 (p_tau row)
      add(4, w[0], -1.0);  // -W_1
      add(5, w[1], -1.0);  // -W_2
    }

    if (interior) {
      Vec6 g_phase = p_sq * inv * inv * grad_c;
      g_phase(idx::p_x) += -2.0 * p.x() * inv;
      g_phase(idx::p_y) += -2.0 * p.y() * inv;

      const double pn_norm = std::sqrt(p_sq);
      Vec6 g_arc = -pn_norm * (c > 0 ? 1.0 : -1.0) * inv * inv * grad_c;
      if (pn_norm > 0.0) {
        g_arc(idx::p_x) += p.x() / pn_norm * std::abs(inv);
        g_arc(idx::p_y) += p.y() / pn_norm * std::abs(inv);
      }

      double* di = dy.data() + layout_.interior;
      Eigen::Map<Vec6>(di + 0).noalias() = pn.transpose() * g_phase;
      Eigen::Map<Vec6>(di + 6).noalias() = pn.transpose() * g_arc;
      Eigen::Map<Vec6>(di + 12).noalias() = pn.transpose() * grad_s;
      Eigen::Map<Vec6>(di + 18).noalias() = pn.transpose() * dd.grad;
    }
  }

 private:
  const HamiltonianModel& model_;
  const IntegrationSettings& settings_;
  const Layout& layout_;
  double tau0_;
  double p_tau_;
  int order_;
  mutable double gamma_hint_ = 0.0;
};

class Rk4 {
 public:
  explicit Rk4(int n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  void step(const RayRhs& rhs, double t, double h, State& y) {
    rhs(t, y, k1_);
    tmp_ = y + 0.5 * h * k1_;
    rhs(t + 0.5 * h, tmp_, k2_);
    tmp_ = y + 0.5 * h * k2_;
    rhs(t + 0.5 * h, tmp_, k3_);
    tmp_ = y + h * k3_;
    rhs(t + h, tmp_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  State k1_, k2_, k3_, k4_, tmp_;
};

RayState make_sample(const HamiltonianModel& model, const RayRhs& rhs, const Layout& layout,
                     double t, const State& y) {
  RayState s;
  s.tau_nat = t;
  s.f = rhs.phase_point(t, y);
  s.phase = y(Layout::phase);
  s.arclen = y(Layout::arclen);
  s.sigma = y(Layout::sigma);
  s.T_diss = y(Layout::diss);
  s.H = model.hamiltonian(s.f);
  if (layout.p_sigma >= 0) {
    s.P_sigma = ConstMatMap(y.data() + layout.p_sigma);
    s.P_nat = ConstMatMap(y.data() + layout.p_nat);
  }
  if (layout.tensor >= 0) {
    Tensor6 t6;
    std::copy_n(y.data() + layout.tensor, Tensor6::size(), t6.data());
    s.Ptensor = t6;
  }
  if (layout.interior >= 0) {
    const double* di = y.data() + layout.interior;
    s.integrals.phase = Eigen::Map<const Vec6>(di);
    s.integrals.arclen = Eigen::Map<const Vec6>(di + 6);
    s.integrals.inv_clock = Eigen::Map<const Vec6>(di + 12);
    s.integrals.diss = Eigen::Map<const Vec6>(di + 18);
  }
  return s;
}

}  // namespace

DissipationDensity dissipation_density(const HamiltonianModel& model, const HamiltonianEval& ev,
                                       const Vec6& f, bool with_grad) {
  DissipationDensity out;
  const double c = ev.grad(idx::p_tau);
  const double inv = 1.0 / c;
  const double p_tau = f(idx::p_tau);
  const Vec2 r(f(idx::x), f(idx::y));
  const Vec2 p(f(idx::p_x), f(idx::p_y));
  const Vec2 gh = model.medium().grad_h();
  const Vec2 ratio = ev.ratio.s * gh;
  const double lt = model.lambda_tilde(p_tau, r);
  const double n = p.dot(ratio) + lt;
  out.value = n * inv;
  if (!with_grad) return out;

  const double pg = p.dot(gh);
  const Vec3 glt = model.lambda_tilde_gradient(p_tau, r);
  Vec6 grad_n = Vec6::Zero();
  grad_n(idx::x) = pg * ev.ratio.ds_dh * gh.x() + glt(0);
  grad_n(idx::y) = pg * ev.ratio.ds_dh * gh.y() + glt(1);
  grad_n(idx::p_tau) = pg * ev.ratio.ds_dp + glt(2);
  grad_n(idx::p_x) = ratio.x();
  grad_n(idx::p_y) = ratio.y();
  const Vec6 grad_c = ev.hess.row(idx::p_tau).transpose();
  out.grad = grad_n * inv - n * inv * inv * grad_c;
  return out;
}

std::optional<std::size_t> RaySolution::find(double tau_nat) const {
  const double tol = 1e-9 * std::abs(settings.step);
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (std::abs(samples[i].tau_nat - tau_nat) <= tol) return i;
  return std::nullopt;
}

RaySolution integrate_ray(const HamiltonianModel& model, const SourceNode& start,
                          const IntegrationSettings& settings_in) {
  IntegrationSettings settings = settings_in;
  if (!(settings.step > 0.0)) throw ValidationError("run.step must be positive");
  if (settings.tensor || settings.interior) settings.propagators = true;
  if (settings.tau_end == 0.0) throw ValidationError("run.tau_end must be nonzero");
  const double dir = settings.tau_end > 0.0 ? 1.0 : -1.0;
  const double h = dir * settings.step;

  std::vector<double> checkpoints;
  for (double c : settings.checkpoints)
    if (dir * c > 0.0 && dir * c <= dir * settings.tau_end) checkpoints.push_back(c);
  checkpoints.push_back(settings.tau_end);
  std::sort(checkpoints.begin(), checkpoints.end(),
            [dir](double a, double b) { return dir * a < dir * b; });
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

  const Layout layout(settings);
  const double tau0 = start.f0(idx::tau);
  const double p_tau = start.f0(idx::p_tau);
  const RayRhs rhs(model, settings, layout, tau0, p_tau);

  State y = State::Zero(layout.size);
  y(Layout::x) = start.f0(idx::x);
  y(Layout::y) = start.f0(idx::y);
  y(Layout::px) = start.f0(idx::p_x);
  y(Layout::py) = start.f0(idx::p_y);
  y(Layout::phase) = start.phi0;
  if (layout.p_sigma >= 0) {
    MatMap(y.data() + layout.p_sigma).setIdentity();
    MatMap(y.data() + layout.p_nat).setIdentity();
  }

  RaySolution out;
  out.source = start;
  out.l = model.mode_index();
  out.alpha = model.alpha();
  out.settings = settings;
  out.H0 = model.hamiltonian(start.f0);
  out.samples.push_back(make_sample(model, rhs, layout, 0.0, y));

  Rk4 rk(layout.size);
  State partial(layout.size);
  const double tol = 1e-9 * settings.step;
  std::size_t n = 0;
  try {
    for (double c : checkpoints) {
      // Whole steps up to the checkpoint, then a short step off the grid if needed.
      while (dir * ((n + 1) * h) <= dir * c + tol) {
        rk.step(rhs, n * h, h, y);
        ++n;
        out.steps = n;
      }
      const double t_n = n * h;
      if (std::abs(c - t_n) <= tol) {
        out.samples.push_back(make_sample(model, rhs, layout, c, y));
      } else {
        partial = y;
        rk.step(rhs, t_n, c - t_n, partial);
        out.samples.push_back(make_sample(model, rhs, layout, c, partial));
      }
    }
  } catch (const CutoffReached& e) {
    out.truncated = true;
    out.truncation_tau = n * h;
    out.truncation_reason = e.reason;
  }
  return out;
}

namespace {

RaySolution remarch(const HamiltonianModel& model, const RaySolution& ray, bool tensor) {
  IntegrationSettings s = ray.settings;
  s.propagators = true;
  s.tensor = s.tensor || tensor;
  s.dissipation = true;
  return integrate_ray(model, ray.source, s);
}

}  // namespace

std::vector<PropagatorPair> integrate_propagator(const HamiltonianModel& model,
                                                 const RaySolution& ray) {
  const RaySolution& src = ray.settings.propagators ? ray : remarch(model, ray, false);
  std::vector<PropagatorPair> out;
  for (const RayState& s : src.samples) out.push_back({s.tau_nat, s.P_sigma, s.P_nat});
  return out;
}

std::vector<Tensor6> integrate_propagation_tensor(const HamiltonianModel& model,
                                                  const RaySolution& ray) {
  const RaySolution& src = ray.settings.tensor ? ray : remarch(model, ray, true);
  std::vector<Tensor6> out;
  for (const RayState& s : src.samples) out.push_back(*s.Ptensor);
  return out;
}

std::vector<double> dissipation_integral(const HamiltonianModel& model, const RaySolution& ray) {
  const RaySolution& src = ray.settings.dissipation ? ray : remarch(model, ray, false);
  std::vector<double> out;
  for (const RayState& s : src.samples) out.push_back(s.T_diss);
  return out;
}

}  // namespace modalray
