#include "modalray/verify.hpp"

#include "modalray/errors.hpp"
#include "modalray/modes.hpp"
#include "modalray/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace modalray {

namespace {

class Suite {
 public:
  Suite(std::vector<CheckResult>& out, std::string name) : out_(out), name_(std::move(name)) {}

  /// Passes when value <= tolerance; NaN fails.
  void at_most(const std::string& check, double value, double tolerance) {
    out_.push_back({name_, check, value, tolerance, value <= tolerance});
  }
  void holds(const std::string& check, bool ok, double value = 0.0) {
    out_.push_back({name_, check, value, 0.0, ok});
  }

 private:
  std::vector<CheckResult>& out_;
  std::string name_;
};

double rel_err(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

void environment_suite(const RunConfig& cfg, std::vector<CheckResult>& out) {
  Suite s(out, "environment");
  const MediumModel m = cfg.medium_model(cfg.medium.alpha.front());
  const Vec2 r(0.3, -0.7);
  const double h = m.depth(r);
  const double defect = std::abs(m.nu_squared(0.5 * h, r) - m.nu_sq_bar()) +
                        std::abs(m.nu_squared(std::nextafter(h, 2 * h), r)) +
                        std::abs(m.nu_squared(2.0 * h, r));
  s.at_most("nu_squared_piecewise", defect, 0.0);
  const Vec2 r1(3.0, -2.0), r2(-1.0, 5.0);
  const double h0 = m.depth(Vec2::Zero());
  const double aff = std::abs((m.depth(r1 + r2) - h0) - (m.depth(r1) - h0) - (m.depth(r2) - h0));
  s.at_most("depth_affine", aff, 1e-12 * h0);
}

void modes_suite(const RunConfig& cfg, std::vector<CheckResult>& out) {
  Suite s(out, "modes");
  const HamiltonianModel model = cfg.hamiltonian_model(cfg.medium.alpha.front());
  const RingSource source = cfg.source_model(model);
  const double mu1 = cfg.source.mu1.front();
  const Vec6 f0 = source.point(Vec2(mu1, cfg.source.mu2.min));
  const Vec2 r(f0(idx::x), f0(idx::y));
  const double h = model.medium().depth(r);
  const double w_sq = duct_strength(model.medium(), source.p_tau(mu1), r);
  const int count = mode_count(std::sqrt(w_sq));
  s.holds("trapped_modes_exist", count > 0, count);

  double residual = 0.0, pythagoras = 0.0, closed = 0.0, monotone = 0.0, reduction = 0.0,
         order_ratio = 0.0, transmission = 0.0;
  for (int l = 0; l < count; ++l) {
    for (double alpha : {0.0, 0.1, 0.5, 1.0, cfg.medium.alpha.front()}) {
      const VerticalMode m = solve_mode(l, alpha, w_sq, h);
      residual = std::max(residual, m.residual);
      pythagoras = std::max(pythagoras, std::abs(m.k * m.k + m.gamma * m.gamma - w_sq) / w_sq);
    }
    const VerticalMode m0 = solve_mode(l, 0.0, w_sq, h);
    const double q = cutoff_wavenumber(l);
    closed = std::max({closed, std::abs(m0.gamma - q) / q,
                       std::abs(m0.k * m0.k - (w_sq - q * q)) / (w_sq - q * q)});

    double g_prev = 0.0, k_prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20; ++i) {
      const VerticalMode m = solve_mode(l, 0.05 * i, w_sq, h);
      monotone = std::max({monotone, g_prev - m.gamma, m.k - k_prev});
      g_prev = m.gamma, k_prev = m.k;
    }

    const VerticalMode m1 = solve_mode(l, 1.0, w_sq, h);
    reduction = std::max({reduction, std::abs(biorth_inner(m1, 1.0) - 1.0),
                          biorth_gradient_ratio(m1, 1.0, Vec2(0.3, -0.1), Vec2(0.7, 0.2)).cwiseAbs().maxCoeff()});

    double prev_err = 0.0;
    for (double alpha : {0.2, 0.1, 0.05}) {
      const double err = std::abs(std::sqrt(approx_eigenvalue(l, w_sq, alpha)) - solve_mode(l, alpha, w_sq, h).k);
      if (prev_err > 0.0) order_ratio = std::max(order_ratio, err / prev_err);
      prev_err = err;
    }

    const double alpha = cfg.medium.alpha.front() > 0.0 ? cfg.medium.alpha.front() : 0.5;
    const VerticalMode ma = solve_mode(l, alpha, w_sq, h);
    const double jump = std::abs(eval_mode(h, 1.0, ma, h) - eval_mode(std::nextafter(h, 2 * h), 1.0, ma, h)) /
                        std::abs(eval_mode(h, 1.0, ma, h));
    const double slope = std::abs(ma.gamma / std::tan(ma.gamma) + alpha * ma.k) / (alpha * ma.k);
    transmission = std::max({transmission, jump, slope});
  }
  s.at_most("dispersion_residual", residual, cfg.run.tolerances.residual);
  s.at_most("k_gamma_pythagoras", pythagoras, 1e-12);
  s.at_most("alpha0_closed_form", closed, 1e-12);
  s.at_most("monotone_in_alpha", monotone, 0.0);
  s.at_most("self_adjoint_reduction", reduction, 1e-14);
  s.at_most("first_order_halving_ratio", order_ratio, 1.0 / 1.8);
  s.at_most("transmission_conditions", transmission, 1e-10);
}

void hamiltonian_suite(const RunConfig& cfg, std::vector<CheckResult>& out) {
  Suite s(out, "hamiltonian");
  const HamiltonianModel model = cfg.hamiltonian_model(cfg.medium.alpha.front());
  RingSource::Params params;
  params.freq0 = cfg.source.freq0;
  params.dfreq = cfg.source.dfreq;
  params.radius = cfg.source.radius;
  const RingSource source(model, params);
  const Vec6 f = source.point(Vec2(cfg.source.mu1.front(), 0.4));

  s.at_most("on_shell_zero", std::abs(model.hamiltonian(f)), cfg.run.tolerances.hamiltonian);
  const double v = model.group_velocity(f).norm();
  s.holds("group_speed_in_unit_interval", v > 0.0 && v < 1.0, v);

  const HamiltonianEval ev = model.evaluate(f, 3);
  Vec6 g_fd;
  Mat6 h_fd;
  Tensor6 t_fd;
  for (int i = 0; i < 6; ++i) {
    const double d = 1e-5 * std::max(1.0, std::abs(f(i)));
    Vec6 fp = f, fm = f;
    fp(i) += d, fm(i) -= d;
    g_fd(i) = (model.hamiltonian(fp) - model.hamiltonian(fm)) / (2 * d);
    h_fd.col(i) = (model.grad(fp) - model.grad(fm)) / (2 * d);
    const Mat6 dh = (model.hessian(fp) - model.hessian(fm)) / (2 * d);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) t_fd(a, b, i) = dh(a, b);
  }
  s.at_most("grad_vs_fd", rel_err(ev.grad, g_fd), 1e-6);
  s.at_most("hessian_vs_fd", rel_err(ev.hess, h_fd), 1e-5);
  s.at_most("hessian_symmetry", (ev.hess - ev.hess.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  double t_err = 0.0, t_scale = 0.0;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      for (int c = 0; c < 6; ++c) {
        t_err = std::max(t_err, std::abs(ev.third(a, b, c) - t_fd(a, b, c)));
        t_scale = std::max(t_scale, std::abs(t_fd(a, b, c)));
      }
  s.at_most("third_vs_fd", t_err / t_scale, 1e-3);
}

struct VerifyFan {
  std::vector<RaySolution> rays;
  std::vector<std::vector<AmplitudeSample>> amps;
};

VerifyFan trace(const RunConfig& cfg, const HamiltonianModel& model, ShellMode shell, int count,
                const IntegrationSettings& settings, unsigned threads) {
  RingSource::Params params;
  params.freq0 = cfg.source.freq0;
  params.dfreq = cfg.source.dfreq;
  params.radius = cfg.source.radius;
  params.shell = shell;
  const RingSource source(model, params);
  const auto mu2 = mu2_grid(count, cfg.source.mu2.min, cfg.source.mu2.max, cfg.source.mu2.endpoint);
  VerifyFan fan;
  fan.rays.resize(mu2.size());
  fan.amps.resize(mu2.size());
  parallel_for(mu2.size(), threads, [&](std::size_t j) {
    const SourceNode node = source.node(Vec2(cfg.source.mu1.front(), mu2[j]));
    fan.rays[j] = integrate_ray(model, node, settings);
    if (settings.propagators) fan.amps[j] = amplitude_track(model, fan.rays[j], cfg.run.caustic_threshold);
  });
  return fan;
}

void dynamics_and_fronts_suites(const RunConfig& cfg, unsigned threads, std::vector<CheckResult>& out) {
  Suite dyn(out, "dynamics");
  Suite fr(out, "fronts");
  const HamiltonianModel model = cfg.hamiltonian_model(cfg.medium.alpha.front());
  const double tau_end = std::min(cfg.run.tau_end, 10.0);
  const double tau_front = std::min(5.0, tau_end);

  IntegrationSettings settings = cfg.integration_settings();
  settings.tau_end = tau_end;
  settings.checkpoints = {0.25 * tau_end, tau_front, tau_end};
  settings.interior = true;
  settings.propagators = true;
  const VerifyFan fan = trace(cfg, model, ShellMode::strict, 12, settings, threads);

  IntegrationSettings plain = settings;
  plain.propagators = plain.interior = false;
  const VerifyFan literal = trace(cfg, model, ShellMode::literal, 4, plain, threads);

  double drift_strict = 0.0, drift_literal = 0.0, clock = 0.0, sympl = 0.0, det = 0.0, phase = 0.0;
  for (const RaySolution& ray : fan.rays)
    for (const RayState& st : ray.samples) {
      drift_strict = std::max(drift_strict, std::abs(st.H));
      clock = std::max({clock, std::abs(st.f(idx::tau) - (ray.source.f0(idx::tau) + st.tau_nat)),
                        std::abs(st.f(idx::p_tau) - ray.source.f0(idx::p_tau))});
      const Mat6 J = symplectic_unit();
      sympl = std::max(sympl, (st.P_sigma.transpose() * J * st.P_sigma - J).cwiseAbs().maxCoeff());
      det = std::max(det, std::abs(st.P_sigma.determinant() - 1.0));
      const HamiltonianEval ev = model.evaluate(st.f, 1);
      const double p_tau = st.f(idx::p_tau);
      const double c = ev.grad(idx::p_tau);
      const double nat = p_tau - st.f.tail<2>().squaredNorm() / c;
      const double sig = p_tau * (0.5 * ev.jet.d1(2) - ev.jet.value / p_tau) / c;
      phase = std::max(phase, std::abs(nat - sig) / std::abs(sig));
    }
  for (const RaySolution& ray : literal.rays)
    for (const RayState& st : ray.samples) drift_literal = std::max(drift_literal, std::abs(st.H - ray.H0));

  dyn.at_most("hamiltonian_conservation_strict", drift_strict, cfg.run.tolerances.hamiltonian);
  dyn.at_most("hamiltonian_conservation_literal", drift_literal, cfg.run.tolerances.hamiltonian);
  dyn.at_most("exact_time_and_p_tau", clock, 4 * std::numeric_limits<double>::epsilon() *
                                                 (std::abs(fan.rays.front().source.f0(idx::tau)) + tau_end));
  dyn.at_most("symplectic_defect", sympl, cfg.run.tolerances.symplectic);
  dyn.at_most("det_P_sigma_minus_1", det, cfg.run.tolerances.symplectic);
  dyn.at_most("phase_rate_consistency", phase, 1e-8);

  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fan.rays.size(); ++i)
    for (std::size_t j = i + 1; j < fan.rays.size(); ++j)
      for (std::size_t k = 1; k < fan.rays[i].samples.size() && k < fan.rays[j].samples.size(); ++k)
        min_sep = std::min(min_sep, (fan.rays[i].samples[k].f - fan.rays[j].samples[k].f).norm());
  dyn.holds("rays_distinct_in_phase_space", min_sep > 0.0, min_sep);

  {
    const RaySolution& fwd = fan.rays.front();
    SourceNode back_start = fwd.source;
    back_start.f0 = fwd.samples.back().f;
    IntegrationSettings back = plain;
    back.tau_end = -tau_end;
    back.checkpoints.clear();
    const RaySolution rev = integrate_ray(model, back_start, back);
    Vec6 diff = rev.samples.back().f - fwd.source.f0;
    diff(idx::tau) = 0.0;  // tau0 is reset analytically by the reversed march
    dyn.at_most("tau_reversal", rev.truncated ? 1.0 : diff.cwiseAbs().maxCoeff(), 1e-7);
  }

  double left_inv = 0.0, duality = 0.0, positivity_bad = 0.0, identity = 0.0;
  RayFan rf{fan.rays, settings.checkpoints};
  for (std::size_t j = 0; j < fan.rays.size(); ++j) {
    const RaySolution& ray = fan.rays[j];
    for (std::size_t i = 1; i < ray.samples.size(); ++i) {
      const AmplitudeSample& a = fan.amps[j][i];
      if (a.validity != Validity::ok) continue;
      if (!(a.value > 0.0) || !std::isfinite(a.value)) positivity_bad += 1.0;
      const Mat63 fr = ray_jacobian(model, ray, i, Clock::natural);
      left_inv = std::max(left_inv, (pseudo_inverse(fr) * fr - Mat3::Identity()).cwiseAbs().maxCoeff());
      if (std::abs(ray.samples[i].tau_nat - tau_front) < 1e-12) {
        const Vec3 g = observable_gradient(ray_gradients(model, ray, i, RayQuantity::phase), fr);
        const Vec3 p(ray.samples[i].f(idx::p_tau), ray.samples[i].f(idx::p_x), ray.samples[i].f(idx::p_y));
        duality = std::max(duality, (g - p).norm() / p.norm());
      }
    }
  }
  const Front front = extract_front(model, rf, FrontQuantity::tau_nat, tau_front, cfg.run.caustic_threshold);
  for (const FrontPoint& p : front.points)
    for (const RaySolution& ray : fan.rays)
      if (ray.source.mu == p.mu) {
        const RayState& st = ray.samples[*ray.find(tau_front)];
        identity = std::max(identity, (p.r - Vec3(st.f(idx::tau), st.f(idx::x), st.f(idx::y))).cwiseAbs().maxCoeff());
      }
  fr.at_most("left_inverse_identity", left_inv, 1e-10);
  fr.at_most("phase_momentum_duality", duality, 1e-3);
  fr.at_most("amplitude_positive_precaustic", positivity_bad, 0.0);
  fr.at_most("level_front_identity", front.points.empty() ? 1.0 : identity, 1e-12);

  const HamiltonianModel adjoint(cfg.medium_model(1.0), cfg.mode.l);
  IntegrationSettings sa = settings;
  sa.interior = false;
  const VerifyFan fan1 = trace(cfg, adjoint, ShellMode::strict, 4, sa, threads);
  double diss = 0.0;
  for (std::size_t j = 0; j < fan1.rays.size(); ++j)
    for (std::size_t i = 0; i < fan1.rays[j].samples.size(); ++i) {
      diss = std::max(diss, std::abs(fan1.rays[j].samples[i].T_diss));
      const AmplitudeSample& a = fan1.amps[j][i];
      if (a.validity == Validity::ok) diss = std::max(diss, std::abs(a.value - a.spreading));
    }
  fr.at_most("self_adjoint_no_dissipation", diss, 0.0);
}

void cli_suite(const RunConfig& cfg, std::vector<CheckResult>& out) {
  Suite s(out, "cli");
  const std::string canon = canonical_string(cfg);
  s.holds("canonical_round_trip", canonical_string(config_from_json(canonical_json(cfg))) == canon);
  bool named = false;
  try {
    nlohmann::json doc = canonical_json(cfg);
    apply_override(doc, "medium.alpha=1.5");
    config_from_json(doc);
  } catch (const ValidationError& e) {
    named = std::string(e.what()).find("medium.alpha") != std::string::npos;
  }
  s.holds("alpha_range_rejected", named);
}

}  // namespace

std::vector<CheckResult> run_invariants(const RunConfig& cfg, unsigned threads) {
  threads = resolve_threads(threads);
  std::vector<CheckResult> out;
  environment_suite(cfg, out);
  modes_suite(cfg, out);
  hamiltonian_suite(cfg, out);
  dynamics_and_fronts_suites(cfg, threads, out);
  cli_suite(cfg, out);
  return out;
}

}  // namespace modalray
