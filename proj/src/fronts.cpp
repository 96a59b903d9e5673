#include "modalray/fronts.hpp"

#include "modalray/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace modalray {

namespace {

constexpr double kRankFloor = 1e-12;

Mat3 top(const Mat63& m) { return m.topRows<3>(); }

double smallest_singular_value(const Mat63& m) {
  return Eigen::JacobiSVD<Mat63>(m).singularValues()(2);
}

const RayState& sample_at(const RaySolution& ray, std::size_t sample) {
  if (sample >= ray.samples.size()) {
    std::ostringstream msg;
    msg << "sample " << sample << " not available (" << ray.samples.size() << " stored)";
    throw RankDeficient(msg.str());
  }
  return ray.samples[sample];
}

Mat63 with_flow_column(const Vec6& flow, const Mat6& p, const Mat62& df0) {
  Mat63 out;
  out.col(0) = flow;
  out.rightCols<2>() = p * df0;
  return out;
}

}  // namespace

std::string to_string(Validity v) {
  switch (v) {
    case Validity::ok: return "ok";
    case Validity::near_caustic: return "near_caustic";
    case Validity::cutoff: return "cutoff";
  }
  return "unknown";
}

Mat63 source_jacobian(const HamiltonianModel& model, const SourceNode& node, Clock clock) {
  const HamiltonianEval ev = model.evaluate(node.f0, 1);
  Vec6 flow = apply_j(ev.grad);
  if (clock == Clock::natural) flow /= ev.grad(idx::p_tau);
  return with_flow_column(flow, Mat6::Identity(), node.df0);
}

Mat63 ray_jacobian(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                   Clock clock) {
  const RayState& s = sample_at(ray, sample);
  if (!ray.settings.propagators) throw RankDeficient("ray was integrated without propagators");
  const HamiltonianEval ev = model.evaluate(s.f, 1);
  Vec6 flow = apply_j(ev.grad);
  const Mat6& p = clock == Clock::sigma ? s.P_sigma : s.P_nat;
  if (clock == Clock::natural) flow /= ev.grad(idx::p_tau);
  const Mat63 out = with_flow_column(flow, p, ray.source.df0);
  const double smin = smallest_singular_value(out);
  if (!(smin >= kRankFloor)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "f_r has smallest singular value " << smin << " at tau_nat = " << s.tau_nat;
    throw RankDeficient(msg.str());
  }
  return out;
}

Mat36 pseudo_inverse(const Mat63& f_r) {
  const double smin = smallest_singular_value(f_r);
  if (!(smin >= kRankFloor)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "smallest singular value " << smin;
    throw RankDeficient(msg.str());
  }
  const Mat3 gram = f_r.transpose() * f_r;
  return gram.ldlt().solve(f_r.transpose());
}

AmplitudeSample amplitude_sample(const HamiltonianModel& model, const RaySolution& ray,
                                 std::size_t sample, double caustic_threshold) {
  const RayState& s = sample_at(ray, sample);
  if (!ray.settings.propagators) throw RankDeficient("ray was integrated without propagators");
  AmplitudeSample out;
  const HamiltonianEval ev = model.evaluate(s.f, 1);
  out.det = top(with_flow_column(apply_j(ev.grad), s.P_sigma, ray.source.df0)).determinant();
  out.det0 = top(source_jacobian(model, ray.source, Clock::sigma)).determinant();
  const double ratio = out.det0 / out.det;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    out.validity = Validity::near_caustic;
    out.spreading = out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.spreading = ray.source.amp0 * std::sqrt(ratio);
  out.value = out.spreading * std::exp(s.T_diss);
  if (std::abs(out.det) < caustic_threshold * std::abs(out.det0)) out.validity = Validity::near_caustic;
  return out;
}

double amplitude(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                 double caustic_threshold) {
  const AmplitudeSample a = amplitude_sample(model, ray, sample, caustic_threshold);
  if (std::isnan(a.value)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "determinant ratio " << a.det0 << " / " << a.det << " is not positive";
    throw CausticCrossing(msg.str());
  }
  return a.value;
}

std::vector<AmplitudeSample> amplitude_track(const HamiltonianModel& model, const RaySolution& ray,
                                             double caustic_threshold) {
  std::vector<AmplitudeSample> out;
  bool crossed = false;
  for (std::size_t i = 0; i < ray.samples.size(); ++i) {
    AmplitudeSample a = amplitude_sample(model, ray, i, caustic_threshold);
    if (std::isnan(a.value)) crossed = true;
    if (crossed) a.validity = Validity::near_caustic;
    out.push_back(a);
  }
  return out;
}

Vec3 ray_gradients(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                   RayQuantity which) {
  const RayState& s = sample_at(ray, sample);
  const Mat62& df0 = ray.source.df0;
  Vec3 out = Vec3::Zero();
  if (which == RayQuantity::tau_nat) {
    out(0) = 1.0;
    return out;
  }
  if (which == RayQuantity::tau) {
    out(0) = 1.0;
    out.tail<2>() = df0.row(idx::tau).transpose();
    return out;
  }
  if (!ray.settings.interior) throw RankDeficient("ray was integrated without interior integrals");

  HamiltonianEval ev = model.evaluate(s.f, 1, which == RayQuantity::T_diss);
  const double c = ev.grad(idx::p_tau);
  const Vec2 p(s.f(idx::p_x), s.f(idx::p_y));
  switch (which) {
    case RayQuantity::arclen:
      out(0) = p.norm() / std::abs(c);
      out.tail<2>() = df0.transpose() * s.integrals.arclen;
      break;
    case RayQuantity::phase:
      out(0) = s.f(idx::p_tau) - p.squaredNorm() / c;
      out.tail<2>() = ray.source.dphi0 + s.tau_nat * df0.row(idx::p_tau).transpose() +
                      df0.transpose() * s.integrals.phase;
      break;
    case RayQuantity::sigma:
      out(0) = 1.0 / c;
      out.tail<2>() = df0.transpose() * s.integrals.inv_clock;
      break;
    case RayQuantity::T_diss:
      out(0) = dissipation_density(model, ev, s.f, false).value;
      out.tail<2>() = df0.transpose() * s.integrals.diss;
      break;
    default:
      break;
  }
  return out;
}

Vec2 interior_gradient(const HamiltonianModel&, const RaySolution& ray, std::size_t sample,
                       const std::function<double(const Vec6&)>& G) {
  sample_at(ray, sample);
  if (!ray.settings.propagators) throw RankDeficient("ray was integrated without propagators");
  auto grad_g = [&](const Vec6& f) {
    Vec6 g;
    for (int i = 0; i < 6; ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(f(i)));
      Vec6 fp = f, fm = f;
      fp(i) += step;
      fm(i) -= step;
      g(i) = (G(fp) - G(fm)) / (2 * step);
    }
    return g;
  };
  Vec6 integral = Vec6::Zero();
  Vec6 prev = ray.samples[0].P_nat.transpose() * grad_g(ray.samples[0].f);
  for (std::size_t i = 1; i <= sample; ++i) {
    const RayState& s = ray.samples[i];
    const Vec6 cur = s.P_nat.transpose() * grad_g(s.f);
    integral += 0.5 * (s.tau_nat - ray.samples[i - 1].tau_nat) * (prev + cur);
    prev = cur;
  }
  return ray.source.df0.transpose() * integral;
}

Vec3 amplitude_gradient(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample) {
  const RayState& s = sample_at(ray, sample);
  if (!ray.settings.tensor || !ray.settings.interior)
    throw RankDeficient("amplitude gradient needs the propagation tensor and interior integrals");
  const SourceNode& src = ray.source;
  const Mat6 j = symplectic_unit();

  const HamiltonianEval ev0 = model.evaluate(src.f0, 2);
  const HamiltonianEval ev = model.evaluate(s.f, 2, true);
  const Mat63 f0 = with_flow_column(apply_j(ev0.grad), Mat6::Identity(), src.df0);
  const Mat63 f = with_flow_column(apply_j(ev.grad), s.P_sigma, src.df0);
  const Mat3 m = top(f), m0 = top(f0);
  const auto lu = m.partialPivLu();
  const auto lu0 = m0.partialPivLu();

  const double a = amplitude(model, ray, sample);
  const double c = ev.grad(idx::p_tau);
  const double dlnd_dsigma = lu.solve(top(j * ev.hess * f)).trace();

  Vec3 out;
  out(0) = a * (dissipation_density(model, ev, s.f, false).value - 0.5 * dlnd_dsigma / c);
  for (int k = 0; k < 2; ++k) {
    const Vec6 dfk = src.df0.col(k);
    Mat63 df0_k;
    df0_k.col(0) = j * ev0.hess * dfk;
    df0_k.col(1) = src.d2f0[k][0];
    df0_k.col(2) = src.d2f0[k][1];
    const Mat63 df_k = s.Ptensor->contract_last(dfk) * f0 + s.P_sigma * df0_k;
    const double dlnd = lu.solve(top(df_k)).trace() + dfk.dot(s.integrals.inv_clock) * dlnd_dsigma;
    const double dlnd0 = lu0.solve(top(df0_k)).trace();
    out(k + 1) = a * (src.damp0(k) / src.amp0 + dfk.dot(s.integrals.diss) - 0.5 * (dlnd - dlnd0));
  }
  return out;
}

Vec3 observable_gradient_coordinate(const Vec3& ray_grad, const Mat63& f_r) {
  const Mat3 r = top(f_r);
  const auto lu = r.transpose().fullPivLu();
  if (!lu.isInvertible()) throw RankDeficient("I_r f_r is singular");
  return lu.solve(ray_grad);
}

Vec3 observable_gradient(const Vec3& ray_grad, const Mat63& f_r) {
  const Vec6 g = pseudo_inverse(f_r).transpose() * ray_grad;
  return g.head<3>();
}

FrontQuantity parse_front_quantity(const std::string& s) {
  if (s == "tau_nat") return FrontQuantity::tau_nat;
  if (s == "tau") return FrontQuantity::tau;
  if (s == "phase") return FrontQuantity::phase;
  if (s == "amplitude") return FrontQuantity::amplitude;
  if (s == "arclen") return FrontQuantity::arclen;
  if (s == "T_diss") return FrontQuantity::T_diss;
  throw ValidationError("unknown quantity \"" + s + "\"");
}

std::string to_string(FrontQuantity q) {
  switch (q) {
    case FrontQuantity::tau_nat: return "tau_nat";
    case FrontQuantity::tau: return "tau";
    case FrontQuantity::phase: return "phase";
    case FrontQuantity::amplitude: return "amplitude";
    case FrontQuantity::arclen: return "arclen";
    case FrontQuantity::T_diss: return "T_diss";
  }
  return "unknown";
}

Front extract_front(const HamiltonianModel& model, const RayFan& fan, FrontQuantity quantity,
                    double level, double caustic_threshold) {
  std::vector<std::size_t> order(fan.rays.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Vec2& ma = fan.rays[a].source.mu;
    const Vec2& mb = fan.rays[b].source.mu;
    return ma.x() != mb.x() ? ma.x() < mb.x() : ma.y() < mb.y();
  });

  Front out;
  bool gap = false;
  double last_mu1 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ri : order) {
    const RaySolution& ray = fan.rays[ri];
    if (ray.source.mu.x() != last_mu1) gap = true;
    last_mu1 = ray.source.mu.x();

    std::vector<AmplitudeSample> amps;
    if (quantity == FrontQuantity::amplitude || ray.settings.propagators)
      amps = amplitude_track(model, ray, caustic_threshold);
    auto value = [&](std::size_t i) {
      const RayState& s = ray.samples[i];
      switch (quantity) {
        case FrontQuantity::tau_nat: return s.tau_nat;
        case FrontQuantity::tau: return s.f(idx::tau);
        case FrontQuantity::phase: return s.phase;
        case FrontQuantity::amplitude: return amps[i].value;
        case FrontQuantity::arclen: return s.arclen;
        case FrontQuantity::T_diss: return s.T_diss;
      }
      return 0.0;
    };
    auto validity = [&](std::size_t i) { return amps.empty() ? Validity::ok : amps[i].validity; };

    bool found = false;
    for (std::size_t i = 0; i < ray.samples.size() && !found; ++i) {
      const double gi = value(i);
      if (gi == level) {
        FrontPoint p;
        p.mu = ray.source.mu;
        p.tau_nat = ray.samples[i].tau_nat;
        p.r = ray.samples[i].f.head<3>();
        p.value = gi;
        p.validity = validity(i);
        p.gap = gap;
        out.points.push_back(p);
        found = true;
        break;
      }
      if (i + 1 == ray.samples.size()) break;
      const double gj = value(i + 1);
      if (!std::isfinite(gi) || !std::isfinite(gj)) continue;
      if ((gi - level) * (gj - level) < 0.0) {
        const double w = (level - gi) / (gj - gi);
        const RayState& a = ray.samples[i];
        const RayState& b = ray.samples[i + 1];
        FrontPoint p;
        p.mu = ray.source.mu;
        p.tau_nat = a.tau_nat + w * (b.tau_nat - a.tau_nat);
        p.r = a.f.head<3>() + w * (b.f.head<3>() - a.f.head<3>());
        p.value = level;
        p.validity = validity(i) == Validity::ok ? validity(i + 1) : validity(i);
        p.gap = gap;
        out.points.push_back(p);
        found = true;
      }
    }
    if (found) {
      gap = false;
    } else {
      out.level_not_reached.push_back(ri);
      gap = true;
    }
  }
  return out;
}

}  // namespace modalray
