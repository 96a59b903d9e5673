#include "modalray/source.hpp"

#include "modalray/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <sstream>

namespace modalray {

ShellMode parse_shell_mode(const std::string& s) {
  if (s == "strict") return ShellMode::strict;
  if (s == "literal") return ShellMode::literal;
  throw ValidationError("source.shell_mode must be \"strict\" or \"literal\", got \"" + s + "\"");
}

std::string to_string(ShellMode m) { return m == ShellMode::strict ? "strict" : "literal"; }

double shell_momentum(const HamiltonianModel& model, double p_tau, const Vec2& r, ShellMode mode) {
  const double lam = model.lambda(p_tau, r);
  return mode == ShellMode::strict ? std::sqrt(p_tau * p_tau + lam) : std::sqrt(lam);
}

Vec2 project_to_shell(const HamiltonianModel& model, const Vec2& direction, double p_tau,
                      const Vec2& r) {
  return shell_momentum(model, p_tau, r, ShellMode::strict) * direction;
}

SourceNode SourceManifold::node(const Vec2& mu) const {
  SourceNode n;
  n.mu = mu;
  n.f0 = point(mu);
  n.phi0 = phase(mu);
  n.amp0 = amplitude(mu);

  const double d = fd_step;
  for (int a = 0; a < 2; ++a) {
    Vec2 e = Vec2::Zero();
    e(a) = d;
    n.df0.col(a) = (point(mu + e) - point(mu - e)) / (2 * d);
    n.dphi0(a) = (phase(mu + e) - phase(mu - e)) / (2 * d);
    n.damp0(a) = (amplitude(mu + e) - amplitude(mu - e)) / (2 * d);
  }

  const double d2 = fd_step2;
  for (int a = 0; a < 2; ++a) {
    Vec2 ea = Vec2::Zero();
    ea(a) = d2;
    n.d2f0[a][a] = (point(mu + ea) - 2 * n.f0 + point(mu - ea)) / (d2 * d2);
    for (int b = a + 1; b < 2; ++b) {
      Vec2 eb = Vec2::Zero();
      eb(b) = d2;
      n.d2f0[a][b] = (point(mu + ea + eb) - point(mu + ea - eb) - point(mu - ea + eb) +
                      point(mu - ea - eb)) /
                     (4 * d2 * d2);
      n.d2f0[b][a] = n.d2f0[a][b];
    }
  }
  return n;
}

void SourceManifold::validate(const SourceNode& n, const HamiltonianModel& model,
                              ShellMode mode) const {
  std::ostringstream msg;
  msg.precision(17);
  msg << "source node mu = (" << n.mu.x() << ", " << n.mu.y() << "): ";

  const Vec3 p0 = n.f0.tail<3>();
  for (int a = 0; a < 2; ++a) {
    const double chain = p0.dot(n.df0.col(a).head<3>());
    const double scale = std::max({1.0, std::abs(chain), std::abs(n.dphi0(a))});
    if (std::abs(n.dphi0(a) - chain) > 1e-8 * scale) {
      msg << "d phi0 / d mu" << a + 1 << " = " << n.dphi0(a) << " but p0 . d r0 = " << chain;
      throw SourceError(msg.str());
    }
  }

  Eigen::Matrix<double, 3, 2> dr = n.df0.topRows<3>();
  const double smin = Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>>(dr).singularValues()(1);
  if (!(smin > 1e-10)) {
    msg << "d r0 / d mu is rank deficient (smallest singular value " << smin << ")";
    throw SourceError(msg.str());
  }

  const HamiltonianEval ev = model.evaluate(n.f0, 1);
  if (ev.grad.tail<3>().norm() == 0.0) {
    msg << "dH/dp vanishes";
    throw SourceError(msg.str());
  }
  if (mode == ShellMode::strict && std::abs(ev.value) > 1e-10) {
    msg << "H = " << ev.value << " off the zero shell";
    throw SourceError(msg.str());
  }
}

RingSource::RingSource(HamiltonianModel model, Params params)
    : model_(std::move(model)), params_(params) {
  if (!(params_.radius > 0.0)) throw ValidationError("source.radius must be positive");
  if (!(params_.freq0 > 0.0)) throw ValidationError("source.freq0 must be positive");
}

double RingSource::p_tau(double mu1) const {
  return -(2.0 * std::numbers::pi / model_.medium().c_bot()) *
         (params_.freq0 + params_.dfreq * mu1);
}

Vec6 RingSource::point(const Vec2& mu) const {
  const double pt = p_tau(mu.x());
  const Vec2 e(std::cos(mu.y()), std::sin(mu.y()));
  const Vec2 r0 = params_.radius * e;
  const Vec2 p = shell_momentum(model_, pt, r0, params_.shell) * e;
  Vec6 f;
  f << model_.medium().c_bot() * mu.x(), r0.x(), r0.y(), pt, p.x(), p.y();
  return f;
}

double RingSource::phase(const Vec2& mu) const {
  const double m1 = mu.x();
  return -2.0 * std::numbers::pi * (params_.freq0 * m1 + 0.5 * params_.dfreq * m1 * m1);
}

SourceNode RingSource::node(const Vec2& mu) const {
  if (params_.derivatives == SourceDerivatives::analytic) return analytic_node(mu);
  return SourceManifold::node(mu);
}

SourceNode RingSource::analytic_node(const Vec2& mu) const {
  const double pt = p_tau(mu.x());
  const double dp = -2.0 * std::numbers::pi * params_.dfreq / model_.medium().c_bot();
  const double R = params_.radius;
  const Vec2 e(std::cos(mu.y()), std::sin(mu.y()));
  const Vec2 e1(-e.y(), e.x());
  const Vec2 r0 = R * e, r1 = R * e1, r2 = -R * e;

  const LambdaJet jet = model_.lambda_jet(pt, r0, 2);
  const double strict = params_.shell == ShellMode::strict ? 1.0 : 0.0;
  const Vec2 lam_r = jet.d1.head<2>();
  const double lam_p = jet.d1(2);
  const Mat3& d2 = jet.d2;

  // rho^2 = Q(mu) and its derivatives.
  const double q = strict * pt * pt + jet.value;
  const double q1 = (2 * strict * pt + lam_p) * dp;
  const double q2 = lam_r.dot(r1);
  const double q11 = (2 * strict + d2(2, 2)) * dp * dp;
  const double q12 = d2.block<1, 2>(2, 0).dot(r1.transpose()) * dp;
  const double q22 = r1.dot(d2.topLeftCorner<2, 2>() * r1) + lam_r.dot(r2);

  const double rho = std::sqrt(q);
  const double rho1 = q1 / (2 * rho), rho2 = q2 / (2 * rho);
  const double rho3 = rho * rho * rho;
  const double rho11 = q11 / (2 * rho) - q1 * q1 / (4 * rho3);
  const double rho12 = q12 / (2 * rho) - q1 * q2 / (4 * rho3);
  const double rho22 = q22 / (2 * rho) - q2 * q2 / (4 * rho3);

  SourceNode n;
  n.mu = mu;
  const double c_bot = model_.medium().c_bot();
  n.f0 << c_bot * mu.x(), r0.x(), r0.y(), pt, rho * e.x(), rho * e.y();

  n.df0.col(0) << c_bot, 0.0, 0.0, dp, rho1 * e.x(), rho1 * e.y();
  const Vec2 dp2 = rho2 * e + rho * e1;
  n.df0.col(1) << 0.0, r1.x(), r1.y(), 0.0, dp2.x(), dp2.y();

  const Vec2 p11 = rho11 * e;
  const Vec2 p12 = rho12 * e + rho1 * e1;
  const Vec2 p22 = rho22 * e + 2 * rho2 * e1 - rho * e;
  n.d2f0[0][0] << 0.0, 0.0, 0.0, 0.0, p11.x(), p11.y();
  n.d2f0[0][1] << 0.0, 0.0, 0.0, 0.0, p12.x(), p12.y();
  n.d2f0[1][0] = n.d2f0[0][1];
  n.d2f0[1][1] << 0.0, r2.x(), r2.y(), 0.0, p22.x(), p22.y();

  n.phi0 = phase(mu);
  n.dphi0 << -2.0 * std::numbers::pi * (params_.freq0 + params_.dfreq * mu.x()), 0.0;
  n.amp0 = params_.amplitude;
  n.damp0.setZero();
  return n;
}

std::vector<double> mu2_grid(int count, double min, double max, bool endpoint) {
  if (count < 1) throw ValidationError("source.mu2.count must be at least 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = min;
    return out;
  }
  const double step = (max - min) / (endpoint ? count - 1 : count);
  for (int i = 0; i < count; ++i) out[i] = min + i * step;
  if (endpoint) out.back() = max;
  return out;
}

}  // namespace modalray
