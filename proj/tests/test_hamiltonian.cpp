#include "modalray/errors.hpp"
#include "modalray/hamiltonian.hpp"
#include "modalray/modes.hpp"
#include "modalray/source.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace modalray;

namespace {

constexpr double kPi = std::numbers::pi;
const double kPTau0 = -2 * kPi * 300 / 1700;

HamiltonianModel reference_model(double alpha, Vec2 grad_h = Vec2(1e-3, 0)) {
  return HamiltonianModel(MediumModel(1500, 1700, 10, grad_h, alpha), 1);
}

Vec6 on_shell_point(const HamiltonianModel& m, const Vec2& r, double angle) {
  const Vec2 p = project_to_shell(m, Vec2(std::cos(angle), std::sin(angle)), kPTau0, r);
  Vec6 f;
  f << 3.0, r.x(), r.y(), kPTau0, p.x(), p.y();
  return f;
}

double max_rel(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("hamiltonian") {
  TEST_CASE("zero level set and tau independence") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec6 f = on_shell_point(m, Vec2(0.4, -0.3), 0.7);
    CHECK(std::abs(m.hamiltonian(f)) < 1e-14);
    Vec6 g = f;
    g(idx::tau) += 123.0;
    CHECK(m.hamiltonian(g) == m.hamiltonian(f));
  }

  TEST_CASE("literal source momentum leaves H = p_tau^2 / 2") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec2 r(1.0, 0.0);
    const double pn = shell_momentum(m, kPTau0, r, ShellMode::literal);
    const VerticalMode mode = solve_eigenvalue(m.medium(), {1, kPTau0, r, 0.5});
    CHECK(pn == doctest::Approx(mode.k / m.medium().depth(r)).epsilon(1e-14));
    const double w_sq = m.medium().nu_sq_bar() * kPTau0 * kPTau0 * 100.0;
    const double gamma = oracle::dispersion_root(1, w_sq * std::pow(m.medium().depth(r) / 10.0, 2), 0.5);
    CHECK(pn == doctest::Approx(std::sqrt(w_sq * std::pow(m.medium().depth(r) / 10.0, 2) - gamma * gamma) /
                                m.medium().depth(r)).epsilon(1e-12));
    Vec6 f;
    f << 0, r.x(), r.y(), kPTau0, pn, 0;
    CHECK(m.hamiltonian(f) == doctest::Approx(0.5 * kPTau0 * kPTau0).epsilon(1e-13));
  }

  TEST_CASE("strict shell magnitude") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec2 r(1.0, 0.0);
    const double pn = shell_momentum(m, kPTau0, r, ShellMode::strict);
    CHECK(pn == doctest::Approx(std::sqrt(kPTau0 * kPTau0 + m.lambda(kPTau0, r))).epsilon(1e-15));
    const double h = m.medium().depth(r);
    const double w_sq = m.medium().nu_sq_bar() * kPTau0 * kPTau0 * h * h;
    const double gamma = oracle::dispersion_root(1, w_sq, 0.5);
    CHECK(pn == doctest::Approx(std::sqrt(kPTau0 * kPTau0 + (w_sq - gamma * gamma) / (h * h))).epsilon(1e-12));
  }

  TEST_CASE("gradient structure and finite differences") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec6 f = on_shell_point(m, Vec2(0.4, -0.3), 0.7);
    const Vec6 g = m.grad(f);
    CHECK(g(idx::tau) == 0.0);
    CHECK(g(idx::p_x) == -f(idx::p_x));
    CHECK(g(idx::p_y) == -f(idx::p_y));
    Vec6 fd1, fd2;
    for (int i = 0; i < 6; ++i) {
      for (auto [d, out] : {std::pair{1e-4, &fd1}, std::pair{5e-5, &fd2}}) {
        Vec6 fp = f, fm = f;
        fp(i) += d, fm(i) -= d;
        (*out)(i) = (m.hamiltonian(fp) - m.hamiltonian(fm)) / (2 * d);
      }
    }
    const Vec6 richardson = (4 * fd2 - fd1) / 3;
    CHECK(max_rel(g, richardson) < 1e-6);
    CHECK(max_rel(g, fd2) < 1e-6);

    const HamiltonianModel flat = reference_model(0.5, Vec2::Zero());
    const Vec6 gf = flat.grad(on_shell_point(flat, Vec2(0.4, -0.3), 0.7));
    CHECK(gf(idx::x) == 0.0);
    CHECK(gf(idx::y) == 0.0);
  }

  TEST_CASE("hessian structure and finite differences") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec6 f = on_shell_point(m, Vec2(0.4, -0.3), 0.7);
    const Mat6 h = m.hessian(f);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(h.row(idx::tau).isZero());
    CHECK(h.col(idx::tau).isZero());
    CHECK(h.block<2, 2>(idx::p_x, idx::p_x) == -Eigen::Matrix2d::Identity());
    Mat6 fd;
    for (int i = 0; i < 6; ++i) {
      const double d = 1e-5;
      Vec6 fp = f, fm = f;
      fp(i) += d, fm(i) -= d;
      fd.col(i) = (m.grad(fp) - m.grad(fm)) / (2 * d);
    }
    CHECK(max_rel(h, fd) < 1e-5);
  }

  TEST_CASE("third derivative structure and finite differences") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec6 f = on_shell_point(m, Vec2(0.4, -0.3), 0.7);
    const Tensor6 t = m.third_derivative(f);
    double sym = 0.0, pure_p = 0.0, err = 0.0, scale = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double d = 1e-4;
      Vec6 fp = f, fm = f;
      fp(i) += d, fm(i) -= d;
      const Mat6 dh = (m.hessian(fp) - m.hessian(fm)) / (2 * d);
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          err = std::max(err, std::abs(t(a, b, i) - dh(a, b)));
          scale = std::max(scale, std::abs(dh(a, b)));
          sym = std::max({sym, std::abs(t(a, b, i) - t(b, a, i)), std::abs(t(a, b, i) - t(i, b, a)),
                          std::abs(t(a, b, i) - t(a, i, b))});
          if (a >= 4 || b >= 4 || i >= 4) pure_p = std::max(pure_p, std::abs(t(a, b, i)));
        }
    }
    CHECK(sym <= 1e-8);
    CHECK(pure_p == 0.0);
    CHECK(err / scale < 1e-3);
  }

  TEST_CASE("alpha = 0 closed form for lambda and its derivatives") {
    const HamiltonianModel m = reference_model(0.0);
    const double nu = m.medium().nu_sq_bar();
    const double q_sq = std::pow(cutoff_wavenumber(1), 2);
    const Vec2 r(300.0, 2.0);
    const double h = m.medium().depth(r);
    const LambdaJet jet = m.lambda_jet(kPTau0, r, 3);
    CHECK(jet.value == doctest::Approx(nu * kPTau0 * kPTau0 - q_sq / (h * h)).epsilon(1e-13));
    CHECK(jet.d1(0) == doctest::Approx(2 * q_sq / std::pow(h, 3) * 1e-3).epsilon(1e-10));
    CHECK(jet.d1(1) == 0.0);
    CHECK(jet.d1(2) == doctest::Approx(2 * nu * kPTau0).epsilon(1e-12));
    CHECK(jet.d2(2, 2) == doctest::Approx(2 * nu).epsilon(1e-10));
    CHECK(jet.d2(0, 0) == doctest::Approx(-6 * q_sq / std::pow(h, 4) * 1e-6).epsilon(1e-8));
    CHECK(std::abs(jet.d2(0, 2)) < 1e-14);
    CHECK(jet.third(0, 0, 0) == doctest::Approx(24 * q_sq / std::pow(h, 5) * 1e-9).epsilon(1e-6));
    CHECK(std::abs(jet.third(2, 2, 2)) < 1e-12);
    CHECK(std::abs(jet.third(0, 2, 2)) < 1e-12);

    // Flat bottom: only p_tau enters, with zero third derivative.
    const HamiltonianModel flat = reference_model(0.0, Vec2::Zero());
    const Tensor6 t = flat.third_derivative(on_shell_point(flat, Vec2(0.3, 0.2), 0.1));
    CHECK(t.max_abs() < 1e-12);
  }

  TEST_CASE("finite-difference jet agrees with the implicit jet") {
    const MediumModel med(1500, 1700, 10, Vec2(1e-3, 0), 0.5);
    const HamiltonianModel exact(med, 1), fd(med, 1, {}, DerivativeSource::finite_difference);
    const Vec2 r(0.3, 0.4);
    const LambdaJet a = exact.lambda_jet(kPTau0, r, 3), b = fd.lambda_jet(kPTau0, r, 3);
    CHECK(a.value == b.value);
    CHECK(max_rel(a.d1, b.d1) < 1e-8);
    CHECK(max_rel(a.d2, b.d2) < 1e-5);
    CHECK(a.third(2, 2, 2) == doctest::Approx(b.third(2, 2, 2)).epsilon(1e-3));
  }

  TEST_CASE("group velocity") {
    const HamiltonianModel m = reference_model(0.5);
    const Vec6 f = on_shell_point(m, Vec2(0.4, -0.3), 0.7);
    const Vec2 v = m.group_velocity(f);
    const Vec2 p(f(idx::p_x), f(idx::p_y));
    CHECK(std::abs(v.x() * p.y() - v.y() * p.x()) < 1e-15);
    CHECK(v.norm() > 0.0);
    CHECK(v.norm() < 1.0);

    // alpha = 0: |v| = sqrt((1 + nu^2) p_tau^2 - q^2 / h^2) / ((1 + nu^2) |p_tau|).
    const HamiltonianModel m0 = reference_model(0.0, Vec2::Zero());
    const double nu = m0.medium().nu_sq_bar();
    const double q = cutoff_wavenumber(1);
    auto speed = [&](double pt) {
      Vec6 g = on_shell_point(m0, Vec2::Zero(), 0.0);
      g(idx::p_tau) = pt;
      g.tail<2>() = project_to_shell(m0, Vec2(1, 0), pt, Vec2::Zero());
      return m0.group_velocity(g).norm();
    };
    const double expected = std::sqrt((1 + nu) * kPTau0 * kPTau0 - q * q / 100) / ((1 + nu) * std::abs(kPTau0));
    CHECK(speed(kPTau0) == doctest::Approx(expected).epsilon(1e-13));
    const double pt_cut = -q / (10 * std::sqrt(nu));
    CHECK(speed(pt_cut * (1 + 1e-9)) == doctest::Approx(1 / (1 + nu)).epsilon(1e-4));
  }
}
