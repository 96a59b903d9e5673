#include "modalray/dynamics.hpp"
#include "modalray/errors.hpp"
#include "modalray/modes.hpp"
#include "modalray/source.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace modalray;

namespace {

constexpr double kPi = std::numbers::pi;

HamiltonianModel model_for(double alpha, Vec2 grad_h = Vec2(1e-3, 0)) {
  return HamiltonianModel(MediumModel(1500, 1700, 10, grad_h, alpha), 1);
}

RingSource ring(const HamiltonianModel& m, ShellMode shell = ShellMode::strict) {
  RingSource::Params p;
  p.shell = shell;
  return RingSource(m, p);
}

}  // namespace

TEST_SUITE("source") {
  TEST_CASE("ring source matches the printed formulas") {
    const HamiltonianModel m = model_for(0.5);
    const RingSource src = ring(m);
    const Vec2 mu(0.4, 1.1);
    const Vec6 f = src.point(mu);
    CHECK(f(idx::tau) == doctest::Approx(1700 * 0.4).epsilon(1e-15));
    CHECK(f(idx::p_tau) == doctest::Approx(-2 * kPi / 1700 * (300 + 50 * 0.4)).epsilon(1e-15));
    CHECK(f(idx::x) == doctest::Approx(std::cos(1.1)).epsilon(1e-15));
    CHECK(f(idx::y) == doctest::Approx(std::sin(1.1)).epsilon(1e-15));
    CHECK(std::abs(f(idx::p_x) * f(idx::y) - f(idx::p_y) * f(idx::x)) < 1e-15);
    CHECK(std::abs(m.hamiltonian(f)) <= 1e-10);
  }

  TEST_CASE("node derivatives are consistent and pass validation") {
    for (ShellMode shell : {ShellMode::strict, ShellMode::literal}) {
      const HamiltonianModel m = model_for(0.5);
      const RingSource src = ring(m, shell);
      const Vec2 mu(0.5, -2.0);
      const SourceNode fd = src.node(mu), an = src.analytic_node(mu);
      CHECK_NOTHROW(src.validate(fd, m, shell));
      CHECK_NOTHROW(src.validate(an, m, shell));
      CHECK((fd.f0 - an.f0).cwiseAbs().maxCoeff() == 0.0);
      CHECK((fd.df0 - an.df0).cwiseAbs().maxCoeff() / an.df0.cwiseAbs().maxCoeff() < 1e-8);
      CHECK((fd.dphi0 - an.dphi0).cwiseAbs().maxCoeff() / an.dphi0.cwiseAbs().maxCoeff() < 1e-8);
      for (int a = 0; a < 2; ++a) {
        const double chain = an.f0.tail<3>().dot(an.df0.col(a).head<3>());
        CHECK(an.dphi0(a) == doctest::Approx(chain).epsilon(1e-8));
        for (int b = 0; b < 2; ++b)
          CHECK((fd.d2f0[a][b] - an.d2f0[a][b]).cwiseAbs().maxCoeff() <= 1e-4 * (1 + an.d2f0[a][b].cwiseAbs().maxCoeff()));
      }
    }
  }

  TEST_CASE("invalid sources are rejected") {
    const HamiltonianModel m = model_for(0.5);
    RingSource::Params p;
    p.radius = 0.0;
    CHECK_THROWS_AS(RingSource(m, p), ValidationError);
    CHECK_THROWS_AS(parse_shell_mode("loose"), ValidationError);
    CHECK(parse_shell_mode("literal") == ShellMode::literal);
  }

  TEST_CASE("mu2 grids") {
    const auto periodic = mu2_grid(4, -kPi, kPi, false);
    CHECK(periodic.size() == 4);
    CHECK(periodic[0] == -kPi);
    CHECK(periodic[2] == doctest::Approx(0.0));
    const auto closed = mu2_grid(3, 0.0, 1.0, true);
    CHECK(closed.back() == 1.0);
    CHECK(closed[1] == 0.5);
    CHECK_THROWS_AS(mu2_grid(0, 0, 1, true), ValidationError);
  }
}

TEST_SUITE("dynamics") {
  TEST_CASE("flat bottom rays are straight") {
    const HamiltonianModel m = model_for(0.0, Vec2::Zero());
    const RingSource src = ring(m);
    const oracle::StraightRing ref{m.medium().nu_sq_bar(), 10.0, 1700, 300, 50, 1.0, 1};
    IntegrationSettings s;
    s.tau_end = 10;
    s.checkpoints = {2.5, 5};
    for (double mu2 : {0.0, 1.0, -2.5}) {
      const Vec2 mu(0.3, mu2);
      const RaySolution ray = integrate_ray(m, src.node(mu), s);
      for (const RayState& st : ray.samples) {
        const Vec3 expect = ref.position(mu, st.tau_nat);
        CHECK(std::abs(st.f(idx::x) - expect.y()) < 1e-10);
        CHECK(std::abs(st.f(idx::y) - expect.z()) < 1e-10);
        CHECK(st.T_diss == 0.0);
      }
    }
  }

  TEST_CASE("time and time momentum are exact") {
    const HamiltonianModel m = model_for(0.5);
    IntegrationSettings s;
    s.tau_end = 3;
    s.checkpoints = {0.1234, 1.0};
    const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(1.0, 2.0)), s);
    for (const RayState& st : ray.samples) {
      CHECK(st.f(idx::tau) == ray.source.f0(idx::tau) + st.tau_nat);
      CHECK(st.f(idx::p_tau) == ray.source.f0(idx::p_tau));
    }
  }

  TEST_CASE("fourth-order self-convergence") {
    // A steep slope keeps the step-0.25 error above round-off.
    const HamiltonianModel m = model_for(0.5, Vec2(0.05, 0));
    const SourceNode node = ring(m).node(Vec2(0.0, 2.7));
    auto end = [&](double step) {
      IntegrationSettings s;
      s.tau_end = 10;
      s.step = step;
      return integrate_ray(m, node, s).samples.back();
    };
    const RayState a = end(1.0), b = end(0.5), c = end(0.25);
    const double e1 = (a.f - b.f).norm(), e2 = (b.f - c.f).norm();
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
    CHECK(std::abs(a.phase - b.phase) / std::abs(b.phase - c.phase) > 12.0);
  }

  TEST_CASE("propagators start at identity and stay symplectic") {
    const HamiltonianModel m = model_for(0.5);
    IntegrationSettings s;
    s.tau_end = 10;
    s.propagators = true;
    const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0.0, 0.9)), s);
    CHECK(ray.samples.front().P_sigma == Mat6::Identity());
    CHECK(ray.samples.front().P_nat == Mat6::Identity());
    const Mat6 J = symplectic_unit();
    const Mat6& P = ray.samples.back().P_sigma;
    CHECK((P.transpose() * J * P - J).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(P.determinant() - 1) <= 1e-6);
  }

  TEST_CASE("P_nat columns match finite ray variations") {
    const HamiltonianModel m = model_for(0.5);
    const RingSource src = ring(m);
    IntegrationSettings s;
    s.tau_end = 5;
    s.propagators = true;
    const Vec2 mu(0.3, 2.2);
    const RaySolution ray = integrate_ray(m, src.node(mu), s);
    const Mat62 lin = ray.samples.back().P_nat * ray.source.df0;
    IntegrationSettings plain = s;
    plain.propagators = false;
    for (int a = 0; a < 2; ++a) {
      const double d = 1e-4;
      Vec2 e = Vec2::Zero();
      e(a) = d;
      const Vec6 fp = integrate_ray(m, src.node(mu + e), plain).samples.back().f;
      const Vec6 fm = integrate_ray(m, src.node(mu - e), plain).samples.back().f;
      const Vec6 fd = (fp - fm) / (2 * d);
      CHECK((lin.col(a) - fd).norm() / fd.norm() <= 1e-3);
    }
  }

  TEST_CASE("propagation tensor") {
    SUBCASE("vanishes at the source and on a flat alpha = 0 guide") {
      const HamiltonianModel m = model_for(0.0, Vec2::Zero());
      IntegrationSettings s;
      s.tau_end = 4;
      s.checkpoints = {2};
      s.tensor = true;
      const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0.0, 0.5)), s);
      for (const RayState& st : ray.samples) CHECK(st.Ptensor->max_abs() < 1e-12);
    }
    SUBCASE("matches differences of P_sigma at fixed sigma") {
      const HamiltonianModel m = model_for(0.5);
      const RingSource src = ring(m);
      IntegrationSettings s;
      s.tau_end = 5;
      s.tensor = true;
      const Vec2 mu(0.2, 2.8);
      const RaySolution ray = integrate_ray(m, src.node(mu), s);
      const RayState& st = ray.samples.back();
      const int steps = 5000;
      // The sigma-clock oracle reproduces the marched state first.
      const oracle::SigmaFlow centre = oracle::sigma_flow(m, ray.source.f0, st.sigma, steps);
      CHECK((centre.f - st.f).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((centre.P - st.P_sigma).cwiseAbs().maxCoeff() < 1e-8);
      for (int a = 0; a < 2; ++a) {
        const double d = 1e-4;
        Vec2 e = Vec2::Zero();
        e(a) = d;
        const Mat6 pp = oracle::sigma_flow(m, src.point(mu + e), st.sigma, steps).P;
        const Mat6 pm = oracle::sigma_flow(m, src.point(mu - e), st.sigma, steps).P;
        const Mat6 fd = (pp - pm) / (2 * d);
        const Mat6 lin = st.Ptensor->contract_last(ray.source.df0.col(a));
        CHECK((lin - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff() <= 1e-2);
      }
    }
  }

  TEST_CASE("re-marching reproduces co-integrated quantities") {
    const HamiltonianModel m = model_for(0.5);
    IntegrationSettings s;
    s.tau_end = 2;
    s.checkpoints = {1};
    s.dissipation = false;
    const SourceNode node = ring(m).node(Vec2(0.0, 1.5));
    const RaySolution bare = integrate_ray(m, node, s);
    IntegrationSettings full = s;
    full.tensor = true;
    full.dissipation = true;
    const RaySolution rich = integrate_ray(m, node, full);
    const auto props = integrate_propagator(m, bare);
    const auto tensors = integrate_propagation_tensor(m, bare);
    const auto diss = dissipation_integral(m, bare);
    REQUIRE(props.size() == rich.samples.size());
    for (std::size_t i = 0; i < props.size(); ++i) {
      CHECK(props[i].P_sigma == rich.samples[i].P_sigma);
      CHECK(props[i].P_nat == rich.samples[i].P_nat);
      CHECK(tensors[i].max_abs() == rich.samples[i].Ptensor->max_abs());
      CHECK(diss[i] == rich.samples[i].T_diss);
    }
  }

  TEST_CASE("dissipation integral") {
    SUBCASE("vanishes for alpha = 1 and for a flat bottom") {
      for (auto [alpha, grad] : {std::pair{1.0, Vec2(1e-3, 0)}, std::pair{0.5, Vec2(0, 0)}}) {
        const HamiltonianModel m = model_for(alpha, grad);
        IntegrationSettings s;
        s.tau_end = 5;
        const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0, kPi)), s);
        for (const RayState& st : ray.samples) CHECK(st.T_diss == 0.0);
      }
    }
    SUBCASE("grows monotonically on an up-slope ray and matches quadrature") {
      const HamiltonianModel m = model_for(0.5);
      IntegrationSettings s;
      s.tau_end = 5;
      for (int i = 1; i < 500; ++i) s.checkpoints.push_back(0.01 * i);
      const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0, kPi)), s);
      REQUIRE(ray.samples.size() == 501);
      // Closed-form ratio along the stored states, Simpson rule in tau_nat.
      auto density = [&](const RayState& st) {
        const Vec2 r(st.f(idx::x), st.f(idx::y));
        const double pt = st.f(idx::p_tau);
        const double h = m.medium().depth(r);
        const VerticalMode mode = solve_eigenvalue(m.medium(), {1, pt, r, 0.5});
        const Vec2 ratio = biorth_gradient_ratio(mode, 0.5, m.medium().grad_h() / h, grad_k_norm(m.medium(), 1, pt, r));
        return st.f.tail<2>().dot(ratio) / m.clock_rate(st.f);
      };
      double simpson = 0.0;
      double prev = 0.0;
      for (std::size_t i = 0; i + 2 < ray.samples.size(); i += 2)
        simpson += 0.01 / 3 * (density(ray.samples[i]) + 4 * density(ray.samples[i + 1]) + density(ray.samples[i + 2]));
      CHECK(ray.samples.back().T_diss == doctest::Approx(simpson).epsilon(1e-6));
      for (const RayState& st : ray.samples) {
        CHECK(std::abs(st.T_diss) >= prev);
        prev = std::abs(st.T_diss);
      }
      CHECK(prev > 0.0);
    }
  }

  TEST_CASE("phase rate agrees with the sigma-form integrand on the shell") {
    const HamiltonianModel m = model_for(0.5);
    IntegrationSettings s;
    s.tau_end = 5;
    s.checkpoints = {1, 2, 3, 4};
    const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0.5, 0.3)), s);
    for (std::size_t i = 1; i < ray.samples.size(); ++i) {
      const RayState& a = ray.samples[i - 1];
      const RayState& b = ray.samples[i];
      // Both integrands are constant up to the shell residual; compare mean rates.
      auto sigma_form = [&](const RayState& st) {
        const LambdaJet jet = m.lambda_jet(st.f(idx::p_tau), st.f.segment<2>(idx::x), 1);
        const double pt = st.f(idx::p_tau);
        return pt * (0.5 * jet.d1(2) - jet.value / pt) / m.clock_rate(st.f);
      };
      const double rate = (b.phase - a.phase) / (b.tau_nat - a.tau_nat);
      CHECK(rate == doctest::Approx(0.5 * (sigma_form(a) + sigma_form(b))).epsilon(1e-6));
    }
  }

  TEST_CASE("reversal recovers the start") {
    const HamiltonianModel m = model_for(0.5);
    IntegrationSettings s;
    s.tau_end = 10;
    const SourceNode node = ring(m).node(Vec2(0.0, 2.0));
    const RaySolution fwd = integrate_ray(m, node, s);
    SourceNode back = node;
    back.f0 = fwd.samples.back().f;
    s.tau_end = -10;
    const RaySolution rev = integrate_ray(m, back, s);
    CHECK((rev.samples.back().f - node.f0).cwiseAbs().maxCoeff() <= 1e-7);
  }

  TEST_CASE("rays reaching the mode cutoff are truncated") {
    const HamiltonianModel m = model_for(0.5, Vec2(0.5, 0.0));
    IntegrationSettings s;
    s.tau_end = 10;
    s.checkpoints = {1, 9};
    const RaySolution ray = integrate_ray(m, ring(m).node(Vec2(0.0, kPi)), s);
    CHECK(ray.truncated);
    CHECK(ray.truncation_tau > 1.0);
    CHECK(ray.truncation_tau < 9.0);
    CHECK(ray.find(1.0).has_value());
    CHECK_FALSE(ray.find(9.0).has_value());
    for (const RayState& st : ray.samples) CHECK(std::isfinite(st.f.norm()));
  }
}
