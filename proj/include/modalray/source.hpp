/**
 * @file source.hpp
 * @brief Two-parameter initial manifolds (mu1, mu2) of phase points.
 */
#ifndef MODALRAY_SOURCE_HPP
#define MODALRAY_SOURCE_HPP

#include "modalray/hamiltonian.hpp"
#include "modalray/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace modalray {

enum class ShellMode {
  strict,   ///< |p| = sqrt(p_tau^2 + lambda): H = 0 on the source
  literal,  ///< |p| = k_l / h as printed for the ring source; H = p_tau^2 / 2
};

ShellMode parse_shell_mode(const std::string& s);
std::string to_string(ShellMode m);

/// |p| on the chosen shell at (p_tau, r).
double shell_momentum(const HamiltonianModel& model, double p_tau, const Vec2& r, ShellMode mode);

/// Horizontal momentum of magnitude sqrt(p_tau^2 + lambda) along `direction`.
Vec2 project_to_shell(const HamiltonianModel& model, const Vec2& direction, double p_tau,
                      const Vec2& r);

/// Initial data at one manifold node together with its mu-derivatives.
struct SourceNode {
  Vec2 mu = Vec2::Zero();
  Vec6 f0 = Vec6::Zero();
  Mat62 df0 = Mat62::Zero();                ///< columns d f0 / d mu_a
  std::array<std::array<Vec6, 2>, 2> d2f0;  ///< d^2 f0 / d mu_a d mu_b
  double phi0 = 0.0;
  Vec2 dphi0 = Vec2::Zero();
  double amp0 = 1.0;
  Vec2 damp0 = Vec2::Zero();

  SourceNode() {
    for (auto& row : d2f0)
      for (auto& v : row) v.setZero();
  }
};

enum class SourceDerivatives { finite_difference, analytic };

class SourceManifold {
 public:
  virtual ~SourceManifold() = default;

  virtual Vec6 point(const Vec2& mu) const = 0;
  virtual double phase(const Vec2& mu) const = 0;
  virtual double amplitude(const Vec2& mu) const = 0;

  /// Node with centered-difference derivatives in mu (steps fd_step, fd_step2).
  virtual SourceNode node(const Vec2& mu) const;

  /// Checks phase/momentum consistency and rank of d r0 / d mu at one node.
  void validate(const SourceNode& n, const HamiltonianModel& model, ShellMode mode) const;

  double fd_step = 1e-5;
  double fd_step2 = 1e-3;
};

/// Ring source of radius R: tau0 = c_bot mu1, r0 = R (cos mu2, sin mu2),
/// p_tau = -(2 pi / c_bot)(f0 + df mu1), p along r0 with shell magnitude.
class RingSource : public SourceManifold {
 public:
  struct Params {
    double freq0 = 300.0;
    double dfreq = 50.0;
    double radius = 1.0;
    double amplitude = 1.0;
    ShellMode shell = ShellMode::strict;
    SourceDerivatives derivatives = SourceDerivatives::finite_difference;
  };

  RingSource(HamiltonianModel model, Params params);

  Vec6 point(const Vec2& mu) const override;
  double phase(const Vec2& mu) const override;
  double amplitude(const Vec2&) const override { return params_.amplitude; }
  SourceNode node(const Vec2& mu) const override;
  /// Closed-form derivatives regardless of the configured default.
  SourceNode analytic_node(const Vec2& mu) const;

  double p_tau(double mu1) const;
  const Params& params() const { return params_; }

 private:
  HamiltonianModel model_;
  Params params_;
};

/// mu2 samples: count points on [min, max], endpoint optional (periodic rings omit it).
std::vector<double> mu2_grid(int count, double min, double max, bool endpoint);

}  // namespace modalray

#endif
