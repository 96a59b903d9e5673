/**
 * @file fronts.hpp
 * @brief Amplitudes, ray and observable gradients, and front polylines over a ray fan.
 *
 * Ray coordinates are (tau_nat, mu1, mu2). The sigma-clock Jacobian feeds the
 * amplitude determinant; the tau_nat-clock Jacobian feeds gradients.
 */
#ifndef MODALRAY_FRONTS_HPP
#define MODALRAY_FRONTS_HPP

#include "modalray/dynamics.hpp"
#include "modalray/hamiltonian.hpp"

#include <functional>
#include <string>
#include <vector>

namespace modalray {

enum class Validity { ok, near_caustic, cutoff };
std::string to_string(Validity v);

enum class Clock { sigma, natural };

/// All rays of one (l, alpha) configuration sharing the same checkpoints.
struct RayFan {
  std::vector<RaySolution> rays;
  std::vector<double> checkpoints;
};

/// f_r: 6x3 with columns (d f / d clock, P d f0 / d mu1, P d f0 / d mu2).
Mat63 ray_jacobian(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                   Clock clock);

/// Same at the source, i.e. with P = I.
Mat63 source_jacobian(const HamiltonianModel& model, const SourceNode& node, Clock clock);

/// (f^T f)^-1 f^T; throws RankDeficient when the smallest singular value is below 1e-12.
Mat36 pseudo_inverse(const Mat63& f_r);

struct AmplitudeSample {
  double value = 0.0;      ///< spreading * exp(T_diss)
  double spreading = 0.0;  ///< A0 sqrt(D0 / D), no dissipation
  double det = 0.0;        ///< D = det I_r f_r (sigma clock)
  double det0 = 0.0;
  Validity validity = Validity::ok;
};

/// Non-throwing evaluation with validity classification against `caustic_threshold`.
AmplitudeSample amplitude_sample(const HamiltonianModel& model, const RaySolution& ray,
                                 std::size_t sample, double caustic_threshold = 1e-6);

/// Amplitude along the ray; throws CausticCrossing when D / D0 <= 0.
double amplitude(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                 double caustic_threshold = 1e-6);

/// Per-sample amplitudes; samples after a determinant sign change stay near_caustic.
std::vector<AmplitudeSample> amplitude_track(const HamiltonianModel& model, const RaySolution& ray,
                                             double caustic_threshold = 1e-6);

enum class RayQuantity { tau, tau_nat, arclen, phase, sigma, T_diss };

/// Gradient in (tau_nat, mu1, mu2); needs the interior integrals on the ray.
Vec3 ray_gradients(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                   RayQuantity which);

/// I_mu f_r(0)^T int_0^tau_nat P_nat^T grad G, trapezoid over the stored samples.
Vec2 interior_gradient(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample,
                       const std::function<double(const Vec6&)>& G);

/// Gradient of the amplitude in (tau_nat, mu1, mu2); needs tensor and interior integrals.
Vec3 amplitude_gradient(const HamiltonianModel& model, const RaySolution& ray, std::size_t sample);

/// Space-time gradient (d/dtau, d/dx, d/dy) as I_r (f_r^+)^T grad_r g, Moore-Penrose f_r^+.
Vec3 observable_gradient(const Vec3& ray_grad, const Mat63& f_r);

/// Same with the left inverse (r_r^-1, 0) of f_r, exact for gradients of functions of (tau, x, y).
Vec3 observable_gradient_coordinate(const Vec3& ray_grad, const Mat63& f_r);

enum class FrontQuantity { tau_nat, tau, phase, amplitude, arclen, T_diss };
FrontQuantity parse_front_quantity(const std::string& s);
std::string to_string(FrontQuantity q);

struct FrontPoint {
  Vec2 mu = Vec2::Zero();
  double tau_nat = 0.0;
  Vec3 r = Vec3::Zero();  ///< (tau, x, y)
  double value = 0.0;
  Validity validity = Validity::ok;
  bool gap = false;  ///< break the polyline before this point
};

struct Front {
  std::vector<FrontPoint> points;
  std::vector<std::size_t> level_not_reached;  ///< ray indices without a crossing
};

/// Crossing of `quantity` = `level` on each ray by linear interpolation in tau_nat.
Front extract_front(const HamiltonianModel& model, const RayFan& fan, FrontQuantity quantity,
                    double level, double caustic_threshold = 1e-6);

}  // namespace modalray

#endif
