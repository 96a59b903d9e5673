/**
 * @file environment.hpp
 * @brief Two-layer shallow-water medium in scaled horizontal coordinates.
 *
 * Water with constant sound speed over a fluid half-space bottom. Horizontal
 * and temporal quantities are already in scaled units (tau = eps * c_bot * t,
 * x = eps * X); no unit conversion happens here.
 */
#ifndef MODALRAY_ENVIRONMENT_HPP
#define MODALRAY_ENVIRONMENT_HPP

#include "modalray/types.hpp"

namespace modalray {

class MediumModel {
 public:
  /// Validates c_bot >= c_water > 0, h0 > 0 and alpha in [0, 1].
  MediumModel(double c_water, double c_bot, double h0, Vec2 grad_h, double alpha);

  double c_water() const { return c_water_; }
  double c_bot() const { return c_bot_; }
  /// Duct contrast (c_bot^2 - c^2) / c^2.
  double nu_sq_bar() const { return nu_sq_bar_; }
  double h0() const { return h0_; }
  const Vec2& grad_h() const { return grad_h_; }
  /// Density ratio rho / rho_bot.
  double alpha() const { return alpha_; }

  /// Affine bathymetry h0 + grad_h . r. Throws NonPositiveDepth when <= 0.
  double depth(const Vec2& r) const;
  Vec2 depth_gradient() const { return grad_h_; }

  /// Piecewise-constant contrast: nu_sq_bar in the water column, 0 below the bottom.
  double nu_squared(double z, const Vec2& r) const;

  MediumModel with_alpha(double alpha) const;

 private:
  double c_water_;
  double c_bot_;
  double nu_sq_bar_;
  double h0_;
  Vec2 grad_h_;
  double alpha_;
};

}  // namespace modalray

#endif
