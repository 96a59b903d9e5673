#include "modalray/environment.hpp"

#include "modalray/errors.hpp"

#include <cmath>
#include <sstream>

namespace modalray {

MediumModel::MediumModel(double c_water, double c_bot, double h0, Vec2 grad_h, double alpha)
    : c_water_(c_water), c_bot_(c_bot), h0_(h0), grad_h_(std::move(grad_h)), alpha_(alpha) {
  if (!(c_water > 0.0) || !std::isfinite(c_water))
    throw ValidationError("medium.c must be positive and finite");
  if (!(c_bot >= c_water) || !std::isfinite(c_bot))
    throw ValidationError("medium.c_bot must be finite and not below medium.c");
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw ValidationError("medium.h0 must be positive");
  if (!grad_h_.allFinite()) throw ValidationError("medium.grad_h must be finite");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("medium.alpha must lie in [0, 1]");
  nu_sq_bar_ = (c_bot * c_bot - c_water * c_water) / (c_water * c_water);
}

double MediumModel::depth(const Vec2& r) const {
  const double h = h0_ + grad_h_.dot(r);
  if (!(h > 0.0)) {
    std::ostringstream msg;
    msg << "depth " << h << " at r = (" << r.x() << ", " << r.y() << ")";
    throw NonPositiveDepth(msg.str());
  }
  return h;
}

double MediumModel::nu_squared(double z, const Vec2& r) const {
  if (z < 0.0) throw NegativeDepthCoordinate("z = " + std::to_string(z));
  return z <= depth(r) ? nu_sq_bar_ : 0.0;
}

MediumModel MediumModel::with_alpha(double alpha) const {
  return MediumModel(c_water_, c_bot_, h0_, grad_h_, alpha);
}

}  // namespace modalray
