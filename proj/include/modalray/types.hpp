/**
 * @file types.hpp
 * @brief Fixed-size linear algebra aliases shared by the ray engine.
 *
 * Phase-space vectors are ordered (tau, x, y, p_tau, p_x, p_y).
 */
#ifndef MODALRAY_TYPES_HPP
#define MODALRAY_TYPES_HPP

#include <Eigen/Dense>

#include <array>

namespace modalray {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat62 = Eigen::Matrix<double, 6, 2>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

namespace idx {
inline constexpr int tau = 0;
inline constexpr int x = 1;
inline constexpr int y = 2;
inline constexpr int p_tau = 3;
inline constexpr int p_x = 4;
inline constexpr int p_y = 5;
}  // namespace idx

/// Dense 6x6x6 tensor, row-major in (i, j, k).
class Tensor6 {
 public:
  Tensor6() { data_.fill(0.0); }

  double& operator()(int i, int j, int k) { return data_[(i * 6 + j) * 6 + k]; }
  double operator()(int i, int j, int k) const { return data_[(i * 6 + j) * 6 + k]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  static constexpr int size() { return 216; }

  /// Contraction over the last index: result(i, j) = sum_k T(i, j, k) v(k).
  Mat6 contract_last(const Vec6& v) const {
    Mat6 out;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        double s = 0.0;
        for (int k = 0; k < 6; ++k) s += (*this)(i, j, k) * v(k);
        out(i, j) = s;
      }
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::array<double, 216> data_;
};

/// Symplectic unit J = [[0, I3], [-I3, 0]].
inline Mat6 symplectic_unit() {
  Mat6 j = Mat6::Zero();
  j.block<3, 3>(0, 3) = Mat3::Identity();
  j.block<3, 3>(3, 0) = -Mat3::Identity();
  return j;
}

/// J v without forming J.
inline Vec6 apply_j(const Vec6& v) {
  Vec6 out;
  out.head<3>() = v.tail<3>();
  out.tail<3>() = -v.head<3>();
  return out;
}

}  // namespace modalray

#endif
