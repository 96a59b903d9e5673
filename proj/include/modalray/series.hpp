/**
 * @file series.hpp
 * @brief Truncated univariate Taylor series arithmetic.
 *
 * A Series<N> holds the coefficients c[n] = f^(n)(x0) / n! of a function
 * around an expansion point. Arithmetic propagates them exactly up to order N,
 * which gives exact derivatives of implicitly defined quantities (the
 * dispersion root as a function of duct strength) without finite differences.
 */
#ifndef MODALRAY_SERIES_HPP
#define MODALRAY_SERIES_HPP

#include <array>
#include <cmath>

namespace modalray {

template <int N>
struct Series {
  static_assert(N >= 0);
  std::array<double, N + 1> c{};

  static Series constant(double v) {
    Series s;
    s.c[0] = v;
    return s;
  }
  /// The identity x around x0.
  static Series variable(double x0) {
    Series s;
    s.c[0] = x0;
    if constexpr (N >= 1) s.c[1] = 1.0;
    return s;
  }

  double value() const { return c[0]; }

  /// n-th derivative at the expansion point.
  double derivative(int n) const {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return c[n] * f;
  }

  Series& operator+=(const Series& o) {
    for (int i = 0; i <= N; ++i) c[i] += o.c[i];
    return *this;
  }
  Series& operator-=(const Series& o) {
    for (int i = 0; i <= N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Series& operator*=(double s) {
    for (double& v : c) v *= s;
    return *this;
  }
};

template <int N>
Series<N> operator+(Series<N> a, const Series<N>& b) { return a += b; }
template <int N>
Series<N> operator-(Series<N> a, const Series<N>& b) { return a -= b; }
template <int N>
Series<N> operator-(Series<N> a) { return a *= -1.0; }
template <int N>
Series<N> operator*(Series<N> a, double s) { return a *= s; }
template <int N>
Series<N> operator*(double s, Series<N> a) { return a *= s; }
template <int N>
Series<N> operator+(Series<N> a, double s) {
  a.c[0] += s;
  return a;
}
template <int N>
Series<N> operator+(double s, Series<N> a) { return a + s; }
template <int N>
Series<N> operator-(Series<N> a, double s) {
  a.c[0] -= s;
  return a;
}
template <int N>
Series<N> operator-(double s, const Series<N>& a) { return -a + s; }

template <int N>
Series<N> operator*(const Series<N>& a, const Series<N>& b) {
  Series<N> out;
  for (int n = 0; n <= N; ++n) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += a.c[i] * b.c[n - i];
    out.c[n] = s;
  }
  return out;
}

template <int N>
Series<N> operator/(const Series<N>& a, const Series<N>& b) {
  Series<N> q;
  for (int n = 0; n <= N; ++n) {
    double s = a.c[n];
    for (int i = 1; i <= n; ++i) s -= b.c[i] * q.c[n - i];
    q.c[n] = s / b.c[0];
  }
  return q;
}

template <int N>
Series<N> operator/(double s, const Series<N>& b) { return Series<N>::constant(s) / b; }
template <int N>
Series<N> operator/(Series<N> a, double s) { return a *= 1.0 / s; }

template <int N>
Series<N> sqrt(const Series<N>& a) {
  Series<N> r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int n = 1; n <= N; ++n) {
    double s = a.c[n];
    for (int i = 1; i < n; ++i) s -= r.c[i] * r.c[n - i];
    r.c[n] = s / (2.0 * r.c[0]);
  }
  return r;
}

/// Simultaneous sine and cosine via the ODE recurrence s' = c x', c' = -s x'.
template <int N>
void sincos(const Series<N>& x, Series<N>& s, Series<N>& co) {
  s.c[0] = std::sin(x.c[0]);
  co.c[0] = std::cos(x.c[0]);
  for (int n = 1; n <= N; ++n) {
    double ss = 0.0, cc = 0.0;
    for (int k = 1; k <= n; ++k) {
      ss += k * x.c[k] * co.c[n - k];
      cc -= k * x.c[k] * s.c[n - k];
    }
    s.c[n] = ss / n;
    co.c[n] = cc / n;
  }
}

template <int N>
Series<N> sin(const Series<N>& x) {
  Series<N> s, c;
  sincos(x, s, c);
  return s;
}

template <int N>
Series<N> cos(const Series<N>& x) {
  Series<N> s, c;
  sincos(x, s, c);
  return c;
}

/// Derivative series: coefficients of f' around the same point (order N-1 padded with 0).
template <int N>
Series<N> differentiate(const Series<N>& a) {
  Series<N> d;
  for (int n = 0; n < N; ++n) d.c[n] = (n + 1) * a.c[n + 1];
  return d;
}

}  // namespace modalray

#endif
