#pragma once

#include <Eigen/Core>

#include <cmath>

namespace hoipc {

/// Second-order forward-mode number: value, gradient and Hessian over N inputs.
template <int N>
struct Hyper {
  using Grad = Eigen::Matrix<double, N, 1>;
  using Hess = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Grad g = Grad::Zero();
  Hess H = Hess::Zero();

  Hyper() = default;
  Hyper(double value) : v(value) {}  // NOLINT: implicit constants are intended

  static Hyper variable(double value, int index) {
    Hyper x(value);
    x.g[index] = 1.0;
    return x;
  }

  Hyper& operator+=(const Hyper& b) {
    v += b.v;
    g += b.g;
    H += b.H;
    return *this;
  }
  Hyper& operator-=(const Hyper& b) {
    v -= b.v;
    g -= b.g;
    H -= b.H;
    return *this;
  }
};

template <int N>
Hyper<N> operator+(Hyper<N> a, const Hyper<N>& b) { return a += b; }
template <int N>
Hyper<N> operator-(Hyper<N> a, const Hyper<N>& b) { return a -= b; }
template <int N>
Hyper<N> operator-(const Hyper<N>& a) {
  Hyper<N> r;
  r.v = -a.v;
  r.g = -a.g;
  r.H = -a.H;
  return r;
}
template <int N>
Hyper<N> operator*(const Hyper<N>& a, const Hyper<N>& b) {
  Hyper<N> r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}
template <int N>
Hyper<N> operator*(double s, Hyper<N> a) {
  a.v *= s;
  a.g *= s;
  a.H *= s;
  return a;
}
template <int N>
Hyper<N> operator*(const Hyper<N>& a, double s) { return s * a; }

/// f applied to a with f(a.v) = f0, f'(a.v) = f1, f''(a.v) = f2.
template <int N>
Hyper<N> chain(const Hyper<N>& a, double f0, double f1, double f2) {
  Hyper<N> r;
  r.v = f0;
  r.g = f1 * a.g;
  r.H = f1 * a.H + f2 * a.g * a.g.transpose();
  return r;
}

template <int N>
Hyper<N> operator/(const Hyper<N>& a, const Hyper<N>& b) {
  const double inv = 1.0 / b.v;
  return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}
template <int N>
Hyper<N> operator/(const Hyper<N>& a, double s) { return (1.0 / s) * a; }

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Hyper<N>& x) { return x.v; }

/// Minimal 3-vector over an arbitrary scalar, for code shared between double and Hyper.
template <class T>
struct V3 {
  T x, y, z;

  V3 operator+(const V3& b) const { return {x + b.x, y + b.y, z + b.z}; }
  V3 operator-(const V3& b) const { return {x - b.x, y - b.y, z - b.z}; }
  V3 operator*(const T& s) const { return {x * s, y * s, z * s}; }
};

template <class T>
T dot(const V3<T>& a, const V3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T>
V3<T> cross(const V3<T>& a, const V3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

}  // namespace hoipc
