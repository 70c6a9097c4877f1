#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hoipc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Error categories surfaced through the C API as integer codes.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kParse = 2,
  kInvalidMesh = 3,
  kNotConverged = 4,
  kIo = 5,
  kIntersecting = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Tolerance for reference-domain membership.
inline constexpr double kRefEps = 1e-10;

/// Point in the reference tetrahedron {r,s,t >= 0, r+s+t <= 1}.
struct RefPoint {
  double r = 0.0;
  double s = 0.0;
  double t = 0.0;

  RefPoint() = default;
  RefPoint(double r_, double s_, double t_) : r(r_), s(s_), t(t_) {}
  explicit RefPoint(const Vec3& v) : r(v[0]), s(v[1]), t(v[2]) {}

  Vec3 vec() const { return {r, s, t}; }

  /// Barycentric coordinates (1-r-s-t, r, s, t).
  std::array<double, 4> barycentric() const { return {1.0 - r - s - t, r, s, t}; }

  static RefPoint from_barycentric(const std::array<double, 4>& l) { return {l[1], l[2], l[3]}; }

  bool inside(double eps = kRefEps) const {
    for (double l : barycentric())
      if (l < -eps || l > 1.0 + eps) return false;
    return true;
  }

  /// Sum of absolute barycentric coordinates; equals 1 inside the element.
  double l1_barycentric() const {
    double sum = 0.0;
    for (double l : barycentric()) sum += std::abs(l);
    return sum;
  }
};

}  // namespace hoipc
