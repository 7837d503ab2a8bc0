#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "eqmanip/cloud.hpp"

namespace eqmanip::geom {

using Eigen::Matrix3d;
using Eigen::Vector3d;

using Rot6 = Eigen::Matrix<double, 6, 1>;

// Proper rotation (orthonormal columns, det +1). Construction through
// from_matrix validates; composition of valid rotations is trusted.
class Rotation3 {
 public:
  Rotation3() : m_(Matrix3d::Identity()) {}

  static Rotation3 identity() { return Rotation3(); }
  static Rotation3 from_matrix(const Matrix3d& m);  // validates at 1e-9

  const Matrix3d& matrix() const { return m_; }

  Vector3d operator*(const Vector3d& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& o) const { return Rotation3(Matrix3d(m_ * o.m_), Unchecked{}); }
  Rotation3 transposed() const { return Rotation3(Matrix3d(m_.transpose()), Unchecked{}); }

  bool is_valid(double tol = 1e-9) const;

 private:
  struct Unchecked {};
  Rotation3(const Matrix3d& m, Unchecked) : m_(m) {}
  Matrix3d m_;
};

// Rodrigues formula. Axis must be unit length within 1e-9.
Rotation3 rot_axis_angle(const Vector3d& axis, double angle);

struct RigidTransform {
  Rotation3 rotation;
  Vector3d translation = Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Vector3d apply(const Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverted() const;
};

// compose(A, B) applies B first, then A.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// p -> R p + t for every point; categories and ordering are untouched.
LabeledPointCloud apply_transform(const RigidTransform& t, const LabeledPointCloud& cloud);

// Continuous 6-dim rotation encoding: the first two matrix columns, stacked
// column-major. Decoding re-orthonormalizes with Gram-Schmidt.
Rot6 rot6d_from_matrix(const Rotation3& r);
Rotation3 matrix_from_rot6d(const Rot6& v);

// Greedy max-min-distance subsampling. The first index is seed % N; every
// later pick maximizes the distance to the selected set, ties broken by
// lowest index so results are bit-reproducible.
std::vector<int> farthest_point_sample(const PointMatrix& points, int k, std::uint64_t seed);

}  // namespace eqmanip::geom
