#include "eqmanip/geom.hpp"

#include <cmath>
#include <stdexcept>

#include "eqmanip/errors.hpp"

namespace eqmanip::geom {

bool Rotation3::is_valid(double tol) const {
  const Matrix3d err = m_.transpose() * m_ - Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() >= tol) return false;
  return std::abs(m_.determinant() - 1.0) < tol;
}

Rotation3 Rotation3::from_matrix(const Matrix3d& m) {
  Rotation3 r(m, Unchecked{});
  if (!r.is_valid()) {
    throw std::invalid_argument("Rotation3::from_matrix: matrix is not a proper rotation");
  }
  return r;
}

Rotation3 rot_axis_angle(const Vector3d& axis, double angle) {
  if (std::abs(axis.norm() - 1.0) >= 1e-9) {
    throw std::invalid_argument("rot_axis_angle: axis must be unit length");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix3d k;
  k << 0, -axis.z(), axis.y(),
      axis.z(), 0, -axis.x(),
      -axis.y(), axis.x(), 0;
  const Matrix3d m = Matrix3d::Identity() + s * k + (1.0 - c) * (k * k);
  return Rotation3::from_matrix(m);
}

RigidTransform RigidTransform::inverted() const {
  const Rotation3 rt = rotation.transposed();
  return {rt, Vector3d(-(rt * translation))};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, Vector3d(a.rotation * b.translation + a.translation)};
}

LabeledPointCloud apply_transform(const RigidTransform& t, const LabeledPointCloud& cloud) {
  if (cloud.size() == 0) {
    throw std::invalid_argument("apply_transform: empty cloud");
  }
  LabeledPointCloud out;
  out.points = cloud.points * t.rotation.matrix().transpose();
  out.points.rowwise() += t.translation.transpose();
  out.categories = cloud.categories;
  out.frame = cloud.frame;
  return out;
}

Rot6 rot6d_from_matrix(const Rotation3& r) {
  Rot6 v;
  v.head<3>() = r.matrix().col(0);
  v.tail<3>() = r.matrix().col(1);
  return v;
}

Rotation3 matrix_from_rot6d(const Rot6& v) {
  const Vector3d a = v.head<3>();
  const Vector3d b = v.tail<3>();
  const double an = a.norm();
  if (an < 1e-12) {
    throw std::invalid_argument("matrix_from_rot6d: degenerate first column");
  }
  const Vector3d c0 = a / an;
  Vector3d c1 = b - c0.dot(b) * c0;
  const double bn = c1.norm();
  if (bn < 1e-12) {
    throw std::invalid_argument("matrix_from_rot6d: columns are colinear");
  }
  c1 /= bn;
  const Vector3d c2 = c0.cross(c1);
  Matrix3d m;
  m.col(0) = c0;
  m.col(1) = c1;
  m.col(2) = c2;
  return Rotation3::from_matrix(m);
}

std::vector<int> farthest_point_sample(const PointMatrix& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw EmptyCloudError("farthest_point_sample: empty point set");
  if (k < 1 || k > n) {
    throw std::invalid_argument("farthest_point_sample: k out of range");
  }

  std::vector<int> picked;
  picked.reserve(k);
  const int first = static_cast<int>(seed % static_cast<std::uint64_t>(n));
  picked.push_back(first);

  // min squared distance from each point to the selected set
  Eigen::VectorXd d2 =
      (points.rowwise() - points.row(first)).rowwise().squaredNorm();

  for (int i = 1; i < k; ++i) {
    int best = 0;
    double best_d2 = -1.0;
    for (int j = 0; j < n; ++j) {
      if (d2[j] > best_d2) {  // strict: ties keep the lowest index
        best_d2 = d2[j];
        best = j;
      }
    }
    picked.push_back(best);
    const Eigen::VectorXd nd2 =
        (points.rowwise() - points.row(best)).rowwise().squaredNorm();
    d2 = d2.cwiseMin(nd2);
  }
  return picked;
}

}  // namespace eqmanip::geom
