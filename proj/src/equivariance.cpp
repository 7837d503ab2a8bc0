#include "eqmanip/equivariance.hpp"

#include <cmath>
#include <stdexcept>

namespace eqmanip::aug {

void AugmentConfig::validate() const {
  if (probability < 0.0 || probability > 1.0) {
    throw std::invalid_argument("AugmentConfig: probability outside [0, 1]");
  }
  if (max_angle < 0.0 || max_angle > 3.1415926535897932 + 1e-12) {
    throw std::invalid_argument("AugmentConfig: max_angle outside [0, pi]");
  }
}

geom::Rotation3 draw_rotation(const AugmentConfig& cfg, Rng& rng) {
  if (cfg.mode == AugmentMode::yaw_only) {
    const double angle = rng.uniform(-cfg.max_angle, cfg.max_angle);
    return geom::rot_axis_angle(geom::Vector3d(0, 0, 1), angle);
  }
  // Shoemake's subgroup algorithm: uniform unit quaternion from three
  // uniform variates, then converted to a matrix.
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double two_pi = 2.0 * 3.141592653589793238462643383279502884;
  const double qx = std::sqrt(1.0 - u1) * std::sin(two_pi * u2);
  const double qy = std::sqrt(1.0 - u1) * std::cos(two_pi * u2);
  const double qz = std::sqrt(u1) * std::sin(two_pi * u3);
  const double qw = std::sqrt(u1) * std::cos(two_pi * u3);
  Eigen::Matrix3d m;
  m << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
      2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
      2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy);
  return geom::Rotation3::from_matrix(m);
}

policy::Observation augment_observation(const policy::Observation& obs, const geom::Rotation3& t) {
  policy::Observation out;
  geom::RigidTransform rt;
  rt.rotation = t;
  out.cloud = geom::apply_transform(rt, obs.cloud);
  out.pose.position = t * obs.pose.position;
  out.pose.orientation = geom::rot6d_from_matrix(t * geom::matrix_from_rot6d(obs.pose.orientation));
  out.pose.open_state = obs.pose.open_state;
  return out;
}

policy::ActionChunk rotate_chunk(const policy::ActionChunk& chunk, const geom::Rotation3& t) {
  policy::ActionChunk out = chunk;
  out.deltas = chunk.deltas * t.matrix().transpose();
  return out;
}

policy::TrainingSample augment_sample(const policy::TrainingSample& sample, const geom::Rotation3& t) {
  policy::TrainingSample out;
  out.obs.reserve(sample.obs.size());
  for (const auto& o : sample.obs) out.obs.push_back(augment_observation(o, t));
  out.actions = rotate_chunk(sample.actions, t);
  return out;
}

std::vector<policy::TrainingSample> augmented_batch(const std::vector<policy::TrainingSample>& batch,
                                                    const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<policy::TrainingSample> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    if (rng.uniform() < cfg.probability) {
      out.push_back(augment_sample(s, draw_rotation(cfg, rng)));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace eqmanip::aug
