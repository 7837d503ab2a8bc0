#pragma once

#include <cstdint>
#include <vector>

#include "eqmanip/geom.hpp"
#include "eqmanip/policy.hpp"
#include "eqmanip/rng.hpp"

namespace eqmanip::aug {

enum class AugmentMode { yaw_only, full_so3 };

struct AugmentConfig {
  AugmentMode mode = AugmentMode::yaw_only;
  double max_angle = 3.141592653589793238462643383279502884;  // radians, yaw_only
  double probability = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// yaw_only: rotation about the reference z axis, angle uniform in
// [-max_angle, max_angle]. full_so3: uniform over SO(3) via the subgroup
// algorithm; max_angle is ignored there.
geom::Rotation3 draw_rotation(const AugmentConfig& cfg, Rng& rng);

// Shared rotation applied to every spatial quantity of a sample: cloud
// points, pose position and orientation, action translations. Gripper
// commands and category labels pass through.
policy::Observation augment_observation(const policy::Observation& obs, const geom::Rotation3& t);
policy::ActionChunk rotate_chunk(const policy::ActionChunk& chunk, const geom::Rotation3& t);
policy::TrainingSample augment_sample(const policy::TrainingSample& sample, const geom::Rotation3& t);

// Each sample independently augmented with cfg.probability, fresh rotation
// per sample.
std::vector<policy::TrainingSample> augmented_batch(const std::vector<policy::TrainingSample>& batch,
                                                    const AugmentConfig& cfg, Rng& rng);

}  // namespace eqmanip::aug
