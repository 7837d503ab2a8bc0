#pragma once

#include <cstdint>
#include <vector>

#include "eqmanip/cloud.hpp"
#include "eqmanip/geom.hpp"

namespace eqmanip::perception {

using geom::RigidTransform;
using geom::Vector3d;

struct PinholeCamera {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;
  RigidTransform extrinsics;  // camera -> world

  void validate() const;

  // Ray of pixel (u, v) in camera coordinates, z component fixed to 1 so the
  // ray parameter equals z-depth.
  Vector3d pixel_ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  Vector3d camera_point(double u, double v, double depth) const {
    return depth * pixel_ray(u, v);
  }

  // World point -> (u, v, z-depth) in this camera. Depth may be <= 0 when the
  // point lies behind the camera.
  Vector3d project(const Vector3d& world) const;
};

struct DepthMaskImage {
  int width = 0, height = 0;
  std::vector<double> depth;  // row-major, meters, 0 = invalid
  std::vector<int> mask;      // row-major category IDs, 0 = background

  double depth_at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
  int mask_at(int u, int v) const { return mask[static_cast<size_t>(v) * width + u]; }
};

// Back-project every valid pixel (depth > 0) to a world-frame labeled point.
// Points appear in pixel scan order so later seeded sampling is reproducible.
LabeledPointCloud backproject(const DepthMaskImage& img, const PinholeCamera& cam);

// Re-express a world-frame cloud in the gripper frame.
LabeledPointCloud to_gripper_frame(const LabeledPointCloud& cloud, const RigidTransform& gripper_world);

// Pick exactly `budget` points, giving each present category an equal quota
// (remainder to the lowest IDs). Underfull categories contribute everything
// they have and their deficit is re-split across the rest; if the whole cloud
// is smaller than the budget, points repeat in FPS order.
LabeledPointCloud category_balanced_sample(const LabeledPointCloud& cloud, int budget, std::uint64_t seed);

// Plain FPS over the whole cloud, ignoring categories (ablation path).
LabeledPointCloud uniform_sample(const LabeledPointCloud& cloud, int budget, std::uint64_t seed);

struct SgpOptions {
  int budget = 1024;
  std::uint64_t seed = 0;
  double crop_radius = 0.0;       // 0 = no crop; else keep points within radius of frame origin
  bool balanced = true;           // false = uniform FPS (wo/cat)
  bool gripper_frame = true;      // false = leave cloud in world frame (wo/ref)
};

LabeledPointCloud sgp_pipeline(const DepthMaskImage& img, const PinholeCamera& cam,
                               const RigidTransform& gripper_world, const SgpOptions& opt);

inline LabeledPointCloud sgp_pipeline(const DepthMaskImage& img, const PinholeCamera& cam,
                                      const RigidTransform& gripper_world, int budget,
                                      std::uint64_t seed) {
  SgpOptions opt;
  opt.budget = budget;
  opt.seed = seed;
  return sgp_pipeline(img, cam, gripper_world, opt);
}

}  // namespace eqmanip::perception
