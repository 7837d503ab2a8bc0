#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace eqmanip {

enum class Frame { world, camera, gripper };

inline const char* frame_name(Frame f) {
  switch (f) {
    case Frame::world: return "world";
    case Frame::camera: return "camera";
    case Frame::gripper: return "gripper";
  }
  return "?";
}

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// N labeled points in a tagged coordinate frame. Category 0 is background.
struct LabeledPointCloud {
  PointMatrix points;
  std::vector<int> categories;
  Frame frame = Frame::world;

  Eigen::Index size() const { return points.rows(); }
};

}  // namespace eqmanip
