#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqmanip/geom.hpp"
#include "eqmanip/perception.hpp"

namespace eqmanip::sim {

using geom::RigidTransform;
using geom::Vector3d;
using perception::DepthMaskImage;
using perception::PinholeCamera;

enum class TaskId { push, pick_place, sweep_into };

const char* task_name(TaskId id);
TaskId task_from_name(const std::string& name);

// Scene mask categories. Background (table and empty pixels) is 0.
inline constexpr int kCatBackground = 0;
inline constexpr int kCatObject = 1;
inline constexpr int kCatGoal = 2;
inline constexpr int kCatGripper = 3;
inline constexpr int kNumCategories = 4;

struct Primitive {
  enum class Shape { sphere, box };
  Shape shape = Shape::sphere;
  Vector3d position = Vector3d::Zero();
  double radius = 0.0;               // sphere
  Vector3d half = Vector3d::Zero();  // box half extents
  int category = kCatBackground;
  bool movable = false;
  bool graspable = false;

  double rest_z() const { return shape == Shape::sphere ? radius : half.z(); }
  double contact_radius_xy() const { return shape == Shape::sphere ? radius : std::max(half.x(), half.y()); }
  double contact_half_z() const { return shape == Shape::sphere ? radius : half.z(); }
};

// Kinematic contact constants shared by stepping and the scripted expert.
struct SimParams {
  double table_z = 0.0;
  double gripper_radius = 0.015;
  double grasp_radius = 0.04;
  double max_step = 0.05;
};

struct SceneState {
  RigidTransform gripper;         // orientation stays identity in this world
  double gripper_open = 1.0;      // 1 open, 0 closed
  int attached = -1;              // index into objects, -1 when free
  Vector3d attach_offset = Vector3d::Zero();
  std::vector<Primitive> objects;
  Vector3d goal_center = Vector3d::Zero();
  double goal_radius = 0.03;
  SimParams params;
};

struct Action {
  Vector3d delta = Vector3d::Zero();
  double gripper = -1.0;  // > 0 closes
};

struct TaskSpec {
  TaskId id = TaskId::push;
  Vector3d region_center{0.45, 0.0, 0.0};
  Eigen::Vector2d region_half{0.048, 0.048};  // object init half extents at scale 1
  double region_scale = 1.0;
  Eigen::Vector2d goal_offset{0.0, 0.0};  // goal sampling region center, relative
  Eigen::Vector2d goal_half{0.048, 0.048};
  double goal_radius = 0.03;
  double min_separation = 0.05;
  SimParams params;

  // expert controller constants
  double travel_z = 0.08;
  double push_step = 0.02;
  double align_tol = 0.012;
  double approach_clearance = 0.004;
  double hover_z = 0.08;
  double grasp_z = 0.045;
  double carry_z = 0.09;
  double place_z = 0.05;

  int episode_cap = 200;

  static TaskSpec make(TaskId id, double region_scale = 1.0);
};

// Object placed uniformly in the (scaled) region, goal drawn from its own
// fixed-size region away from the object; deterministic in the seed.
SceneState reset(const TaskSpec& task, std::uint64_t seed);

// Clip the translation to max_step, move the gripper, handle grasp/release,
// then resolve gripper-object overlap by horizontal displacement. Free
// objects stay at their resting height; nothing penetrates the table.
SceneState step(const SceneState& state, const Action& action);

// Analytic ray cast against spheres, boxes and the table plane. Depth is the
// camera-frame z of the nearest hit; mask carries its category.
DepthMaskImage render(const SceneState& state, const PinholeCamera& cam);

bool any_foreground(const DepthMaskImage& img);

Action scripted_expert(const SceneState& state, const TaskSpec& task);

bool success(const SceneState& state, const TaskSpec& task);
// Tighter predicate the expert drives to before idling, so demonstrations
// finish safely inside the success region.
bool strict_success(const SceneState& state, const TaskSpec& task);

enum class CameraDof { tx, ty, tz, rx, ry, rz };
const char* dof_name(CameraDof d);
CameraDof dof_from_name(const std::string& name);

PinholeCamera lookat_camera(const Vector3d& eye, const Vector3d& target, double focal, int width, int height);
PinholeCamera default_camera();

// Compose the extrinsics with a single-DOF offset expressed in the camera
// frame. Translations in meters, rotations in radians.
PinholeCamera perturb_camera(const PinholeCamera& cam, CameraDof dof, double magnitude);

}  // namespace eqmanip::sim
