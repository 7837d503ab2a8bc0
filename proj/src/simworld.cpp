#include "eqmanip/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "eqmanip/errors.hpp"
#include "eqmanip/rng.hpp"

namespace eqmanip::sim {

const char* task_name(TaskId id) {
  switch (id) {
    case TaskId::push: return "push";
    case TaskId::pick_place: return "pick_place";
    case TaskId::sweep_into: return "sweep_into";
  }
  return "?";
}

TaskId task_from_name(const std::string& name) {
  if (name == "push") return TaskId::push;
  if (name == "pick_place") return TaskId::pick_place;
  if (name == "sweep_into") return TaskId::sweep_into;
  throw std::invalid_argument("unknown task: " + name);
}

const char* dof_name(CameraDof d) {
  switch (d) {
    case CameraDof::tx: return "tx";
    case CameraDof::ty: return "ty";
    case CameraDof::tz: return "tz";
    case CameraDof::rx: return "rx";
    case CameraDof::ry: return "ry";
    case CameraDof::rz: return "rz";
  }
  return "?";
}

CameraDof dof_from_name(const std::string& name) {
  if (name == "tx") return CameraDof::tx;
  if (name == "ty") return CameraDof::ty;
  if (name == "tz") return CameraDof::tz;
  if (name == "rx") return CameraDof::rx;
  if (name == "ry") return CameraDof::ry;
  if (name == "rz") return CameraDof::rz;
  throw std::invalid_argument("unknown camera DOF: " + name);
}

TaskSpec TaskSpec::make(TaskId id, double region_scale) {
  TaskSpec t;
  t.id = id;
  t.region_scale = region_scale;
  switch (id) {
    case TaskId::push:
      break;
    case TaskId::pick_place:
      break;
    case TaskId::sweep_into:
      t.goal_offset = {0.0, 0.10};
      t.goal_half = {0.05, 0.02};
      t.goal_radius = 0.035;
      t.min_separation = 0.04;
      t.push_step = 0.03;
      break;
  }
  return t;
}

SceneState reset(const TaskSpec& task, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5137 + static_cast<std::uint64_t>(task.id)));
  SceneState s;
  s.params = task.params;
  s.gripper.translation = {0.45, 0.0, 0.16};
  s.gripper_open = 1.0;
  s.goal_radius = task.goal_radius;

  Primitive obj;
  if (task.id == TaskId::pick_place) {
    obj.shape = Primitive::Shape::box;
    obj.half = {0.015, 0.015, 0.015};
    obj.graspable = true;
  } else {
    obj.shape = Primitive::Shape::sphere;
    obj.radius = 0.022;
  }
  obj.category = kCatObject;
  obj.movable = true;

  const double sx = task.region_half.x() * task.region_scale;
  const double sy = task.region_half.y() * task.region_scale;
  obj.position = {task.region_center.x() + rng.uniform(-sx, sx),
                  task.region_center.y() + rng.uniform(-sy, sy),
                  obj.rest_z()};
  s.objects.push_back(obj);

  Eigen::Vector2d goal{0, 0};
  for (int attempt = 0; attempt < 100; ++attempt) {
    goal = {task.region_center.x() + task.goal_offset.x() + rng.uniform(-task.goal_half.x(), task.goal_half.x()),
            task.region_center.y() + task.goal_offset.y() + rng.uniform(-task.goal_half.y(), task.goal_half.y())};
    if ((goal - obj.position.head<2>()).norm() >= task.min_separation) break;
  }
  s.goal_center = {goal.x(), goal.y(), 0.0};

  Primitive pad;
  pad.shape = Primitive::Shape::box;
  pad.half = {task.goal_radius, task.goal_radius, 0.001};
  pad.position = {goal.x(), goal.y(), 0.001};
  pad.category = kCatGoal;
  s.objects.push_back(pad);

  return s;
}

SceneState step(const SceneState& state, const Action& action) {
  SceneState s = state;
  const SimParams& p = s.params;

  Vector3d delta = action.delta;
  const double n = delta.norm();
  if (n > p.max_step) delta *= p.max_step / n;
  Vector3d g = s.gripper.translation + delta;
  g.z() = std::max(g.z(), p.table_z + p.gripper_radius);
  s.gripper.translation = g;

  const bool close = action.gripper > 0.0;
  if (close && s.attached < 0) {
    int best = -1;
    double best_d = p.grasp_radius;
    for (size_t i = 0; i < s.objects.size(); ++i) {
      const auto& o = s.objects[i];
      if (!o.graspable || !o.movable) continue;
      const double d = (o.position - g).norm();
      if (d <= best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      s.attached = best;
      s.attach_offset = s.objects[static_cast<size_t>(best)].position - g;
    }
  } else if (!close && s.attached >= 0) {
    auto& o = s.objects[static_cast<size_t>(s.attached)];
    o.position.z() = p.table_z + o.rest_z();  // released objects settle
    s.attached = -1;
  }
  s.gripper_open = close ? 0.0 : 1.0;

  if (s.attached >= 0) {
    auto& o = s.objects[static_cast<size_t>(s.attached)];
    o.position = g + s.attach_offset;
    o.position.z() = std::max(o.position.z(), p.table_z + o.rest_z());
  }

  // horizontal overlap resolution against the gripper sphere
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (static_cast<int>(i) == s.attached) continue;
    auto& o = s.objects[i];
    if (!o.movable) continue;
    const double dz = o.position.z() - g.z();
    double xy_needed;
    if (o.shape == Primitive::Shape::sphere) {
      const double r_sum = p.gripper_radius + o.radius;
      if (std::abs(dz) >= r_sum) continue;
      xy_needed = std::sqrt(r_sum * r_sum - dz * dz);
    } else {
      if (std::abs(dz) >= p.gripper_radius + o.contact_half_z()) continue;
      xy_needed = p.gripper_radius + o.contact_radius_xy();
    }
    Eigen::Vector2d diff = o.position.head<2>() - g.head<2>();
    const double d = diff.norm();
    if (d >= xy_needed) continue;
    const Eigen::Vector2d dir = d > 1e-12 ? Eigen::Vector2d(diff / d) : Eigen::Vector2d(1.0, 0.0);
    o.position.head<2>() = g.head<2>() + dir * xy_needed;
    o.position.z() = p.table_z + o.rest_z();
  }

  return s;
}

namespace {

constexpr double kRayEps = 1e-9;

// parameter along the unnormalized ray, equals camera z-depth
double hit_sphere(const Vector3d& o, const Vector3d& d, const Primitive& s) {
  const Vector3d oc = o - s.position;
  const double a = d.dot(d);
  const double b = 2.0 * d.dot(oc);
  const double c = oc.dot(oc) - s.radius * s.radius;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return -1.0;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  return t > kRayEps ? t : -1.0;
}

double hit_box(const Vector3d& o, const Vector3d& d, const Primitive& b) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = b.position[a] - b.half[a];
    const double hi = b.position[a] + b.half[a];
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi) return -1.0;
      continue;
    }
    double t1 = (lo - o[a]) / d[a];
    double t2 = (hi - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return -1.0;
  }
  return tmin > kRayEps ? tmin : -1.0;
}

}  // namespace

DepthMaskImage render(const SceneState& state, const PinholeCamera& cam) {
  cam.validate();
  DepthMaskImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.depth.assign(static_cast<size_t>(cam.width) * cam.height, 0.0);
  img.mask.assign(static_cast<size_t>(cam.width) * cam.height, 0);

  std::vector<Primitive> prims = state.objects;
  Primitive grip;
  grip.shape = Primitive::Shape::sphere;
  grip.position = state.gripper.translation;
  grip.radius = state.params.gripper_radius;
  grip.category = kCatGripper;
  prims.push_back(grip);

  const Eigen::Matrix3d r = cam.extrinsics.rotation.matrix();
  const Vector3d o = cam.extrinsics.translation;

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vector3d d = r * cam.pixel_ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      int cat = kCatBackground;
      bool hit = false;
      if (std::abs(d.z()) > 1e-15) {
        const double t = (state.params.table_z - o.z()) / d.z();
        if (t > kRayEps) {
          best = t;
          hit = true;
        }
      }
      for (const auto& pr : prims) {
        const double t = pr.shape == Primitive::Shape::sphere ? hit_sphere(o, d, pr) : hit_box(o, d, pr);
        if (t > 0 && t < best) {
          best = t;
          cat = pr.category;
          hit = true;
        }
      }
      if (hit) {
        img.depth[static_cast<size_t>(v) * cam.width + u] = best;
        img.mask[static_cast<size_t>(v) * cam.width + u] = cat;
      }
    }
  }
  return img;
}

bool any_foreground(const DepthMaskImage& img) {
  for (int m : img.mask) {
    if (m != 0) return true;
  }
  return false;
}

bool success(const SceneState& state, const TaskSpec& task) {
  const auto& obj = state.objects.front();
  const double xy = (obj.position.head<2>() - state.goal_center.head<2>()).norm();
  if (task.id == TaskId::pick_place) {
    const bool resting = std::abs(obj.position.z() - (state.params.table_z + obj.rest_z())) <= 1e-6;
    return state.attached < 0 && resting && xy <= state.goal_radius;
  }
  return xy <= state.goal_radius;
}

bool strict_success(const SceneState& state, const TaskSpec& task) {
  const auto& obj = state.objects.front();
  const double xy = (obj.position.head<2>() - state.goal_center.head<2>()).norm();
  if (task.id == TaskId::pick_place) {
    const bool resting = std::abs(obj.position.z() - (state.params.table_z + obj.rest_z())) <= 1e-6;
    return state.attached < 0 && resting && xy <= 0.5 * state.goal_radius;
  }
  return xy <= 0.5 * state.goal_radius;
}

namespace {

Action move_towards(const SceneState& s, const Vector3d& target, double speed, double grip_cmd) {
  Action a;
  Vector3d d = target - s.gripper.translation;
  const double n = d.norm();
  if (n > speed) d *= speed / n;
  a.delta = d;
  a.gripper = grip_cmd;
  return a;
}

Action push_like_expert(const SceneState& s, const TaskSpec& task) {
  const auto& obj = s.objects.front();
  const Vector3d g = s.gripper.translation;

  Eigen::Vector2d dir = s.goal_center.head<2>() - obj.position.head<2>();
  const double dist_to_goal = dir.norm();
  dir = dist_to_goal > 1e-9 ? Eigen::Vector2d(dir / dist_to_goal) : Eigen::Vector2d(1.0, 0.0);

  const double contact = s.params.gripper_radius + obj.radius;
  const Eigen::Vector2d behind = obj.position.head<2>() - dir * (contact + task.approach_clearance);
  const double push_z = s.params.table_z + obj.rest_z();

  const bool aligned = (g.head<2>() - behind).norm() <= task.align_tol;
  if (!aligned) {
    if (g.z() < task.travel_z - 1e-9) {
      // rise before traversing so the gripper never ploughs through the scene
      return move_towards(s, {g.x(), g.y(), task.travel_z}, s.params.max_step, -1.0);
    }
    return move_towards(s, {behind.x(), behind.y(), task.travel_z}, s.params.max_step, -1.0);
  }
  if (g.z() > push_z + 1e-9) {
    return move_towards(s, {behind.x(), behind.y(), push_z}, s.params.max_step, -1.0);
  }
  return move_towards(s, {g.x() + dir.x() * task.push_step, g.y() + dir.y() * task.push_step, push_z},
                      task.push_step, -1.0);
}

Action pick_place_expert(const SceneState& s, const TaskSpec& task) {
  const auto& obj = s.objects.front();
  const Vector3d g = s.gripper.translation;

  if (s.attached >= 0) {
    const double xy_err = (g.head<2>() - s.goal_center.head<2>()).norm();
    if (xy_err > 0.004) {
      if (g.z() < task.carry_z - 1e-9) {
        return move_towards(s, {g.x(), g.y(), task.carry_z}, s.params.max_step, 1.0);
      }
      return move_towards(s, {s.goal_center.x(), s.goal_center.y(), task.carry_z}, s.params.max_step, 1.0);
    }
    if (g.z() > task.place_z + 1e-9) {
      return move_towards(s, {s.goal_center.x(), s.goal_center.y(), task.place_z}, s.params.max_step, 1.0);
    }
    Action release;
    release.gripper = -1.0;
    return release;
  }

  const double xy_err = (g.head<2>() - obj.position.head<2>()).norm();
  if (xy_err > 0.004) {
    if (g.z() < task.hover_z - 1e-9) {
      return move_towards(s, {g.x(), g.y(), task.hover_z}, s.params.max_step, -1.0);
    }
    return move_towards(s, {obj.position.x(), obj.position.y(), task.hover_z}, s.params.max_step, -1.0);
  }
  if (g.z() > task.grasp_z + 1e-9) {
    return move_towards(s, {obj.position.x(), obj.position.y(), task.grasp_z}, s.params.max_step, -1.0);
  }
  Action grasp;
  grasp.gripper = 1.0;
  return grasp;
}

}  // namespace

Action scripted_expert(const SceneState& state, const TaskSpec& task) {
  if (strict_success(state, task)) {
    Action idle;
    idle.gripper = task.id == TaskId::pick_place ? -1.0 : -1.0;
    return idle;
  }
  return task.id == TaskId::pick_place ? pick_place_expert(state, task) : push_like_expert(state, task);
}

PinholeCamera lookat_camera(const Vector3d& eye, const Vector3d& target, double focal, int width, int height) {
  const Vector3d fwd = (target - eye).normalized();
  Vector3d down(0, 0, -1);
  down -= down.dot(fwd) * fwd;
  if (down.norm() < 1e-9) down = Vector3d(0, 1, 0) - Vector3d(0, 1, 0).dot(fwd) * fwd;
  down.normalize();
  const Vector3d right = down.cross(fwd);
  Eigen::Matrix3d m;
  m.col(0) = right;
  m.col(1) = down;
  m.col(2) = fwd;

  PinholeCamera cam;
  cam.fx = cam.fy = focal;
  cam.width = width;
  cam.height = height;
  cam.cx = (width - 1) / 2.0;
  cam.cy = (height - 1) / 2.0;
  cam.extrinsics.rotation = geom::Rotation3::from_matrix(m);
  cam.extrinsics.translation = eye;
  return cam;
}

PinholeCamera default_camera() {
  return lookat_camera({0.45, -0.42, 0.62}, {0.45, -0.02, 0.0}, 90.0, 128, 128);
}

PinholeCamera perturb_camera(const PinholeCamera& cam, CameraDof dof, double magnitude) {
  const bool translation = dof == CameraDof::tx || dof == CameraDof::ty || dof == CameraDof::tz;
  if (translation && std::abs(magnitude) > 0.3) {
    throw std::invalid_argument("perturb_camera: translation beyond 0.3 m");
  }
  if (!translation && std::abs(magnitude) > 0.7853981633974484) {
    throw std::invalid_argument("perturb_camera: rotation beyond 45 degrees");
  }
  geom::RigidTransform offset;
  switch (dof) {
    case CameraDof::tx: offset.translation = {magnitude, 0, 0}; break;
    case CameraDof::ty: offset.translation = {0, magnitude, 0}; break;
    case CameraDof::tz: offset.translation = {0, 0, magnitude}; break;
    case CameraDof::rx: offset.rotation = geom::rot_axis_angle({1, 0, 0}, magnitude); break;
    case CameraDof::ry: offset.rotation = geom::rot_axis_angle({0, 1, 0}, magnitude); break;
    case CameraDof::rz: offset.rotation = geom::rot_axis_angle({0, 0, 1}, magnitude); break;
  }
  PinholeCamera out = cam;
  out.extrinsics = geom::compose(cam.extrinsics, offset);
  return out;
}

}  // namespace eqmanip::sim
