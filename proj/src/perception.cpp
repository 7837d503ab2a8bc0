#include "eqmanip/perception.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "eqmanip/errors.hpp"
#include "eqmanip/rng.hpp"

namespace eqmanip::perception {

void PinholeCamera::validate() const {
  if (fx <= 0 || fy <= 0) throw std::invalid_argument("PinholeCamera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("PinholeCamera: bad image size");
  if (cx < 0 || cx >= width || cy < 0 || cy >= height) {
    throw std::invalid_argument("PinholeCamera: principal point outside image");
  }
}

Vector3d PinholeCamera::project(const Vector3d& world) const {
  const Vector3d pc = extrinsics.inverted().apply(world);
  return {pc.x() / pc.z() * fx + cx, pc.y() / pc.z() * fy + cy, pc.z()};
}

LabeledPointCloud backproject(const DepthMaskImage& img, const PinholeCamera& cam) {
  cam.validate();
  if (img.width != cam.width || img.height != cam.height) {
    throw std::invalid_argument("backproject: image/camera size mismatch");
  }
  Eigen::Index n = 0;
  for (double d : img.depth) {
    if (d > 0.0) ++n;
  }
  if (n == 0) throw EmptyCloudError("backproject: no valid depth pixels");

  LabeledPointCloud out;
  out.points.resize(n, 3);
  out.categories.resize(static_cast<size_t>(n));
  out.frame = Frame::world;

  const Eigen::Matrix3d r = cam.extrinsics.rotation.matrix();
  const Vector3d t = cam.extrinsics.translation;
  Eigen::Index i = 0;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double d = img.depth_at(u, v);
      if (d <= 0.0) continue;
      const Vector3d pw = r * cam.camera_point(u, v, d) + t;
      out.points.row(i) = pw.transpose();
      out.categories[static_cast<size_t>(i)] = img.mask_at(u, v);
      ++i;
    }
  }
  return out;
}

LabeledPointCloud to_gripper_frame(const LabeledPointCloud& cloud, const RigidTransform& gripper_world) {
  if (cloud.frame != Frame::world) {
    throw std::logic_error("to_gripper_frame: input cloud must be in the world frame");
  }
  LabeledPointCloud out = geom::apply_transform(gripper_world.inverted(), cloud);
  out.frame = Frame::gripper;
  return out;
}

namespace {

struct CategoryGroup {
  int id = 0;
  std::vector<int> indices;  // into the source cloud, scan order
};

LabeledPointCloud gather(const LabeledPointCloud& cloud, const std::vector<int>& idx) {
  LabeledPointCloud out;
  out.points.resize(static_cast<Eigen::Index>(idx.size()), 3);
  out.categories.resize(idx.size());
  out.frame = cloud.frame;
  for (size_t i = 0; i < idx.size(); ++i) {
    out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(idx[i]);
    out.categories[i] = cloud.categories[static_cast<size_t>(idx[i])];
  }
  return out;
}

PointMatrix rows_of(const LabeledPointCloud& cloud, const std::vector<int>& idx) {
  PointMatrix m(static_cast<Eigen::Index>(idx.size()), 3);
  for (size_t i = 0; i < idx.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = cloud.points.row(idx[i]);
  }
  return m;
}

}  // namespace

LabeledPointCloud category_balanced_sample(const LabeledPointCloud& cloud, int budget, std::uint64_t seed) {
  if (cloud.size() == 0) throw EmptyCloudError("category_balanced_sample: empty cloud");

  std::map<int, CategoryGroup> groups;  // ordered by category ID
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const int c = cloud.categories[static_cast<size_t>(i)];
    auto& g = groups[c];
    g.id = c;
    g.indices.push_back(static_cast<int>(i));
  }
  const int ncat = static_cast<int>(groups.size());
  if (budget < ncat) {
    throw std::invalid_argument("category_balanced_sample: budget below category count");
  }

  // Equal quotas; remainder goes to the lowest category IDs.
  std::vector<const CategoryGroup*> cats;
  cats.reserve(groups.size());
  for (auto& [id, g] : groups) cats.push_back(&g);

  std::vector<int> quota(cats.size(), budget / ncat);
  for (int i = 0; i < budget % ncat; ++i) quota[static_cast<size_t>(i)] += 1;

  // Underfull categories donate their deficit to the remaining ones; repeat
  // until quotas are feasible or every category is capped at its size.
  std::vector<bool> capped(cats.size(), false);
  while (true) {
    long deficit = 0;
    std::vector<size_t> open;
    for (size_t i = 0; i < cats.size(); ++i) {
      if (capped[i]) continue;
      const long have = static_cast<long>(cats[i]->indices.size());
      if (have < quota[i]) {
        deficit += quota[i] - have;
        quota[i] = static_cast<int>(have);
        capped[i] = true;
      } else {
        open.push_back(i);
      }
    }
    if (deficit == 0 || open.empty()) break;
    const long base = deficit / static_cast<long>(open.size());
    const long rem = deficit % static_cast<long>(open.size());
    for (size_t j = 0; j < open.size(); ++j) {
      quota[open[j]] += static_cast<int>(base + (static_cast<long>(j) < rem ? 1 : 0));
    }
  }

  // Selection per category in FPS order.
  std::vector<int> selected;
  selected.reserve(static_cast<size_t>(budget));
  long total_quota = 0;
  for (size_t i = 0; i < cats.size(); ++i) total_quota += quota[i];

  if (total_quota >= budget) {
    for (size_t i = 0; i < cats.size(); ++i) {
      if (quota[i] == 0) continue;
      const PointMatrix pts = rows_of(cloud, cats[i]->indices);
      const auto order = geom::farthest_point_sample(pts, quota[i], mix_seed(seed, static_cast<std::uint64_t>(cats[i]->id)));
      for (int local : order) selected.push_back(cats[i]->indices[static_cast<size_t>(local)]);
    }
  } else {
    // Cloud smaller than the budget: cycle full FPS orders until filled.
    std::vector<int> cycle;
    for (size_t i = 0; i < cats.size(); ++i) {
      const PointMatrix pts = rows_of(cloud, cats[i]->indices);
      const auto order = geom::farthest_point_sample(pts, static_cast<int>(cats[i]->indices.size()),
                                                     mix_seed(seed, static_cast<std::uint64_t>(cats[i]->id)));
      for (int local : order) cycle.push_back(cats[i]->indices[static_cast<size_t>(local)]);
    }
    for (int i = 0; i < budget; ++i) selected.push_back(cycle[static_cast<size_t>(i) % cycle.size()]);
  }

  return gather(cloud, selected);
}

LabeledPointCloud uniform_sample(const LabeledPointCloud& cloud, int budget, std::uint64_t seed) {
  if (cloud.size() == 0) throw EmptyCloudError("uniform_sample: empty cloud");
  std::vector<int> selected;
  if (cloud.size() >= budget) {
    selected = geom::farthest_point_sample(cloud.points, budget, seed);
  } else {
    const auto order = geom::farthest_point_sample(cloud.points, static_cast<int>(cloud.size()), seed);
    for (int i = 0; i < budget; ++i) selected.push_back(order[static_cast<size_t>(i) % order.size()]);
  }
  return gather(cloud, selected);
}

LabeledPointCloud sgp_pipeline(const DepthMaskImage& img, const PinholeCamera& cam,
                               const RigidTransform& gripper_world, const SgpOptions& opt) {
  LabeledPointCloud cloud = backproject(img, cam);
  if (opt.gripper_frame) {
    cloud = to_gripper_frame(cloud, gripper_world);
  }
  if (opt.crop_radius > 0.0) {
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      if (cloud.points.row(i).norm() <= opt.crop_radius) keep.push_back(static_cast<int>(i));
    }
    if (keep.empty()) throw EmptyCloudError("sgp_pipeline: crop removed every point");
    LabeledPointCloud cropped;
    cropped.points.resize(static_cast<Eigen::Index>(keep.size()), 3);
    cropped.categories.resize(keep.size());
    cropped.frame = cloud.frame;
    for (size_t i = 0; i < keep.size(); ++i) {
      cropped.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(keep[i]);
      cropped.categories[i] = cloud.categories[static_cast<size_t>(keep[i])];
    }
    cloud = std::move(cropped);
  }
  return opt.balanced ? category_balanced_sample(cloud, opt.budget, opt.seed)
                      : uniform_sample(cloud, opt.budget, opt.seed);
}

}  // namespace eqmanip::perception
