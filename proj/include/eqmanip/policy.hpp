#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eqmanip/cloud.hpp"
#include "eqmanip/geom.hpp"
#include "eqmanip/netcore.hpp"
#include "eqmanip/rng.hpp"

namespace eqmanip::policy {

using Eigen::VectorXd;
using geom::Rot6;
using geom::Vector3d;

enum class ScheduleKind { linear, squaredcos };

// Per-step diffusion coefficients. Index i holds step k = timestep[i]; for a
// freshly built schedule timestep[i] = i + 1.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;   // cumulative product of (1 - beta)
  std::vector<double> alpha_hat;   // sqrt(alpha_bar), signal coefficient
  std::vector<double> beta_hat;    // sqrt(1 - alpha_bar), noise coefficient
  std::vector<double> alpha;       // reverse-step scale
  std::vector<double> gamma;       // reverse-step prediction weight
  std::vector<double> sigma;       // reverse-step noise level
  std::vector<int> timestep;       // conditioning step index, 1-based

  // Evenly strided sub-schedule with n steps; conditioning indices stay on
  // the original grid so timestep embeddings match training.
  NoiseSchedule strided(int n) const;
};

NoiseSchedule make_schedule(int steps, double beta_min, double beta_max, ScheduleKind kind);

// Gripper pose: position plus 6-dim rotation encoding. The open/close state
// travels with observations but is not part of the 9-dim policy input.
struct GripperPose {
  Vector3d position = Vector3d::Zero();
  Rot6 orientation = (Rot6() << 1, 0, 0, 0, 1, 0).finished();
  double open_state = 1.0;

  Eigen::Matrix<double, 9, 1> to_input() const {
    Eigen::Matrix<double, 9, 1> v;
    v.head<3>() = position;
    v.tail<6>() = orientation;
    return v;
  }
};

// Horizon-length action sequence. Each step: relative translation (meters)
// plus gripper command in [-1, 1] (positive closes).
struct ActionChunk {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> deltas;
  Eigen::VectorXd gripper;

  int horizon() const { return static_cast<int>(deltas.rows()); }
  VectorXd flatten() const;
  static ActionChunk from_flat(const VectorXd& v, int horizon);
  static ActionChunk zeros(int horizon);
};

// a_k = alpha_hat_k * a0 + beta_hat_k * eps, elementwise on flattened chunks.
VectorXd add_noise(const VectorXd& a0, const VectorXd& eps, int k, const NoiseSchedule& sched);

struct Observation {
  LabeledPointCloud cloud;
  GripperPose pose;
};

// Rotation-safe normalization: translation components share one symmetric
// scale (max delta norm over the training set); gripper commands already
// live in [-1, 1].
struct ActionNormalizer {
  double delta_scale = 1.0;

  static ActionNormalizer fit(const std::vector<ActionChunk>& chunks);
  VectorXd normalize(const ActionChunk& chunk) const;
  ActionChunk denormalize(const VectorXd& flat, int horizon) const;
};

struct PolicyConfig {
  int horizon = 4;
  int obs_steps = 2;
  int action_steps = 4;
  int point_budget = 1024;
  int num_categories = 4;
  int point_hidden0 = 64;
  int point_hidden1 = 128;
  int cloud_feature_dim = 64;
  int pose_feature_dim = 64;
  std::vector<int> denoiser_hidden = {256, 256};
  int time_embed_dim = 32;
  int train_steps = 50;
  int inference_steps = 10;
  double beta_min = 1e-4;
  double beta_max = 0.3;
  ScheduleKind kind = ScheduleKind::squaredcos;
  Frame cloud_frame = Frame::gripper;

  int action_dim() const { return horizon * 4; }
  int cond_dim() const { return obs_steps * (cloud_feature_dim + pose_feature_dim); }
  int denoiser_input_dim() const { return action_dim() + time_embed_dim + cond_dim(); }
};

VectorXd timestep_embedding(int k, int dim);

struct TrainingSample {
  std::vector<Observation> obs;  // obs_steps entries, oldest first
  ActionChunk actions;
};

// Encoders E and P plus denoiser U over one parameter store.
class PolicyBundle {
 public:
  PolicyBundle() = default;

  static PolicyBundle create(const PolicyConfig& cfg, std::uint64_t init_seed);
  // Rebuilds the module bindings over an externally restored store.
  static PolicyBundle bind(const PolicyConfig& cfg, net::ParamStore store);

  const PolicyConfig& config() const { return cfg_; }
  net::ParamStore& store() { return store_; }
  const net::ParamStore& store() const { return store_; }
  const NoiseSchedule& schedule() const { return sched_; }

  ActionNormalizer& normalizer() { return norm_; }
  const ActionNormalizer& normalizer() const { return norm_; }

  VectorXd encode_observation(const std::vector<Observation>& obs) const;
  VectorXd denoiser_predict(const VectorXd& noised, int k, const VectorXd& cond) const;

  // Mean squared error between sampled noise and the denoiser prediction,
  // k uniform in [1, K] per sample. Accumulates gradients when with_grad.
  double training_loss(const std::vector<TrainingSample>& batch, Rng& rng, bool with_grad);

  // Loss with injected step/noise draws; used by gradient checks.
  double training_loss_fixed(const std::vector<TrainingSample>& batch, const std::vector<int>& ks,
                             const std::vector<VectorXd>& epses, bool with_grad);

  ActionChunk sample_actions(const std::vector<Observation>& obs, Rng& rng, bool deterministic) const;

 private:
  PolicyConfig cfg_;
  net::ParamStore store_;
  net::PointNetEncoder enc_cloud_;
  net::Mlp enc_pose_;
  net::Mlp denoiser_;
  NoiseSchedule sched_;
  ActionNormalizer norm_;
};

using DenoiserFn = std::function<VectorXd(const VectorXd& noised, int k, const VectorXd& cond)>;

// Denoising MSE for one prepared sample under an arbitrary denoiser; the
// reference path for loss tests and stubs.
double denoising_mse(const DenoiserFn& u, const NoiseSchedule& sched, const VectorXd& a0, int k,
                     const VectorXd& eps, const VectorXd& cond);

// Reverse process under an arbitrary denoiser, starting from `init` noise.
VectorXd reverse_sample(const DenoiserFn& u, const NoiseSchedule& sched, const VectorXd& init,
                        const VectorXd& cond, Rng& rng, bool deterministic);

}  // namespace eqmanip::policy
