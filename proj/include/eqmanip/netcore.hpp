#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqmanip/cloud.hpp"
#include "eqmanip/rng.hpp"

namespace eqmanip::net {

enum class Activation { linear, relu, gelu, tanh_ };

double activate(Activation a, double x);
double activate_grad(Activation a, double x);  // derivative at pre-activation x

struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;  // Adam first moment
  Eigen::MatrixXd v;  // Adam second moment
};

// Named parameter arrays with matching gradient buffers and optimizer state.
// Single writer during training; read-only use may be shared.
class ParamStore {
 public:
  int add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  int find(const std::string& name) const;  // -1 when absent

  Param& param(int id) { return params_[static_cast<size_t>(id)]; }
  const Param& param(int id) const { return params_[static_cast<size_t>(id)]; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

  long total_size() const;
  void zero_grad();

  // Standard Adam with bias correction; gradients are zeroed after the step.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  long adam_steps() const { return adam_steps_; }
  void set_adam_steps(long t) { adam_steps_ = t; }

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, int> index_;
  long adam_steps_ = 0;
};

struct NetSpec {
  std::vector<int> dims;          // [input, hidden..., output]
  std::vector<Activation> acts;   // one per layer

  static NetSpec make(std::vector<int> dims, Activation hidden, Activation output);
  void validate() const;
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

// Dense feed-forward net. Batches are row vectors: x is (batch x input_dim).
class Mlp {
 public:
  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
    std::vector<Eigen::MatrixXd> post;  // post-activation per layer
    bool valid = false;
  };

  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, NetSpec spec, Rng& init);

  // Binds to parameters previously created with the same prefix/spec
  // (checkpoint loading path).
  static Mlp bind(const ParamStore& store, const std::string& prefix, NetSpec spec);

  Eigen::MatrixXd forward(const ParamStore& store, const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  // Accumulates parameter gradients and returns the input gradient.
  Eigen::MatrixXd backward(ParamStore& store, const Cache& cache, const Eigen::MatrixXd& d_out) const;

  const NetSpec& spec() const { return spec_; }

 private:
  NetSpec spec_;
  std::vector<int> w_ids_, b_ids_;
};

struct PointNetSpec {
  int num_categories = 4;
  int point_hidden0 = 64;
  int point_hidden1 = 128;
  int out_dim = 64;
  int expected_points = 1024;
  Frame expected_frame = Frame::gripper;

  int input_dim() const { return 3 + num_categories; }
};

// Shared per-point MLP on (xyz, one-hot category), channelwise max pool,
// linear projection. Exactly permutation invariant by construction.
class PointNetEncoder {
 public:
  struct Cache {
    Mlp::Cache per_point;
    Mlp::Cache project;
    std::vector<int> argmax;  // winning row per pooled channel
    bool valid = false;
  };

  PointNetEncoder() = default;
  PointNetEncoder(ParamStore& store, const std::string& prefix, PointNetSpec spec, Rng& init);
  static PointNetEncoder bind(const ParamStore& store, const std::string& prefix, PointNetSpec spec);

  Eigen::MatrixXd build_input(const LabeledPointCloud& cloud) const;  // N x (3+C)

  Eigen::VectorXd encode(const ParamStore& store, const LabeledPointCloud& cloud, Cache* cache = nullptr) const;

  // Accumulates parameter gradients; returns gradient w.r.t. the per-point
  // input rows (N x (3+C)).
  Eigen::MatrixXd backward(ParamStore& store, const Cache& cache, const Eigen::VectorXd& d_feature) const;

  const PointNetSpec& spec() const { return spec_; }

 private:
  PointNetSpec spec_;
  Mlp per_point_, project_;
};

}  // namespace eqmanip::net
