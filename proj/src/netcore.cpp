#include "eqmanip/netcore.hpp"

#include <cmath>
#include <stdexcept>

namespace eqmanip::net {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double activate(Activation a, double x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::gelu: return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    case Activation::tanh_: return std::tanh(x);
  }
  return x;
}

double activate_grad(Activation a, double x) {
  switch (a) {
    case Activation::linear: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::gelu: {
      const double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      return phi + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    }
    case Activation::tanh_: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

int ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore::add: duplicate name " + name);
  Param p;
  p.name = name;
  p.value = Eigen::MatrixXd::Zero(rows, cols);
  p.grad = Eigen::MatrixXd::Zero(rows, cols);
  p.m = Eigen::MatrixXd::Zero(rows, cols);
  p.v = Eigen::MatrixXd::Zero(rows, cols);
  params_.push_back(std::move(p));
  const int id = static_cast<int>(params_.size()) - 1;
  index_[name] = id;
  return id;
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

long ParamStore::total_size() const {
  long n = 0;
  for (const auto& p : params_) n += static_cast<long>(p.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++adam_steps_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_steps_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_steps_));
  for (auto& p : params_) {
    p.m = beta1 * p.m + (1.0 - beta1) * p.grad;
    p.v = beta2 * p.v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    const Eigen::MatrixXd m_hat = p.m / c1;
    const Eigen::MatrixXd v_hat = p.v / c2;
    p.value.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + eps);
    p.grad.setZero();
  }
}

NetSpec NetSpec::make(std::vector<int> dims, Activation hidden, Activation output) {
  NetSpec s;
  s.dims = std::move(dims);
  if (s.dims.size() < 2) throw std::invalid_argument("NetSpec: need at least input and output dims");
  s.acts.assign(s.dims.size() - 1, hidden);
  s.acts.back() = output;
  s.validate();
  return s;
}

void NetSpec::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("NetSpec: need at least two dims");
  if (acts.size() != dims.size() - 1) throw std::invalid_argument("NetSpec: one activation per layer required");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("NetSpec: dims must be positive");
  }
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, NetSpec spec, Rng& init) : spec_(std::move(spec)) {
  spec_.validate();
  for (size_t l = 0; l + 1 < spec_.dims.size(); ++l) {
    const int in = spec_.dims[l];
    const int out = spec_.dims[l + 1];
    const int w = store.add(prefix + ".w" + std::to_string(l), in, out);
    const int b = store.add(prefix + ".b" + std::to_string(l), 1, out);
    // fan-in scaled uniform init, biases zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    auto& wm = store.param(w).value;
    for (int j = 0; j < out; ++j) {
      for (int i = 0; i < in; ++i) {
        wm(i, j) = init.uniform(-bound, bound);
      }
    }
    w_ids_.push_back(w);
    b_ids_.push_back(b);
  }
}

Mlp Mlp::bind(const ParamStore& store, const std::string& prefix, NetSpec spec) {
  Mlp mlp;
  mlp.spec_ = std::move(spec);
  mlp.spec_.validate();
  for (size_t l = 0; l + 1 < mlp.spec_.dims.size(); ++l) {
    const int w = store.find(prefix + ".w" + std::to_string(l));
    const int b = store.find(prefix + ".b" + std::to_string(l));
    if (w < 0 || b < 0) throw std::invalid_argument("Mlp::bind: missing parameters for " + prefix);
    const auto& wm = store.param(w).value;
    if (wm.rows() != mlp.spec_.dims[l] || wm.cols() != mlp.spec_.dims[l + 1]) {
      throw std::invalid_argument("Mlp::bind: shape mismatch for " + prefix);
    }
    mlp.w_ids_.push_back(w);
    mlp.b_ids_.push_back(b);
  }
  return mlp;
}

Eigen::MatrixXd Mlp::forward(const ParamStore& store, const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.cols() != spec_.input_dim()) {
    throw std::invalid_argument("Mlp::forward: input dim mismatch");
  }
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
    cache->valid = true;
  }
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l < w_ids_.size(); ++l) {
    const auto& w = store.param(w_ids_[l]).value;
    const auto& b = store.param(b_ids_[l]).value;
    Eigen::MatrixXd pre = h * w;
    pre.rowwise() += b.row(0);
    Eigen::MatrixXd post = pre.unaryExpr([a = spec_.acts[l]](double v) { return activate(a, v); });
    if (cache) {
      cache->pre.push_back(pre);
      cache->post.push_back(post);
    }
    h = std::move(post);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(ParamStore& store, const Cache& cache, const Eigen::MatrixXd& d_out) const {
  if (!cache.valid) throw std::logic_error("Mlp::backward: forward cache missing");
  Eigen::MatrixXd d = d_out;
  for (size_t li = w_ids_.size(); li-- > 0;) {
    const Eigen::MatrixXd& pre = cache.pre[li];
    Eigen::MatrixXd d_pre(d.rows(), d.cols());
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        d_pre(i, j) = d(i, j) * activate_grad(spec_.acts[li], pre(i, j));
      }
    }
    const Eigen::MatrixXd& x = (li == 0) ? cache.input : cache.post[li - 1];
    store.param(w_ids_[li]).grad.noalias() += x.transpose() * d_pre;
    store.param(b_ids_[li]).grad.row(0) += d_pre.colwise().sum();
    d.noalias() = d_pre * store.param(w_ids_[li]).value.transpose();
  }
  return d;
}

PointNetEncoder::PointNetEncoder(ParamStore& store, const std::string& prefix, PointNetSpec spec, Rng& init)
    : spec_(spec),
      per_point_(store, prefix + ".pp",
                 NetSpec::make({spec.input_dim(), spec.point_hidden0, spec.point_hidden1},
                               Activation::gelu, Activation::gelu),
                 init),
      project_(store, prefix + ".proj",
               NetSpec::make({spec.point_hidden1, spec.out_dim}, Activation::linear, Activation::linear),
               init) {}

PointNetEncoder PointNetEncoder::bind(const ParamStore& store, const std::string& prefix, PointNetSpec spec) {
  PointNetEncoder e;
  e.spec_ = spec;
  e.per_point_ = Mlp::bind(store, prefix + ".pp",
                           NetSpec::make({spec.input_dim(), spec.point_hidden0, spec.point_hidden1},
                                         Activation::gelu, Activation::gelu));
  e.project_ = Mlp::bind(store, prefix + ".proj",
                         NetSpec::make({spec.point_hidden1, spec.out_dim}, Activation::linear, Activation::linear));
  return e;
}

Eigen::MatrixXd PointNetEncoder::build_input(const LabeledPointCloud& cloud) const {
  const Eigen::Index n = cloud.size();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, spec_.input_dim());
  x.leftCols<3>() = cloud.points;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = cloud.categories[static_cast<size_t>(i)];
    if (c < 0 || c >= spec_.num_categories) {
      throw std::invalid_argument("PointNetEncoder: category ID outside declared set");
    }
    x(i, 3 + c) = 1.0;
  }
  return x;
}

Eigen::VectorXd PointNetEncoder::encode(const ParamStore& store, const LabeledPointCloud& cloud, Cache* cache) const {
  if (cloud.frame != spec_.expected_frame) {
    throw std::invalid_argument("PointNetEncoder: cloud frame mismatch");
  }
  if (cloud.size() != spec_.expected_points) {
    throw std::invalid_argument("PointNetEncoder: point count mismatch");
  }
  const Eigen::MatrixXd x = build_input(cloud);

  Cache local;
  Cache* c = cache ? cache : &local;
  const Eigen::MatrixXd h = per_point_.forward(store, x, &c->per_point);

  // channelwise max pool; first row wins ties so results are reproducible
  Eigen::MatrixXd pooled(1, h.cols());
  c->argmax.assign(static_cast<size_t>(h.cols()), 0);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    Eigen::Index best = 0;
    double bv = h(0, j);
    for (Eigen::Index i = 1; i < h.rows(); ++i) {
      if (h(i, j) > bv) {
        bv = h(i, j);
        best = i;
      }
    }
    pooled(0, j) = bv;
    c->argmax[static_cast<size_t>(j)] = static_cast<int>(best);
  }

  const Eigen::MatrixXd y = project_.forward(store, pooled, &c->project);
  c->valid = true;
  return y.row(0).transpose();
}

Eigen::MatrixXd PointNetEncoder::backward(ParamStore& store, const Cache& cache, const Eigen::VectorXd& d_feature) const {
  if (!cache.valid) throw std::logic_error("PointNetEncoder::backward: forward cache missing");
  const Eigen::MatrixXd d_pooled = project_.backward(store, cache.project, d_feature.transpose());

  const Eigen::Index n = cache.per_point.input.rows();
  Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(n, d_pooled.cols());
  for (Eigen::Index j = 0; j < d_pooled.cols(); ++j) {
    d_h(cache.argmax[static_cast<size_t>(j)], j) = d_pooled(0, j);
  }
  return per_point_.backward(store, cache.per_point, d_h);
}

}  // namespace eqmanip::net
