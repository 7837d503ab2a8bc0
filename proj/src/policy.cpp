#include "eqmanip/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace eqmanip::policy {

namespace {

std::vector<double> beta_sequence(int steps, double beta_min, double beta_max, ScheduleKind kind) {
  std::vector<double> beta(static_cast<size_t>(steps));
  if (kind == ScheduleKind::linear) {
    for (int i = 0; i < steps; ++i) {
      const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
      beta[static_cast<size_t>(i)] = beta_min + (beta_max - beta_min) * f;
    }
  } else {
    // squared-cosine alpha_bar curve, converted to per-step betas
    const double s = 0.008;
    auto f = [&](double t) {
      const double x = (t / steps + s) / (1.0 + s) * 1.5707963267948966;
      const double c = std::cos(x);
      return c * c;
    };
    const double f0 = f(0.0);
    double prev = 1.0;
    for (int k = 1; k <= steps; ++k) {
      const double ab = f(static_cast<double>(k)) / f0;
      double b = 1.0 - ab / prev;
      b = std::min(b, 0.999);
      beta[static_cast<size_t>(k - 1)] = b;
      prev *= (1.0 - b);
    }
  }
  return beta;
}

void fill_from_beta(NoiseSchedule& s) {
  const int n = s.steps;
  s.alpha_bar.resize(static_cast<size_t>(n));
  s.alpha_hat.resize(static_cast<size_t>(n));
  s.beta_hat.resize(static_cast<size_t>(n));
  s.alpha.resize(static_cast<size_t>(n));
  s.gamma.resize(static_cast<size_t>(n));
  s.sigma.resize(static_cast<size_t>(n));
  double ab = 1.0;
  for (int i = 0; i < n; ++i) {
    const double b = s.beta[static_cast<size_t>(i)];
    const double prev_ab = ab;
    ab *= (1.0 - b);
    s.alpha_bar[static_cast<size_t>(i)] = ab;
    s.alpha_hat[static_cast<size_t>(i)] = std::sqrt(ab);
    s.beta_hat[static_cast<size_t>(i)] = std::sqrt(1.0 - ab);
    s.alpha[static_cast<size_t>(i)] = 1.0 / std::sqrt(1.0 - b);
    s.gamma[static_cast<size_t>(i)] = b / std::sqrt(1.0 - ab);
    // posterior variance; zero at the first step where prev_ab == 1
    s.sigma[static_cast<size_t>(i)] = std::sqrt(b * (1.0 - prev_ab) / (1.0 - ab));
  }
}

}  // namespace

NoiseSchedule make_schedule(int steps, double beta_min, double beta_max, ScheduleKind kind) {
  if (steps < 1) throw std::invalid_argument("make_schedule: steps must be >= 1");
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0)) {
    throw std::invalid_argument("make_schedule: need 0 < beta_min < beta_max < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta = beta_sequence(steps, beta_min, beta_max, kind);
  s.timestep.resize(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i) s.timestep[static_cast<size_t>(i)] = i + 1;
  fill_from_beta(s);
  return s;
}

NoiseSchedule NoiseSchedule::strided(int n) const {
  if (n < 1 || n > steps) throw std::invalid_argument("NoiseSchedule::strided: bad step count");
  NoiseSchedule s;
  s.steps = n;
  s.beta.resize(static_cast<size_t>(n));
  s.timestep.resize(static_cast<size_t>(n));
  int prev_t = 0;
  double prev_ab = 1.0;
  for (int j = 1; j <= n; ++j) {
    int t = static_cast<int>(std::llround(static_cast<double>(j) * steps / n));
    t = std::max(t, prev_t + 1);
    const double ab = alpha_bar[static_cast<size_t>(t - 1)];
    s.beta[static_cast<size_t>(j - 1)] = 1.0 - ab / prev_ab;
    s.timestep[static_cast<size_t>(j - 1)] = t;
    prev_t = t;
    prev_ab = ab;
  }
  fill_from_beta(s);
  return s;
}

VectorXd ActionChunk::flatten() const {
  const int h = horizon();
  VectorXd v(h * 4);
  for (int t = 0; t < h; ++t) {
    v.segment<3>(4 * t) = deltas.row(t).transpose();
    v[4 * t + 3] = gripper[t];
  }
  return v;
}

ActionChunk ActionChunk::from_flat(const VectorXd& v, int horizon) {
  if (v.size() != horizon * 4) throw std::invalid_argument("ActionChunk::from_flat: size mismatch");
  ActionChunk c;
  c.deltas.resize(horizon, 3);
  c.gripper.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    c.deltas.row(t) = v.segment<3>(4 * t).transpose();
    c.gripper[t] = v[4 * t + 3];
  }
  return c;
}

ActionChunk ActionChunk::zeros(int horizon) {
  ActionChunk c;
  c.deltas.setZero(horizon, 3);
  c.gripper.setZero(horizon);
  return c;
}

VectorXd add_noise(const VectorXd& a0, const VectorXd& eps, int k, const NoiseSchedule& sched) {
  if (a0.size() != eps.size()) throw std::invalid_argument("add_noise: shape mismatch");
  if (k < 1 || k > sched.steps) throw std::invalid_argument("add_noise: step out of range");
  return sched.alpha_hat[static_cast<size_t>(k - 1)] * a0 + sched.beta_hat[static_cast<size_t>(k - 1)] * eps;
}

ActionNormalizer ActionNormalizer::fit(const std::vector<ActionChunk>& chunks) {
  ActionNormalizer n;
  double scale = 0.0;
  for (const auto& c : chunks) {
    for (int t = 0; t < c.horizon(); ++t) {
      scale = std::max(scale, c.deltas.row(t).norm());
    }
  }
  n.delta_scale = scale > 1e-9 ? scale : 1.0;
  return n;
}

VectorXd ActionNormalizer::normalize(const ActionChunk& chunk) const {
  ActionChunk c = chunk;
  c.deltas /= delta_scale;
  return c.flatten();
}

ActionChunk ActionNormalizer::denormalize(const VectorXd& flat, int horizon) const {
  ActionChunk c = ActionChunk::from_flat(flat, horizon);
  c.deltas *= delta_scale;
  return c;
}

VectorXd timestep_embedding(int k, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("timestep_embedding: dim must be even and >= 2");
  const int half = dim / 2;
  VectorXd e(dim);
  for (int i = 0; i < half; ++i) {
    const double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
    const double w = std::exp(-std::log(10000.0) * i / denom);
    e[i] = std::sin(k * w);
    e[half + i] = std::cos(k * w);
  }
  return e;
}

PolicyBundle PolicyBundle::create(const PolicyConfig& cfg, std::uint64_t init_seed) {
  PolicyBundle b;
  b.cfg_ = cfg;
  Rng init(mix_seed(0x9e1dULL, init_seed));
  net::PointNetSpec ps;
  ps.num_categories = cfg.num_categories;
  ps.point_hidden0 = cfg.point_hidden0;
  ps.point_hidden1 = cfg.point_hidden1;
  ps.out_dim = cfg.cloud_feature_dim;
  ps.expected_points = cfg.point_budget;
  ps.expected_frame = cfg.cloud_frame;
  b.enc_cloud_ = net::PointNetEncoder(b.store_, "enc", ps, init);
  b.enc_pose_ = net::Mlp(b.store_, "pose",
                         net::NetSpec::make({9, 64, cfg.pose_feature_dim}, net::Activation::gelu,
                                            net::Activation::linear),
                         init);
  std::vector<int> udims;
  udims.push_back(cfg.denoiser_input_dim());
  for (int h : cfg.denoiser_hidden) udims.push_back(h);
  udims.push_back(cfg.action_dim());
  b.denoiser_ = net::Mlp(b.store_, "unet",
                         net::NetSpec::make(udims, net::Activation::gelu, net::Activation::linear), init);
  b.sched_ = make_schedule(cfg.train_steps, cfg.beta_min, cfg.beta_max, cfg.kind);
  return b;
}

PolicyBundle PolicyBundle::bind(const PolicyConfig& cfg, net::ParamStore store) {
  PolicyBundle b;
  b.cfg_ = cfg;
  b.store_ = std::move(store);
  net::PointNetSpec ps;
  ps.num_categories = cfg.num_categories;
  ps.point_hidden0 = cfg.point_hidden0;
  ps.point_hidden1 = cfg.point_hidden1;
  ps.out_dim = cfg.cloud_feature_dim;
  ps.expected_points = cfg.point_budget;
  ps.expected_frame = cfg.cloud_frame;
  b.enc_cloud_ = net::PointNetEncoder::bind(b.store_, "enc", ps);
  b.enc_pose_ = net::Mlp::bind(b.store_, "pose",
                               net::NetSpec::make({9, 64, cfg.pose_feature_dim}, net::Activation::gelu,
                                                  net::Activation::linear));
  std::vector<int> udims;
  udims.push_back(cfg.denoiser_input_dim());
  for (int h : cfg.denoiser_hidden) udims.push_back(h);
  udims.push_back(cfg.action_dim());
  b.denoiser_ = net::Mlp::bind(b.store_, "unet",
                               net::NetSpec::make(udims, net::Activation::gelu, net::Activation::linear));
  b.sched_ = make_schedule(cfg.train_steps, cfg.beta_min, cfg.beta_max, cfg.kind);
  return b;
}

VectorXd PolicyBundle::encode_observation(const std::vector<Observation>& obs) const {
  if (static_cast<int>(obs.size()) != cfg_.obs_steps) {
    throw std::invalid_argument("encode_observation: wrong observation count");
  }
  VectorXd out(cfg_.cond_dim());
  Eigen::Index off = 0;
  for (const auto& o : obs) {
    out.segment(off, cfg_.cloud_feature_dim) = enc_cloud_.encode(store_, o.cloud);
    off += cfg_.cloud_feature_dim;
    const Eigen::MatrixXd pf = enc_pose_.forward(store_, o.pose.to_input().transpose());
    out.segment(off, cfg_.pose_feature_dim) = pf.row(0).transpose();
    off += cfg_.pose_feature_dim;
  }
  return out;
}

VectorXd PolicyBundle::denoiser_predict(const VectorXd& noised, int k, const VectorXd& cond) const {
  if (noised.size() != cfg_.action_dim()) throw std::invalid_argument("denoiser_predict: bad chunk size");
  if (cond.size() != cfg_.cond_dim()) throw std::invalid_argument("denoiser_predict: bad conditioning size");
  Eigen::MatrixXd x(1, cfg_.denoiser_input_dim());
  x.row(0).segment(0, cfg_.action_dim()) = noised.transpose();
  x.row(0).segment(cfg_.action_dim(), cfg_.time_embed_dim) =
      timestep_embedding(k, cfg_.time_embed_dim).transpose();
  x.row(0).tail(cfg_.cond_dim()) = cond.transpose();
  return denoiser_.forward(store_, x).row(0).transpose();
}

double PolicyBundle::training_loss(const std::vector<TrainingSample>& batch, Rng& rng, bool with_grad) {
  if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
  std::vector<int> ks(batch.size());
  std::vector<VectorXd> epses(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    ks[i] = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched_.steps)));
    VectorXd e(cfg_.action_dim());
    for (int j = 0; j < cfg_.action_dim(); ++j) e[j] = rng.normal();
    epses[i] = std::move(e);
  }
  return training_loss_fixed(batch, ks, epses, with_grad);
}

double PolicyBundle::training_loss_fixed(const std::vector<TrainingSample>& batch, const std::vector<int>& ks,
                                         const std::vector<VectorXd>& epses, bool with_grad) {
  if (batch.empty()) throw std::invalid_argument("training_loss_fixed: empty batch");
  if (ks.size() != batch.size() || epses.size() != batch.size()) {
    throw std::invalid_argument("training_loss_fixed: draw count mismatch");
  }
  const int dim = cfg_.action_dim();
  const double bsz = static_cast<double>(batch.size());
  double total = 0.0;

  for (size_t s = 0; s < batch.size(); ++s) {
    const TrainingSample& sample = batch[s];
    if (static_cast<int>(sample.obs.size()) != cfg_.obs_steps) {
      throw std::invalid_argument("training_loss_fixed: wrong observation count");
    }
    const VectorXd a0 = norm_.normalize(sample.actions);
    if (a0.size() != dim) throw std::invalid_argument("training_loss_fixed: wrong action horizon");

    // conditioning forward with caches kept for backward
    std::vector<net::PointNetEncoder::Cache> ccache(sample.obs.size());
    std::vector<net::Mlp::Cache> pcache(sample.obs.size());
    VectorXd cond(cfg_.cond_dim());
    Eigen::Index off = 0;
    for (size_t o = 0; o < sample.obs.size(); ++o) {
      cond.segment(off, cfg_.cloud_feature_dim) =
          enc_cloud_.encode(store_, sample.obs[o].cloud, with_grad ? &ccache[o] : nullptr);
      off += cfg_.cloud_feature_dim;
      const Eigen::MatrixXd pf = enc_pose_.forward(store_, sample.obs[o].pose.to_input().transpose(),
                                                   with_grad ? &pcache[o] : nullptr);
      cond.segment(off, cfg_.pose_feature_dim) = pf.row(0).transpose();
      off += cfg_.pose_feature_dim;
    }

    const VectorXd noised = add_noise(a0, epses[s], ks[s], sched_);
    Eigen::MatrixXd x(1, cfg_.denoiser_input_dim());
    x.row(0).segment(0, dim) = noised.transpose();
    x.row(0).segment(dim, cfg_.time_embed_dim) = timestep_embedding(ks[s], cfg_.time_embed_dim).transpose();
    x.row(0).tail(cfg_.cond_dim()) = cond.transpose();

    net::Mlp::Cache ucache;
    const Eigen::MatrixXd pred = denoiser_.forward(store_, x, with_grad ? &ucache : nullptr);
    const VectorXd residual = pred.row(0).transpose() - epses[s];
    total += residual.squaredNorm() / dim;

    if (with_grad) {
      Eigen::MatrixXd d_pred = (2.0 / (dim * bsz)) * residual.transpose();
      const Eigen::MatrixXd d_x = denoiser_.backward(store_, ucache, d_pred);
      const Eigen::VectorXd d_cond = d_x.row(0).tail(cfg_.cond_dim()).transpose();
      Eigen::Index doff = 0;
      for (size_t o = 0; o < sample.obs.size(); ++o) {
        enc_cloud_.backward(store_, ccache[o], d_cond.segment(doff, cfg_.cloud_feature_dim));
        doff += cfg_.cloud_feature_dim;
        enc_pose_.backward(store_, pcache[o],
                           d_cond.segment(doff, cfg_.pose_feature_dim).transpose());
        doff += cfg_.pose_feature_dim;
      }
    }
  }
  return total / bsz;
}

VectorXd reverse_sample(const DenoiserFn& u, const NoiseSchedule& sched, const VectorXd& init,
                        const VectorXd& cond, Rng& rng, bool deterministic) {
  VectorXd a = init;
  for (int i = sched.steps - 1; i >= 0; --i) {
    const VectorXd pred = u(a, sched.timestep[static_cast<size_t>(i)], cond);
    a = sched.alpha[static_cast<size_t>(i)] * (a - sched.gamma[static_cast<size_t>(i)] * pred);
    const double sg = sched.sigma[static_cast<size_t>(i)];
    if (!deterministic && sg > 0.0) {
      for (Eigen::Index j = 0; j < a.size(); ++j) a[j] += sg * rng.normal();
    }
  }
  return a;
}

ActionChunk PolicyBundle::sample_actions(const std::vector<Observation>& obs, Rng& rng,
                                         bool deterministic) const {
  const VectorXd cond = encode_observation(obs);
  VectorXd init(cfg_.action_dim());
  for (Eigen::Index j = 0; j < init.size(); ++j) init[j] = rng.normal();
  const NoiseSchedule inf = sched_.strided(cfg_.inference_steps);
  const DenoiserFn u = [this](const VectorXd& a, int k, const VectorXd& c) {
    return denoiser_predict(a, k, c);
  };
  const VectorXd a0 = reverse_sample(u, inf, init, cond, rng, deterministic);
  return norm_.denormalize(a0, cfg_.horizon);
}

double denoising_mse(const DenoiserFn& u, const NoiseSchedule& sched, const VectorXd& a0, int k,
                     const VectorXd& eps, const VectorXd& cond) {
  const VectorXd noised = add_noise(a0, eps, k, sched);
  const VectorXd pred = u(noised, k, cond);
  return (pred - eps).squaredNorm() / static_cast<double>(a0.size());
}

}  // namespace eqmanip::policy
