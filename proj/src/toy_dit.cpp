#include "das/toy_dit.hpp"

#include "das/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace das::toy {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr double kInitStd = 0.02;
constexpr double kNormEps = 1e-5;

struct NormCache {
  Mat xhat;
  Vec rstd;
};

Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, NormCache* cache) {
  const Eigen::Index d = x.cols();
  Mat xhat(x.rows(), d);
  Vec rstd(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(d);
    rstd(r) = 1.0 / std::sqrt(var + kNormEps);
    xhat.row(r) = (x.row(r).array() - mean) * rstd(r);
  }
  Mat y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Mat layer_norm_backward(const NormCache& c, const Mat& gain, const Mat& dy, Mat* dgain,
                        Mat* dbias) {
  if (dgain) *dgain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  if (dbias) *dbias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = (dxhat.row(r).array() * c.xhat.row(r).array()).mean();
    dx.row(r) = c.rstd(r) *
                (dxhat.row(r).array() - mean_d - c.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void softmax_rows(Mat& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace

void ToyDiTConfig::validate() const {
  const bool ok = n_blocks >= 1 && k_copied >= 1 && k_copied <= n_blocks && width >= 2 &&
                  heads >= 1 && width % heads == 0 && tokens >= 1 && mlp_ratio >= 1;
  if (!ok) {
    fail(ErrorCode::BadConfig,
         "toy model needs 1 <= k_copied <= n_blocks and width divisible by heads");
  }
}

double NoiseSchedule::alpha_bar(int t) const {
  return 1.0 - static_cast<double>(t + 1) / static_cast<double>(steps + 1);
}

Tokens timestep_embedding(int timestep, int width) {
  Tokens e(1, width);
  const int half = width / 2;
  for (int i = 0; i < width; ++i) {
    const int band = i / 2;
    const double freq = std::exp(-std::log(10000.0) * band / std::max(half, 1));
    e(0, i) = (i % 2 == 0) ? std::sin(timestep * freq) : std::cos(timestep * freq);
  }
  return e;
}

struct ToyDiT::BlockCache {
  Mat x;
  NormCache ln1;
  Mat a, q, k, v;
  std::vector<Mat> probs;
  Mat attn, x1;
  NormCache ln2;
  Mat m, u, g;
};

std::size_t ToyDiT::add_param(std::string name, Eigen::MatrixXd value) {
  params_.push_back({std::move(name), std::move(value), false});
  return params_.size() - 1;
}

LinearRef ToyDiT::add_linear(const std::string& name, int in, int out, bool zero) {
  Mat w = Mat::Zero(in, out);
  if (!zero) {
    Pcg32 rng(config_.seed, params_.size() + 1);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = kInitStd * rng.normal();
    }
  }
  LinearRef ref;
  ref.w = add_param(name + ".w", std::move(w));
  ref.b = add_param(name + ".b", Mat::Zero(1, out));
  return ref;
}

NormRef ToyDiT::add_norm(const std::string& name) {
  NormRef ref;
  ref.gain = add_param(name + ".gain", Mat::Ones(1, config_.width));
  ref.bias = add_param(name + ".bias", Mat::Zero(1, config_.width));
  return ref;
}

BlockRef ToyDiT::add_block(const std::string& name) {
  const int d = config_.width;
  BlockRef b;
  b.ln1 = add_norm(name + ".ln1");
  b.q = add_linear(name + ".attn.q", d, d);
  b.k = add_linear(name + ".attn.k", d, d);
  b.v = add_linear(name + ".attn.v", d, d);
  b.o = add_linear(name + ".attn.o", d, d);
  b.ln2 = add_norm(name + ".ln2");
  b.fc1 = add_linear(name + ".mlp.fc1", d, d * config_.mlp_ratio);
  b.fc2 = add_linear(name + ".mlp.fc2", d * config_.mlp_ratio, d);
  return b;
}

BlockRef ToyDiT::copy_block(const BlockRef& src, const std::string& name) {
  const auto copy = [&](std::size_t idx) {
    const std::string base = params_[idx].name;
    return add_param(name + base.substr(base.find('.')), params_[idx].value);
  };
  const auto lin = [&](const LinearRef& l) { return LinearRef{copy(l.w), copy(l.b)}; };
  const auto norm = [&](const NormRef& n) { return NormRef{copy(n.gain), copy(n.bias)}; };
  BlockRef b;
  b.ln1 = norm(src.ln1);
  b.q = lin(src.q);
  b.k = lin(src.k);
  b.v = lin(src.v);
  b.o = lin(src.o);
  b.ln2 = norm(src.ln2);
  b.fc1 = lin(src.fc1);
  b.fc2 = lin(src.fc2);
  return b;
}

ToyDiT ToyDiT::init(const ToyDiTConfig& config) {
  config.validate();
  ToyDiT model;
  model.config_ = config;
  model.in_ = model.add_linear("embed_in", config.width, config.width);
  for (int j = 0; j < config.n_blocks; ++j) {
    model.base_.push_back(model.add_block("block" + std::to_string(j + 1)));
  }
  model.out_ = model.add_linear("embed_out", config.width, config.width);
  return model;
}

void ToyDiT::attach() {
  std::size_t base_count = out_.b + 1;
  params_.resize(base_count);
  cond_.clear();
  inject_.clear();
  for (auto& p : params_) p.trainable = false;

  const auto copy_lin = [&](const LinearRef& l, const std::string& name) {
    LinearRef r;
    r.w = add_param(name + ".w", params_[l.w].value);
    r.b = add_param(name + ".b", params_[l.b].value);
    return r;
  };
  cond_in_ = copy_lin(in_, "cond.embed_in");
  for (int j = 0; j < config_.k_copied; ++j) {
    cond_.push_back(copy_block(base_[j], "cond.block" + std::to_string(j + 1)));
  }
  for (int j = 0; j < config_.k_copied; ++j) {
    inject_.push_back(add_linear("inject" + std::to_string(j + 1), config_.width,
                                 config_.width, /*zero=*/true));
  }
  for (std::size_t i = base_count; i < params_.size(); ++i) params_[i].trainable = true;
  attached_ = true;
}

std::vector<Eigen::MatrixXd> ToyDiT::zero_grads() const {
  std::vector<Mat> g;
  g.reserve(params_.size());
  for (const auto& p : params_) {
    g.push_back(p.trainable ? Mat::Zero(p.value.rows(), p.value.cols()) : Mat());
  }
  return g;
}

void ToyDiT::check_shape(const Tokens& x) const {
  if (x.rows() != config_.tokens || x.cols() != config_.width) {
    fail(ErrorCode::ShapeMismatch, "expected " + std::to_string(config_.tokens) + "x" +
                                       std::to_string(config_.width) + " tokens");
  }
}

Tokens ToyDiT::embed(const LinearRef& lin, const Tokens& x, int timestep) const {
  const Mat temb = timestep_embedding(timestep, config_.width);
  return ((x * params_[lin.w].value).rowwise() + params_[lin.b].value.row(0))
             .rowwise() +
         temb.row(0);
}

Tokens ToyDiT::block_forward(const BlockRef& b, const Tokens& x, BlockCache* cache) const {
  if (config_.identity_blocks) return x;
  const auto& P = params_;
  const auto lin = [&](const Mat& in, const LinearRef& l) -> Mat {
    return (in * P[l.w].value).rowwise() + P[l.b].value.row(0);
  };
  BlockCache local;
  BlockCache& c = cache ? *cache : local;
  c.x = x;
  c.a = layer_norm(x, P[b.ln1.gain].value, P[b.ln1.bias].value, &c.ln1);
  c.q = lin(c.a, b.q);
  c.k = lin(c.a, b.k);
  c.v = lin(c.a, b.v);
  const int dh = config_.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.attn.resize(x.rows(), x.cols());
  c.probs.resize(config_.heads);
  for (int h = 0; h < config_.heads; ++h) {
    Mat s = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose() * scale;
    softmax_rows(s);
    c.attn.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
    c.probs[h] = std::move(s);
  }
  c.x1 = x + lin(c.attn, b.o);
  c.m = layer_norm(c.x1, P[b.ln2.gain].value, P[b.ln2.bias].value, &c.ln2);
  c.u = lin(c.m, b.fc1);
  c.g = c.u.unaryExpr([](double v) { return gelu(v); });
  return c.x1 + lin(c.g, b.fc2);
}

Tokens ToyDiT::block_backward(const BlockRef& b, const BlockCache& c, const Tokens& dy,
                              std::vector<Eigen::MatrixXd>* grads) const {
  if (config_.identity_blocks) return dy;
  const auto& P = params_;
  const auto grad_of = [&](std::size_t idx) -> Mat* {
    return grads && P[idx].trainable ? &(*grads)[idx] : nullptr;
  };
  const auto lin_back = [&](const Mat& in, const LinearRef& l, const Mat& dout) -> Mat {
    if (Mat* gw = grad_of(l.w)) *gw += in.transpose() * dout;
    if (Mat* gb = grad_of(l.b)) *gb += dout.colwise().sum();
    return dout * P[l.w].value.transpose();
  };

  Mat dx1 = dy;
  const Mat dg = lin_back(c.g, b.fc2, dy);
  const Mat du = dg.array() * c.u.unaryExpr([](double v) { return gelu_grad(v); }).array();
  const Mat dm = lin_back(c.m, b.fc1, du);
  dx1 += layer_norm_backward(c.ln2, P[b.ln2.gain].value, dm, grad_of(b.ln2.gain),
                             grad_of(b.ln2.bias));

  const Mat dattn = lin_back(c.attn, b.o, dx1);
  const int dh = config_.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq(c.q.rows(), c.q.cols()), dk(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
  for (int h = 0; h < config_.heads; ++h) {
    const Mat& p = c.probs[h];
    const Mat d_o = dattn.middleCols(h * dh, dh);
    const Mat dp = d_o * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh) = p.transpose() * d_o;
    const Vec row_dot = (dp.array() * p.array()).rowwise().sum();
    const Mat ds = p.array() * (dp.colwise() - row_dot).array();
    dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh) * scale;
    dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh) * scale;
  }
  const Mat da = lin_back(c.a, b.q, dq) + lin_back(c.a, b.k, dk) + lin_back(c.a, b.v, dv);
  return dx1 + layer_norm_backward(c.ln1, P[b.ln1.gain].value, da, grad_of(b.ln1.gain),
                                   grad_of(b.ln1.bias));
}

Tokens ToyDiT::forward_base(const Tokens& x, int timestep) const {
  check_shape(x);
  Tokens h = embed(in_, x, timestep);
  for (const BlockRef& b : base_) h = block_forward(b, h, nullptr);
  return (h * params_[out_.w].value).rowwise() + params_[out_.b].value.row(0);
}

Tokens ToyDiT::forward_conditioned(const Tokens& x, const Tokens& cond, int timestep) const {
  check_shape(x);
  check_shape(cond);
  if (!attached_) fail(ErrorCode::NotAttached, "condition branch is not attached");
  Tokens h = embed(in_, x, timestep);
  Tokens c = embed(cond_in_, cond, timestep);
  for (std::size_t j = 0; j < base_.size(); ++j) {
    h = block_forward(base_[j], h, nullptr);
    if (j < cond_.size()) {
      c = block_forward(cond_[j], c, nullptr);
      const LinearRef& z = inject_[j];
      h += (c * params_[z.w].value).rowwise() + params_[z.b].value.row(0);
    }
  }
  return (h * params_[out_.w].value).rowwise() + params_[out_.b].value.row(0);
}

double ToyDiT::loss_and_grad(const Tokens& x, const Tokens& cond, int timestep,
                             const Tokens& target, std::vector<Eigen::MatrixXd>* grads) const {
  check_shape(x);
  check_shape(cond);
  check_shape(target);
  if (!attached_) fail(ErrorCode::NotAttached, "condition branch is not attached");

  const std::size_t n = base_.size();
  const std::size_t k = cond_.size();
  std::vector<BlockCache> base_cache(n), cond_cache(k);
  std::vector<Mat> cond_out(k);

  Tokens h = embed(in_, x, timestep);
  Tokens c = embed(cond_in_, cond, timestep);
  for (std::size_t j = 0; j < n; ++j) {
    h = block_forward(base_[j], h, grads ? &base_cache[j] : nullptr);
    if (j < k) {
      c = block_forward(cond_[j], c, grads ? &cond_cache[j] : nullptr);
      const LinearRef& z = inject_[j];
      h += (c * params_[z.w].value).rowwise() + params_[z.b].value.row(0);
      cond_out[j] = c;
    }
  }
  const Mat out = (h * params_[out_.w].value).rowwise() + params_[out_.b].value.row(0);
  const Mat diff = out - target;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / count;
  if (!grads) return loss;

  const auto grad_of = [&](std::size_t idx) -> Mat* {
    return params_[idx].trainable ? &(*grads)[idx] : nullptr;
  };
  const Mat dout = (2.0 / count) * diff;
  if (Mat* g = grad_of(out_.w)) *g += h.transpose() * dout;
  if (Mat* g = grad_of(out_.b)) *g += dout.colwise().sum();
  Mat dh = dout * params_[out_.w].value.transpose();

  std::vector<Mat> dcond(k);
  for (std::size_t jj = n; jj-- > 0;) {
    if (jj < k) {
      const LinearRef& z = inject_[jj];
      if (Mat* g = grad_of(z.w)) *g += cond_out[jj].transpose() * dh;
      if (Mat* g = grad_of(z.b)) *g += dh.colwise().sum();
      dcond[jj] = dh * params_[z.w].value.transpose();
    }
    dh = block_backward(base_[jj], base_cache[jj], dh, grads);
  }
  Mat dc = dcond[k - 1];
  for (std::size_t jj = k; jj-- > 0;) {
    dc = block_backward(cond_[jj], cond_cache[jj], dc, grads);
    if (jj > 0) dc += dcond[jj - 1];
  }
  if (Mat* g = grad_of(cond_in_.w)) *g += cond.transpose() * dc;
  if (Mat* g = grad_of(cond_in_.b)) *g += dc.colwise().sum();
  return loss;
}

TrainState TrainState::for_model(const ToyDiT& model, AdamWOptions opts) {
  TrainState s;
  s.adamw = opts;
  s.m = model.zero_grads();
  s.v = model.zero_grads();
  return s;
}

namespace {

Tokens gaussian_tokens(int rows, int cols, Pcg32& rng) {
  Tokens t(rows, cols);
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = rng.normal();
  }
  return t;
}

}  // namespace

double train_step(ToyDiT& model, TrainState& state, const std::vector<TrainExample>& batch,
                  Pcg32& rng) {
  if (!model.attached()) fail(ErrorCode::NotAttached, "condition branch is not attached");
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "empty batch");
  if (state.m.size() != model.params().size()) {
    fail(ErrorCode::ShapeMismatch, "optimizer state does not match the model");
  }
  const auto& cfg = model.config();
  auto grads = model.zero_grads();
  double loss = 0;
  for (const TrainExample& ex : batch) {
    const int t = static_cast<int>(rng.below(static_cast<std::uint32_t>(model.schedule().steps)));
    const Tokens noise = ex.noise ? *ex.noise : gaussian_tokens(cfg.tokens, cfg.width, rng);
    const double ab = model.schedule().alpha_bar(t);
    const Tokens xt = std::sqrt(ab) * ex.clean + std::sqrt(1.0 - ab) * noise;
    loss += model.loss_and_grad(xt, ex.cond, t, noise, &grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  loss *= inv;

  ++state.step;
  const AdamWOptions& o = state.adamw;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const Eigen::MatrixXd g = grads[i] * inv;
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g.cwiseProduct(g);
    const Eigen::MatrixXd step =
        (state.m[i] / bc1).array() / ((state.v[i] / bc2).array().sqrt() + o.eps);
    params[i].value -= o.lr * o.weight_decay * params[i].value;
    params[i].value -= o.lr * step;
  }
  state.losses.push_back(loss);
  return loss;
}

NoiseCopyTask NoiseCopyTask::make(const ToyDiTConfig& config, int rank, Pcg32& rng) {
  if (rank < 1 || rank > config.width) fail(ErrorCode::BadConfig, "noise rank must be in [1, width]");
  NoiseCopyTask task;
  task.basis.resize(rank, config.width);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  for (Eigen::Index k = 0; k < task.basis.size(); ++k) {
    task.basis.data()[k] = (rng.next() & 1u) ? scale : -scale;
  }
  return task;
}

std::vector<TrainExample> NoiseCopyTask::batch(const ToyDiTConfig& config,
                                               std::size_t batch_size, Pcg32& rng) const {
  std::vector<TrainExample> out;
  out.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    TrainExample ex;
    ex.clean = gaussian_tokens(config.tokens, config.width, rng);
    ex.noise = gaussian_tokens(config.tokens, static_cast<int>(basis.rows()), rng) * basis;
    ex.cond = *ex.noise;
    out.push_back(std::move(ex));
  }
  return out;
}

void randomize_injectors(ToyDiT& model, double scale, std::uint64_t seed) {
  if (!model.attached()) fail(ErrorCode::NotAttached, "condition branch is not attached");
  Pcg32 rng(seed, 0x1f);
  for (const LinearRef& inj : model.injectors()) {
    for (std::size_t idx : {inj.w, inj.b}) {
      Eigen::MatrixXd& m = model.params()[idx].value;
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = scale * rng.normal();
    }
  }
}

GradCheckReport grad_check(ToyDiT& model, const TrainExample& example, int timestep,
                           double eps, std::size_t max_coords, std::uint64_t seed) {
  if (!model.attached()) fail(ErrorCode::NotAttached, "condition branch is not attached");
  const auto& cfg = model.config();
  Pcg32 rng(seed);
  const Tokens noise = example.noise ? *example.noise : gaussian_tokens(cfg.tokens, cfg.width, rng);
  const double ab = model.schedule().alpha_bar(timestep);
  const Tokens xt = std::sqrt(ab) * example.clean + std::sqrt(1.0 - ab) * noise;

  auto grads = model.zero_grads();
  model.loss_and_grad(xt, example.cond, timestep, noise, &grads);

  GradCheckReport report;
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const auto size = static_cast<std::size_t>(params[i].value.size());
    std::vector<std::size_t> coords(size);
    std::iota(coords.begin(), coords.end(), 0);
    if (size > max_coords) {
      for (std::size_t k = 0; k < max_coords; ++k) {
        const std::size_t pick = k + rng.below(static_cast<std::uint32_t>(size - k));
        std::swap(coords[k], coords[pick]);
      }
      coords.resize(max_coords);
    }
    for (std::size_t idx : coords) {
      double& w = params[i].value.data()[idx];
      const double saved = w;
      w = saved + eps;
      const Tokens up = model.forward_conditioned(xt, example.cond, timestep);
      w = saved - eps;
      const Tokens down = model.forward_conditioned(xt, example.cond, timestep);
      w = saved;
      // L(up) - L(down) as a difference of squares, which avoids cancelling
      // two nearly equal loss sums.
      const double delta =
          ((up - down).array() * (up + down - 2.0 * noise).array()).sum() /
          static_cast<double>(noise.size());
      const double numeric = delta / (2.0 * eps);
      const double analytic = grads[i].data()[idx];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[i].name;
      }
      ++report.coordinates;
    }
  }
  return report;
}

std::vector<double> train_noise_copy(ToyDiT& model, const TrainOptions& opts) {
  if (!model.attached()) fail(ErrorCode::NotAttached, "condition branch is not attached");
  Pcg32 rng(opts.seed, 0x5eedULL);
  const NoiseCopyTask task = NoiseCopyTask::make(model.config(), opts.noise_rank, rng);
  TrainState state = TrainState::for_model(model, opts.adamw);
  for (int s = 0; s < opts.steps; ++s) {
    train_step(model, state, task.batch(model.config(), opts.batch_size, rng), rng);
  }
  return state.losses;
}

}  // namespace das::toy
