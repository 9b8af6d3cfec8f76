#pragma once

// Desk-scale conditioning experiment: a small pre-norm transformer (the
// base), a trainable copy of its first k blocks fed with condition tokens,
// and zero-initialized linear injectors that add each condition block's
// output to the base stream right after the matching base block. Only the
// condition branch trains; the base is frozen.
//
// Everything is double precision with hand-written backpropagation.

#include "das/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace das::toy {

using Tokens = Eigen::MatrixXd;  // L x d

struct ToyDiTConfig {
  int n_blocks = 7;
  int k_copied = 3;
  int width = 32;
  int heads = 4;
  int tokens = 16;
  int mlp_ratio = 4;
  std::uint64_t seed = 0;
  /// Replaces every block by the identity map; the model becomes linear in
  /// each single parameter.
  bool identity_blocks = false;

  int head_dim() const { return width / heads; }
  /// Throws BadConfig.
  void validate() const;
};

struct Param {
  std::string name;
  Eigen::MatrixXd value;
  bool trainable = false;
};

/// Linear diffusion schedule with alpha_bar falling linearly over the steps.
struct NoiseSchedule {
  int steps = 1000;
  double alpha_bar(int t) const;
};

struct LinearRef {
  std::size_t w = 0, b = 0;  // W is in x out, b is 1 x out
};
struct NormRef {
  std::size_t gain = 0, bias = 0;
};
struct BlockRef {
  NormRef ln1;
  LinearRef q, k, v, o;
  NormRef ln2;
  LinearRef fc1, fc2;
};

class ToyDiT {
 public:
  /// Weights ~ N(0, 0.02) from Pcg32(config.seed), biases 0, norm gains 1.
  static ToyDiT init(const ToyDiTConfig& config);

  /// Adds the condition branch: exact copies of the input embedding and of
  /// base blocks 1..k, plus k zero-initialized injectors. Marks the base
  /// frozen. Re-attaching discards a previous branch.
  void attach();
  bool attached() const { return attached_; }

  Tokens forward_base(const Tokens& x, int timestep) const;
  Tokens forward_conditioned(const Tokens& x, const Tokens& cond, int timestep) const;

  /// MSE between forward_conditioned and target; when grads is non-null,
  /// accumulates d(loss)/d(param) for trainable parameters into it
  /// (shaped like params()).
  double loss_and_grad(const Tokens& x, const Tokens& cond, int timestep,
                       const Tokens& target, std::vector<Eigen::MatrixXd>* grads) const;

  const ToyDiTConfig& config() const { return config_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Eigen::MatrixXd> zero_grads() const;

  const std::vector<LinearRef>& injectors() const { return inject_; }
  const std::vector<BlockRef>& base_blocks() const { return base_; }
  const std::vector<BlockRef>& condition_blocks() const { return cond_; }

 private:
  struct BlockCache;

  std::size_t add_param(std::string name, Eigen::MatrixXd value);
  LinearRef add_linear(const std::string& name, int in, int out, bool zero = false);
  NormRef add_norm(const std::string& name);
  BlockRef add_block(const std::string& name);
  BlockRef copy_block(const BlockRef& src, const std::string& name);

  Tokens embed(const LinearRef& lin, const Tokens& x, int timestep) const;
  Tokens block_forward(const BlockRef& b, const Tokens& x, BlockCache* cache) const;
  Tokens block_backward(const BlockRef& b, const BlockCache& cache, const Tokens& dy,
                        std::vector<Eigen::MatrixXd>* grads) const;
  void check_shape(const Tokens& x) const;

  ToyDiTConfig config_;
  NoiseSchedule schedule_;
  std::vector<Param> params_;
  LinearRef in_, out_;
  std::vector<BlockRef> base_;
  bool attached_ = false;
  LinearRef cond_in_;
  std::vector<BlockRef> cond_;
  std::vector<LinearRef> inject_;
};

Tokens timestep_embedding(int timestep, int width);

struct TrainExample {
  Tokens clean;
  Tokens cond;
  /// Noise to add; drawn from the step's generator when absent.
  std::optional<Tokens> noise;
};

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct TrainState {
  AdamWOptions adamw;
  /// Indexed like ToyDiT::params(); empty matrices for frozen parameters.
  std::vector<Eigen::MatrixXd> m, v;
  long step = 0;
  std::vector<double> losses;

  static TrainState for_model(const ToyDiT& model, AdamWOptions opts = {});
};

/// One AdamW step on the mean loss of the batch. Each example draws a
/// timestep uniformly from the schedule and, unless it carries its own
/// noise, Gaussian noise from rng. Throws NotAttached.
double train_step(ToyDiT& model, TrainState& state, const std::vector<TrainExample>& batch,
                  Pcg32& rng);

/// Synthetic task where the condition tokens are the diffusion noise itself.
/// Every token's noise lies in a fixed rank-r subspace: eps = z B with
/// z ~ N(0, I_r) per token and B an r x d matrix of +-1/sqrt(r) entries, so
/// each entry keeps unit variance. Clean tokens are N(0, 1), cond = eps.
struct NoiseCopyTask {
  Eigen::MatrixXd basis;  // r x d

  /// Throws BadConfig unless 1 <= rank <= width.
  static NoiseCopyTask make(const ToyDiTConfig& config, int rank, Pcg32& rng);
  std::vector<TrainExample> batch(const ToyDiTConfig& config, std::size_t batch_size,
                                  Pcg32& rng) const;
};

/// Overwrites the injector weights and biases with N(0, scale^2) draws.
/// At attach they are zero, which makes every condition-branch gradient
/// vanish; a finite-difference check needs them nonzero.
void randomize_injectors(ToyDiT& model, double scale, std::uint64_t seed);

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_param;
  std::size_t coordinates = 0;
};

/// Central finite differences against the analytic gradient on every
/// trainable parameter (at most max_coords sampled coordinates each), with
/// relative error |ga - gn| / max(|ga|, |gn|, 1e-8).
GradCheckReport grad_check(ToyDiT& model, const TrainExample& example, int timestep,
                           double eps = 1e-4, std::size_t max_coords = 200,
                           std::uint64_t seed = 1);

struct TrainOptions {
  int steps = 500;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  int noise_rank = 4;
  AdamWOptions adamw;
};

/// Trains a freshly attached model on the noise-copy task and returns the
/// per-step loss trace.
std::vector<double> train_noise_copy(ToyDiT& model, const TrainOptions& opts);

}  // namespace das::toy
