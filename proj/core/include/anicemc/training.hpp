#pragma once

#include "anicemc/adam.hpp"
#include "anicemc/diagnostics.hpp"
#include "anicemc/mlp.hpp"
#include "anicemc/nice.hpp"
#include "anicemc/rng.hpp"
#include "anicemc/samplers.hpp"
#include "anicemc/targets.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace anicemc {

enum class LipschitzMode { FiniteDiffPenalty, WeightClip };

std::string_view lipschitz_mode_name(LipschitzMode m);
LipschitzMode parse_lipschitz_mode(std::string_view s);

struct TrainConfig {
  // Adversarial objective.
  std::size_t max_b = 4;  // b ~ U[1, max_b] steps from noise
  std::size_t max_m = 2;  // m ~ U[1, max_m] steps from buffer samples
  double lambda = 1.0 / 3.0;
  double gamma = 1.0;     // weight of the v-prior penalty
  bool pairwise = true;

  // Optimization.
  double learning_rate = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  std::size_t batch_size = 32;
  std::size_t iterations = 20000;
  std::size_t critic_steps = 5;
  LipschitzMode lipschitz = LipschitzMode::FiniteDiffPenalty;
  double penalty_weight = 10.0;
  double penalty_delta = 1e-3;
  double clip_value = 0.01;

  // Networks.
  NiceSpec nice;
  std::vector<std::size_t> discriminator_hidden{400, 400, 400};

  // Bootstrap buffer.
  std::size_t buffer_capacity = 0;  // 0: 10 × batch_size × max_b
  std::size_t bootstrap_refresh_interval = 500;
  std::size_t bootstrap_chains = 64;
  std::size_t bootstrap_initial_burn_in = 2000;
  std::size_t bootstrap_burn_in = 200;
  std::size_t bootstrap_thin = 5;
  /// σ of the isotropic Gaussian π₀ used for noise starts and the initial fill.
  double init_sigma = 1.0;

  // Evaluation snapshots (MH-corrected kernel).
  std::size_t eval_interval = 500;
  std::size_t eval_chains = 64;
  std::size_t eval_burn_in = 1000;
  std::size_t eval_steps = 1000;

  std::filesystem::path checkpoint_path;  // empty: no periodic checkpoints
  std::size_t checkpoint_interval = 0;
  unsigned threads = 1;

  std::size_t effective_capacity() const {
    return buffer_capacity ? buffer_capacity : 10 * batch_size * max_b;
  }
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Hyperparameter presets for the 2D energies and for logistic regression.
TrainConfig energy_train_preset();
TrainConfig blr_train_preset(std::size_t x_dim);

/// Pool of states treated as draws from the target. Fixed capacity; each
/// slot records the model generation that produced it.
class BootstrapBuffer {
 public:
  BootstrapBuffer() = default;
  BootstrapBuffer(std::size_t capacity, std::size_t dim);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return filled_; }
  bool empty() const noexcept { return filled_ == 0; }
  const Tensor& states() const noexcept { return states_; }
  const std::vector<std::uint32_t>& generations() const noexcept { return generation_; }

  /// Fills every slot from `samples` (first `capacity` rows, cycling if fewer).
  void fill(const Tensor& samples, std::uint32_t generation);
  /// Overwrites capacity/2 slots chosen uniformly without replacement.
  /// Returns the replaced indices.
  std::vector<std::size_t> replace_half(const Tensor& samples, std::uint32_t generation, StreamRng& rng);
  /// `count` rows drawn uniformly with replacement.
  Tensor sample(std::size_t count, StreamRng& rng) const;

 private:
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::size_t filled_ = 0;
  Tensor states_;
  std::vector<std::uint32_t> generation_;
};

/// Bare NICE forward map applied `steps` times with fresh v ~ N(0, I) each
/// step and no acceptance test. Returns the end states and the last v'.
struct Rollout {
  Var x;
  Var v_last;
};
Rollout rollout(const NiceModel& model, Var start, std::size_t steps, StreamRng& rng, Tape& tape);
/// Same map without recording.
std::pair<Tensor, Tensor> rollout_values(const NiceModel& model, const Tensor& start,
                                         std::size_t steps, StreamRng& rng);

/// Σ_d KL(N(μ̂_d, σ̂_d²) ‖ N(0, 1)) from batch moments of v'; σ̂² floored at 1e-6.
Var v_prior_penalty(Var v_final, Tape& tape);
double v_prior_penalty(const Tensor& v_final);
inline constexpr double kVarianceFloor = 1e-6;

/// E[(|D(x̂ + δu) - D(x̂)| / δ - 1)²] at random interpolates x̂ of real and fake
/// rows, u a random unit direction per row.
Var lipschitz_penalty(const Mlp& critic, const Tensor& real, const Tensor& fake, double delta,
                      StreamRng& rng, Tape& tape);

/// Which network's parameters a loss evaluation is for. During the critic
/// phase generated samples are constants; during the generator phase the
/// critic's parameters are frozen.
enum class Phase { Critic, Generator };

struct LossTerms {
  Var discriminator;  // minimized by the critic
  Var generator;      // minimized by the NICE model (includes γ × v-prior penalty)
  Var v_penalty;
  // Minibatch and scores, exposed for inspection.
  Tensor real;
  Var fake_noise;    // b-step samples from noise (or z₁ pairs for pairwise)
  Var fake_buffer;   // m-step samples from buffer starts (or (z₂, z₃) pairs)
  Var score_real;
  Var score_noise;
  Var score_buffer;
  std::size_t b = 0;
  std::size_t m = 0;
};

/// Critic scores for one minibatch, recorded on `tape`.
Var critic_scores(const Mlp& critic, Var input, Tape& tape, Phase phase);

/// Wasserstein form of the Markov GAN objective:
///   critic maximizes E[D(x)] - λ E[D(x̄_b)] - (1-λ) E[D(x̄_m)],
///   generator minimizes -λ E[D(x̄_b)] - (1-λ) E[D(x̄_m)] + γ KL(v').
/// b ~ U[1, B] from x₀ ~ π₀, m ~ U[1, M] from buffer draws. No Lipschitz term.
LossTerms mgan_losses(const Mlp& critic, const BootstrapBuffer& buffer, const NiceModel& model,
                      const TrainConfig& config, StreamRng& rng, Tape& tape, Phase phase);

/// Pairwise variant. Real pairs are two independent buffer draws; fake pairs
/// are (x, z₁) with z₁ the b-step rollout of buffer draw x, and (z₂, z₃) with
/// z₂ a gradient-blocked b-step rollout from noise and z₃ the m-step rollout of z₂.
/// Both fake types carry weight 1/2.
LossTerms pairwise_losses(const Mlp& critic, const BootstrapBuffer& buffer, const NiceModel& model,
                          const TrainConfig& config, StreamRng& rng, Tape& tape, Phase phase);

struct LogEntry {
  std::size_t iteration = 0;
  double discriminator_loss = 0.0;
  double generator_loss = 0.0;
  double v_penalty = 0.0;
  std::optional<double> acceptance;
  std::optional<double> ess;
  double elapsed_seconds = 0.0;
  std::string event;  // "", "bootstrap", "evaluate", "diverged"
};

std::string log_entry_json(const LogEntry& e);

struct TrainResult {
  NiceModel model;
  std::vector<LogEntry> log;
  bool diverged = false;
  std::string message;
};

/// One adversarial training run. Owns the model, critic, optimizers and buffer.
class Trainer {
 public:
  Trainer(const EnergyTarget& target, TrainConfig config, std::uint64_t seed,
          std::optional<ReferenceMoments> reference = std::nullopt);

  const NiceModel& model() const { return model_; }
  NiceModel& model() { return model_; }
  const Mlp& critic() const { return critic_; }
  const BootstrapBuffer& buffer() const { return buffer_; }
  const TrainConfig& config() const { return config_; }
  std::uint32_t generation() const { return generation_; }

  /// Initial fill with the current (untrained) kernel, MH-corrected.
  void initialize_buffer();
  /// Replaces half of the buffer with MH-corrected samples from the current model.
  void refresh_buffer();
  /// critic_steps critic updates then one generator update.
  LogEntry iterate();
  /// MH-corrected evaluation chain: acceptance and (when reference moments are known) ESS.
  LogEntry evaluate();

  /// Full schedule: fill, iterate with periodic refresh, evaluation and checkpoints.
  TrainResult run(const std::function<void(const LogEntry&)>& on_log = {});

 private:
  Tensor mh_samples(std::size_t count, std::size_t burn_in, const Tensor* starts, std::uint64_t seed_index);

  const EnergyTarget& target_;
  TrainConfig config_;
  std::uint64_t seed_;
  std::optional<ReferenceMoments> reference_;
  NiceModel model_;
  Mlp critic_;
  ParamList model_params_;
  ParamList critic_params_;
  AdamState model_adam_;
  AdamState critic_adam_;
  BootstrapBuffer buffer_;
  StreamRng rng_;
  std::uint32_t generation_ = 0;
  std::size_t iteration_ = 0;
};

/// Convenience wrapper around Trainer::run.
TrainResult train(const EnergyTarget& target, const TrainConfig& config, std::uint64_t seed,
                  std::optional<ReferenceMoments> reference = std::nullopt,
                  const std::function<void(const LogEntry&)>& on_log = {});

}  // namespace anicemc
