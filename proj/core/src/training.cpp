#include "anicemc/training.hpp"

#include "anicemc/checkpoint.hpp"
#include "anicemc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace anicemc {

std::string_view lipschitz_mode_name(LipschitzMode m) {
  return m == LipschitzMode::FiniteDiffPenalty ? "finite_diff_penalty" : "weight_clip";
}

LipschitzMode parse_lipschitz_mode(std::string_view s) {
  if (s == "finite_diff_penalty") return LipschitzMode::FiniteDiffPenalty;
  if (s == "weight_clip") return LipschitzMode::WeightClip;
  throw ConfigError("unknown lipschitz mode '" + std::string(s) + "' (expected finite_diff_penalty or weight_clip)");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(std::string("train config: ") + msg);
  };
  require(max_b >= 1 && max_m >= 1, "B and M must be at least 1");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(gamma >= 0.0, "gamma must be non-negative");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(batch_size >= 2, "batch size must be at least 2");
  require(critic_steps >= 1, "critic steps must be at least 1");
  require(penalty_delta > 0.0 && penalty_weight >= 0.0, "penalty settings out of range");
  require(clip_value > 0.0, "clip value must be positive");
  require(effective_capacity() >= 2, "buffer capacity must be at least 2");
  require(bootstrap_refresh_interval >= 1, "refresh interval must be at least 1");
  require(bootstrap_chains >= 1 && bootstrap_thin >= 1, "bootstrap chains and thinning must be positive");
  require(init_sigma > 0.0, "init sigma must be positive");
  require(eval_interval == 0 || (eval_chains >= 1 && eval_steps >= 10),
          "evaluation needs at least one chain and 10 steps");
  require(!discriminator_hidden.empty(), "discriminator needs at least one hidden layer");
}

TrainConfig energy_train_preset() { return TrainConfig{}; }

TrainConfig blr_train_preset(std::size_t x_dim) {
  TrainConfig c;
  c.max_b = 16;
  c.max_m = 2;
  c.learning_rate = 5e-4;
  c.nice.x_dim = x_dim;
  c.nice.v_dim = 50;
  c.nice.hidden = {{400}, {400, 400}, {400}};
  c.discriminator_hidden = {800, 800, 800};
  c.iterations = 2000;
  c.init_sigma = 0.1;
  return c;
}

// ---------------------------------------------------------------------------

BootstrapBuffer::BootstrapBuffer(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), states_({capacity, dim}), generation_(capacity, 0) {
  if (capacity == 0 || dim == 0) throw ConfigError("bootstrap buffer needs positive capacity and dim");
}

void BootstrapBuffer::fill(const Tensor& samples, std::uint32_t generation) {
  require_matrix(samples, "buffer fill");
  if (samples.cols() != dim_) throw ConfigError("buffer fill: width mismatch");
  if (samples.rows() == 0) throw ConfigError("buffer fill: no samples");
  for (std::size_t i = 0; i < capacity_; ++i) {
    const auto src = samples.row(i % samples.rows());
    std::copy(src.begin(), src.end(), states_.row(i).begin());
    generation_[i] = generation;
  }
  filled_ = capacity_;
}

std::vector<std::size_t> BootstrapBuffer::replace_half(const Tensor& samples, std::uint32_t generation,
                                                       StreamRng& rng) {
  if (empty()) throw UsageError("buffer refresh before initial fill");
  require_matrix(samples, "buffer refresh");
  const std::size_t half = capacity_ / 2;
  if (samples.cols() != dim_ || samples.rows() < half) {
    throw ConfigError("buffer refresh: need " + std::to_string(half) + " rows of width " +
                      std::to_string(dim_));
  }
  std::vector<std::size_t> idx(capacity_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `half` entries are a uniform subset.
  for (std::size_t i = 0; i < half; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(capacity_ - i));
    std::swap(idx[i], idx[std::min(j, capacity_ - 1)]);
  }
  idx.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    const auto src = samples.row(k);
    std::copy(src.begin(), src.end(), states_.row(idx[k]).begin());
    generation_[idx[k]] = generation;
  }
  return idx;
}

Tensor BootstrapBuffer::sample(std::size_t count, StreamRng& rng) const {
  if (empty()) throw UsageError("sampling from an empty buffer");
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = std::min(capacity_ - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(capacity_)));
  return gather_rows(states_, idx);
}

// ---------------------------------------------------------------------------

namespace {

Tensor gaussian(std::size_t n, std::size_t d, double sigma, StreamRng& rng) {
  Tensor t({n, d});
  for (auto& x : t.storage()) x = sigma * rng.normal();
  return t;
}

std::size_t draw_steps(std::size_t max, StreamRng& rng) {
  return 1 + std::min(max - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(max)));
}

}  // namespace

Rollout rollout(const NiceModel& model, Var start, std::size_t steps, StreamRng& rng, Tape& tape) {
  if (steps == 0) throw ConfigError("rollout needs at least one step");
  const std::size_t n = start.value().rows();
  Var x = start;
  Var v;
  for (std::size_t s = 0; s < steps; ++s) {
    const Var v0 = tape.constant(gaussian(n, model.v_dim(), 1.0, rng));
    std::tie(x, v) = model.forward(x, v0, tape);
  }
  return {x, v};
}

std::pair<Tensor, Tensor> rollout_values(const NiceModel& model, const Tensor& start, std::size_t steps,
                                         StreamRng& rng) {
  if (steps == 0) throw ConfigError("rollout needs at least one step");
  Tensor x = start;
  Tensor v;
  for (std::size_t s = 0; s < steps; ++s) {
    std::tie(x, v) = model.forward(x, gaussian(start.rows(), model.v_dim(), 1.0, rng));
  }
  return {std::move(x), std::move(v)};
}

Var v_prior_penalty(Var v_final, Tape& tape) {
  const auto& val = v_final.value();
  if (val.rank() != 2 || val.rows() < 2) throw ConfigError("v-prior penalty needs a batch of at least 2");
  const Var mu = tape.column_mean(v_final);
  const Var var = tape.max_scalar(tape.column_mean(tape.square(v_final)) - tape.square(mu), kVarianceFloor);
  // KL(N(μ, σ²) ‖ N(0, 1)) = (σ² + μ² - 1 - log σ²) / 2 per dimension.
  const Var kl = var + tape.square(mu) - tape.log(var);
  return tape.sum(kl + -1.0) * 0.5;
}

double v_prior_penalty(const Tensor& v_final) {
  if (v_final.rank() != 2 || v_final.rows() < 2) throw ConfigError("v-prior penalty needs a batch of at least 2");
  const auto m = v_final.mat();
  const double n = static_cast<double>(m.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mu = m.col(j).sum() / n;
    const double var = std::max(kVarianceFloor, m.col(j).squaredNorm() / n - mu * mu);
    total += 0.5 * (var + mu * mu - 1.0 - std::log(var));
  }
  return total;
}

Var critic_scores(const Mlp& critic, Var input, Tape& tape, Phase phase) {
  return forward_mlp(critic, input, tape, phase == Phase::Critic);
}

Var lipschitz_penalty(const Mlp& critic, const Tensor& real, const Tensor& fake, double delta,
                      StreamRng& rng, Tape& tape) {
  require_matrix(real, "lipschitz penalty");
  require_matrix(fake, "lipschitz penalty");
  if (real.cols() != fake.cols()) throw ConfigError("lipschitz penalty: width mismatch");
  const std::size_t n = std::min(real.rows(), fake.rows());
  const std::size_t d = real.cols();
  Tensor base({n, d});
  Tensor moved({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = rng.uniform();
    std::vector<double> u(d);
    double norm = 0.0;
    while (!(norm > 0.0)) {
      norm = 0.0;
      for (auto& x : u) {
        x = rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
    }
    for (std::size_t j = 0; j < d; ++j) {
      base(i, j) = eps * real(i, j) + (1.0 - eps) * fake(i, j);
      moved(i, j) = base(i, j) + delta * u[j] / norm;
    }
  }
  const Var d0 = forward_mlp(critic, tape.constant(std::move(base)), tape);
  const Var d1 = forward_mlp(critic, tape.constant(std::move(moved)), tape);
  const Var slope = tape.abs(d1 - d0) * (1.0 / delta);
  return tape.mean(tape.square(slope + -1.0));
}

LossTerms mgan_losses(const Mlp& critic, const BootstrapBuffer& buffer, const NiceModel& model,
                      const TrainConfig& config, StreamRng& rng, Tape& tape, Phase phase) {
  LossTerms t;
  const std::size_t n = config.batch_size;
  t.b = draw_steps(config.max_b, rng);
  t.m = draw_steps(config.max_m, rng);
  t.real = buffer.sample(n, rng);
  const Tensor noise = gaussian(n, model.x_dim(), config.init_sigma, rng);
  const Tensor starts = buffer.sample(n, rng);

  if (phase == Phase::Critic) {
    auto [xb, vb] = rollout_values(model, noise, t.b, rng);
    auto [xm, vm] = rollout_values(model, starts, t.m, rng);
    t.fake_noise = tape.constant(std::move(xb));
    t.fake_buffer = tape.constant(std::move(xm));
    t.v_penalty = tape.constant(Tensor::scalar(0.5 * (v_prior_penalty(vb) + v_prior_penalty(vm))));
  } else {
    const Rollout rb = rollout(model, tape.constant(noise), t.b, rng, tape);
    const Rollout rm = rollout(model, tape.constant(starts), t.m, rng, tape);
    t.fake_noise = rb.x;
    t.fake_buffer = rm.x;
    t.v_penalty = (v_prior_penalty(rb.v_last, tape) + v_prior_penalty(rm.v_last, tape)) * 0.5;
  }
  t.score_real = critic_scores(critic, tape.constant(t.real), tape, phase);
  t.score_noise = critic_scores(critic, t.fake_noise, tape, phase);
  t.score_buffer = critic_scores(critic, t.fake_buffer, tape, phase);

  const double lam = config.lambda;
  const Var fake_term = tape.mean(t.score_noise) * lam + tape.mean(t.score_buffer) * (1.0 - lam);
  t.discriminator = fake_term - tape.mean(t.score_real);
  t.generator = t.v_penalty * config.gamma - fake_term;
  return t;
}

LossTerms pairwise_losses(const Mlp& critic, const BootstrapBuffer& buffer, const NiceModel& model,
                          const TrainConfig& config, StreamRng& rng, Tape& tape, Phase phase) {
  LossTerms t;
  const std::size_t n = config.batch_size;
  t.b = draw_steps(config.max_b, rng);
  t.m = draw_steps(config.max_m, rng);
  const Tensor xa = buffer.sample(n, rng);
  const Tensor xb = buffer.sample(n, rng);
  t.real = concat_cols(xa, xb);
  const Tensor x = buffer.sample(n, rng);
  const Tensor noise = gaussian(n, model.x_dim(), config.init_sigma, rng);
  // z₂ never carries gradient in either phase.
  const Tensor z2 = rollout_values(model, noise, t.b, rng).first;

  if (phase == Phase::Critic) {
    auto [z1, v1] = rollout_values(model, x, t.b, rng);
    auto [z3, v3] = rollout_values(model, z2, t.m, rng);
    t.fake_noise = tape.constant(concat_cols(x, z1));
    t.fake_buffer = tape.constant(concat_cols(z2, z3));
    t.v_penalty = tape.constant(Tensor::scalar(0.5 * (v_prior_penalty(v1) + v_prior_penalty(v3))));
  } else {
    const Rollout r1 = rollout(model, tape.constant(x), t.b, rng, tape);
    const Rollout r3 = rollout(model, tape.constant(z2), t.m, rng, tape);
    t.fake_noise = tape.concat_cols(tape.constant(x), r1.x);
    t.fake_buffer = tape.concat_cols(tape.constant(z2), r3.x);
    t.v_penalty = (v_prior_penalty(r1.v_last, tape) + v_prior_penalty(r3.v_last, tape)) * 0.5;
  }
  t.score_real = critic_scores(critic, tape.constant(t.real), tape, phase);
  t.score_noise = critic_scores(critic, t.fake_noise, tape, phase);
  t.score_buffer = critic_scores(critic, t.fake_buffer, tape, phase);

  const Var fake_term = (tape.mean(t.score_noise) + tape.mean(t.score_buffer)) * 0.5;
  t.discriminator = fake_term - tape.mean(t.score_real);
  t.generator = t.v_penalty * config.gamma - fake_term;
  return t;
}

std::string log_entry_json(const LogEntry& e) {
  nlohmann::ordered_json j;
  j["iteration"] = e.iteration;
  if (!e.event.empty()) j["event"] = e.event;
  j["d_loss"] = e.discriminator_loss;
  j["g_loss"] = e.generator_loss;
  j["v_penalty"] = e.v_penalty;
  if (e.acceptance) j["acceptance"] = *e.acceptance;
  if (e.ess) j["ess"] = *e.ess;
  j["elapsed_seconds"] = e.elapsed_seconds;
  return j.dump();
}

// ---------------------------------------------------------------------------

namespace {

TrainConfig resolve(TrainConfig c, const EnergyTarget& target) {
  if (c.nice.x_dim != target.dim()) {
    if (c.nice.v_dim == c.nice.x_dim) c.nice.v_dim = target.dim();
    c.nice.x_dim = target.dim();
  }
  c.validate();
  return c;
}

Tensor alternate_rows(const Tensor& a, const Tensor& b) {
  const std::size_t n = std::min(a.rows(), b.rows());
  std::vector<double> out;
  out.reserve(n * a.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = (i % 2 == 0) ? a.row(i) : b.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor({n, a.cols()}, std::move(out));
}

}  // namespace

Trainer::Trainer(const EnergyTarget& target, TrainConfig config, std::uint64_t seed,
                 std::optional<ReferenceMoments> reference)
    : target_(target), config_(resolve(std::move(config), target)), seed_(seed),
      reference_(std::move(reference)), rng_(make_stream(seed, Stream::Training)) {
  std::mt19937_64 init(derive_seed(seed, static_cast<std::uint64_t>(Stream::ModelInit), 0));
  model_ = NiceModel::create(config_.nice, init);
  const std::size_t critic_in = config_.pairwise ? 2 * config_.nice.x_dim : config_.nice.x_dim;
  critic_ = Mlp::xavier(critic_in, config_.discriminator_hidden, 1, Activation::LeakyRelu, init);
  model_params_ = model_.params();
  critic_.collect_params("critic", critic_params_);
  const AdamConfig adam{config_.learning_rate, config_.adam_beta1, config_.adam_beta2, 1e-8};
  model_adam_ = AdamState(adam, model_params_);
  critic_adam_ = AdamState(adam, critic_params_);
}

Tensor Trainer::mh_samples(std::size_t count, std::size_t burn_in, const Tensor* starts,
                           std::uint64_t seed_index) {
  const std::size_t chains = std::min(config_.bootstrap_chains, count);
  const std::size_t per_chain = (count + chains - 1) / chains;
  RunConfig run;
  run.n_chains = chains;
  run.burn_in = burn_in;
  run.n_steps = per_chain * config_.bootstrap_thin;
  run.seed = derive_seed(seed_, static_cast<std::uint64_t>(Stream::Bootstrap), seed_index);
  run.init_sigma = config_.init_sigma;
  run.threads = config_.threads;
  if (starts) run.initial_states = *starts;
  const NiceMhKernel kernel(model_);
  const ChainDump dump = run_chain(kernel, target_, run);
  if (!dump.failed_chains.empty()) throw NumericError("bootstrap sampling failed: " + dump.failure);

  Tensor out({count, dump.dim});
  std::size_t k = 0;
  for (std::size_t s = config_.bootstrap_thin - 1; s < dump.n_steps && k < count; s += config_.bootstrap_thin) {
    for (std::size_t c = 0; c < chains && k < count; ++c, ++k) {
      const auto src = dump.state(c, s);
      std::copy(src.begin(), src.end(), out.row(k).begin());
    }
  }
  return out;
}

void Trainer::initialize_buffer() {
  buffer_ = BootstrapBuffer(config_.effective_capacity(), config_.nice.x_dim);
  generation_ = 0;
  buffer_.fill(mh_samples(buffer_.capacity(), config_.bootstrap_initial_burn_in, nullptr, 0), 0);
}

void Trainer::refresh_buffer() {
  if (buffer_.empty()) {
    initialize_buffer();
    return;
  }
  ++generation_;
  const std::size_t half = buffer_.capacity() / 2;
  const Tensor starts = buffer_.sample(std::min(config_.bootstrap_chains, half), rng_);
  const Tensor fresh = mh_samples(half, config_.bootstrap_burn_in, &starts, generation_);
  buffer_.replace_half(fresh, generation_, rng_);
}

LogEntry Trainer::iterate() {
  if (buffer_.empty()) initialize_buffer();
  auto losses = config_.pairwise ? pairwise_losses : mgan_losses;
  LogEntry e;
  e.iteration = ++iteration_;

  for (std::size_t k = 0; k < config_.critic_steps; ++k) {
    Tape tape;
    const LossTerms t = losses(critic_, buffer_, model_, config_, rng_, tape, Phase::Critic);
    Var loss = t.discriminator;
    if (config_.lipschitz == LipschitzMode::FiniteDiffPenalty && config_.penalty_weight > 0.0) {
      const Tensor fake = alternate_rows(t.fake_noise.value(), t.fake_buffer.value());
      loss = loss + lipschitz_penalty(critic_, t.real, fake, config_.penalty_delta, rng_, tape) *
                        config_.penalty_weight;
    }
    e.discriminator_loss = loss.value().item();
    if (!std::isfinite(e.discriminator_loss)) {
      throw NumericError("non-finite discriminator loss at iteration " + std::to_string(iteration_));
    }
    const Gradients g = tape.backward(loss);
    adam_step(critic_params_, collect_gradients(g, critic_params_), critic_adam_);
    if (config_.lipschitz == LipschitzMode::WeightClip) clip_weights(critic_params_, config_.clip_value);
  }

  Tape tape;
  const LossTerms t = losses(critic_, buffer_, model_, config_, rng_, tape, Phase::Generator);
  e.generator_loss = t.generator.value().item();
  e.v_penalty = t.v_penalty.value().item();
  if (!std::isfinite(e.generator_loss)) {
    throw NumericError("non-finite generator loss at iteration " + std::to_string(iteration_));
  }
  const Gradients g = tape.backward(t.generator);
  adam_step(model_params_, collect_gradients(g, model_params_), model_adam_);
  return e;
}

LogEntry Trainer::evaluate() {
  RunConfig run;
  run.n_chains = config_.eval_chains;
  run.burn_in = config_.eval_burn_in;
  run.n_steps = config_.eval_steps;
  run.seed = derive_seed(seed_, static_cast<std::uint64_t>(Stream::Evaluation), iteration_);
  run.init_sigma = config_.init_sigma;
  run.threads = config_.threads;
  const NiceMhKernel kernel(model_);
  const ChainDump dump = run_chain(kernel, target_, run);
  LogEntry e;
  e.iteration = iteration_;
  e.event = "evaluate";
  e.acceptance = dump.mean_acceptance();
  if (reference_ && dump.failed_chains.empty()) e.ess = ess_report(dump, target_, *reference_).min_ess;
  return e;
}

TrainResult Trainer::run(const std::function<void(const LogEntry&)>& on_log) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrainResult result;
  auto emit = [&](LogEntry e) {
    e.elapsed_seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (on_log) on_log(e);
    result.log.push_back(std::move(e));
  };
  auto save = [&](const NiceModel& m) {
    if (config_.checkpoint_path.empty()) return;
    Checkpoint ck = m.to_checkpoint();
    ck.metadata.emplace_back("target", target_.name());
    ck.metadata.emplace_back("seed", std::to_string(seed_));
    ck.metadata.emplace_back("iteration", std::to_string(iteration_));
    write_checkpoint(config_.checkpoint_path, ck);
  };

  initialize_buffer();
  emit(LogEntry{iteration_, 0, 0, 0, {}, {}, 0, "bootstrap"});
  NiceModel last_good = model_;

  while (iteration_ < config_.iterations) {
    try {
      emit(iterate());
    } catch (const NumericError& err) {
      model_ = last_good;
      model_params_ = model_.params();
      result.diverged = true;
      result.message = err.what();
      emit(LogEntry{iteration_, 0, 0, 0, {}, {}, 0, "diverged"});
      save(model_);
      result.model = model_;
      return result;
    }
    last_good = model_;
    if (iteration_ % config_.bootstrap_refresh_interval == 0 && iteration_ < config_.iterations) {
      try {
        refresh_buffer();
        emit(LogEntry{iteration_, 0, 0, 0, {}, {}, 0, "bootstrap"});
      } catch (const NumericError&) {
        --generation_;
        emit(LogEntry{iteration_, 0, 0, 0, {}, {}, 0, "bootstrap_failed"});
      }
    }
    if (config_.eval_interval && iteration_ % config_.eval_interval == 0) emit(evaluate());
    if (config_.checkpoint_interval && iteration_ % config_.checkpoint_interval == 0) save(model_);
  }
  save(model_);
  result.model = model_;
  return result;
}

TrainResult train(const EnergyTarget& target, const TrainConfig& config, std::uint64_t seed,
                  std::optional<ReferenceMoments> reference,
                  const std::function<void(const LogEntry&)>& on_log) {
  Trainer trainer(target, config, seed, std::move(reference));
  return trainer.run(on_log);
}

}  // namespace anicemc
