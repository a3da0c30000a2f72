#include "anicemc/samplers.hpp"

#include "anicemc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace anicemc {

double hamiltonian(double energy, std::span<const double> v) noexcept {
  double k = 0.0;
  for (double x : v) k += x * x;
  return energy + 0.5 * k;
}

double mh_accept_probability(double h_current, double h_proposed) noexcept {
  if (!std::isfinite(h_proposed) || !std::isfinite(h_current)) return 0.0;
  const double delta = h_current - h_proposed;
  return delta >= 0.0 ? 1.0 : std::exp(delta);
}

namespace {

bool row_finite(const Tensor& t, std::size_t r) {
  for (double x : t.row(r)) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

std::vector<char> leapfrog(const EnergyTarget& target, Tensor& x, Tensor& v, double step_size,
                           int steps) {
  require_same_shape(x, v, "leapfrog");
  if (steps < 1) throw ConfigError("leapfrog needs at least one step");
  const std::size_t n = x.rows();
  Tensor grad(x.shape());
  target.gradient_batch(x, grad);
  v.mat() -= 0.5 * step_size * grad.mat();
  for (int l = 0; l < steps; ++l) {
    x.mat() += step_size * v.mat();
    target.gradient_batch(x, grad);
    if (l + 1 < steps) v.mat() -= step_size * grad.mat();
  }
  v.mat() -= 0.5 * step_size * grad.mat();
  v.mat() *= -1.0;

  std::vector<char> finite(n, 1);
  for (std::size_t i = 0; i < n; ++i) finite[i] = row_finite(x, i) && row_finite(v, i);
  return finite;
}

void ChainBatch::refresh_energy(const EnergyTarget& target) {
  energy.assign(x.rows(), 0.0);
  target.energy_batch(x, energy);
}

// HMC

HmcKernel::HmcKernel(HmcConfig config) : config_(config) {
  if (!(config_.step_size >= 0.0) || config_.leapfrog_steps < 1) {
    throw ConfigError("HMC needs step_size >= 0 and leapfrog_steps >= 1");
  }
}

std::string HmcKernel::describe() const {
  std::ostringstream os;
  os << "hmc(step_size=" << config_.step_size << ", leapfrog_steps=" << config_.leapfrog_steps << ")";
  return os.str();
}

StepOutcome HmcKernel::step(const EnergyTarget& target, ChainBatch& chains) const {
  const std::size_t n = chains.size();
  const std::size_t d = target.dim();
  Tensor v(Shape{n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& e : v.row(i)) e = chains.rng[i].normal();
  }
  Tensor x_new = chains.x;
  Tensor v_new = v;
  auto finite = leapfrog(target, x_new, v_new, config_.step_size, config_.leapfrog_steps);
  std::vector<double> u_new(n);
  target.energy_batch(x_new, u_new);

  StepOutcome out{std::vector<char>(n, 0), std::vector<double>(n, 0.0), std::vector<char>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = finite[i] && std::isfinite(u_new[i]);
    const double h0 = hamiltonian(chains.energy[i], v.row(i));
    const double h1 = ok ? hamiltonian(u_new[i], v_new.row(i)) : INFINITY;
    out.nonfinite[i] = !ok || !std::isfinite(h1);
    out.accept_prob[i] = mh_accept_probability(h0, h1);
    const double u = chains.rng[i].uniform();
    if (u < out.accept_prob[i]) {
      out.accepted[i] = 1;
      std::copy_n(x_new.row(i).begin(), d, chains.x.row(i).begin());
      chains.energy[i] = u_new[i];
    }
  }
  return out;
}

// NICE proposal

NiceProposal nice_propose(const NiceModel& model, const Tensor& x, const Tensor& v,
                          std::span<const double> direction_u) {
  require_matrix(x, "nice_propose");
  const std::size_t n = x.rows();
  if (direction_u.size() != n) throw ConfigError("nice_propose: one direction draw per row required");

  NiceProposal p;
  p.v = v;
  p.x_next = Tensor(Shape{n, model.x_dim()});
  p.v_next = Tensor(Shape{n, model.v_dim()});
  p.forward.assign(n, 0);
  std::vector<std::size_t> fwd;
  std::vector<std::size_t> inv;
  for (std::size_t i = 0; i < n; ++i) {
    if (direction_u[i] > 0.5) {
      p.forward[i] = 1;
      fwd.push_back(i);
    } else {
      inv.push_back(i);
    }
  }
  auto scatter = [&](const std::vector<std::size_t>& idx, bool forward) {
    if (idx.empty()) return;
    const Tensor xs = gather_rows(x, idx);
    const Tensor vs = gather_rows(v, idx);
    auto [xo, vo] = forward ? model.forward(xs, vs) : model.inverse(xs, vs);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy_n(xo.row(k).begin(), model.x_dim(), p.x_next.row(idx[k]).begin());
      std::copy_n(vo.row(k).begin(), model.v_dim(), p.v_next.row(idx[k]).begin());
    }
  };
  scatter(fwd, true);
  scatter(inv, false);
  return p;
}

NiceProposal nice_proposal(const NiceModel& model, const Tensor& x, std::span<StreamRng> rng) {
  require_matrix(x, "nice_proposal");
  const std::size_t n = x.rows();
  if (rng.size() != n) throw ConfigError("nice_proposal: one stream per chain required");
  Tensor v(Shape{n, model.v_dim()});
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& e : v.row(i)) e = rng[i].normal();
    u[i] = rng[i].uniform();
  }
  return nice_propose(model, x, v, u);
}

std::string NiceMhKernel::describe() const {
  std::ostringstream os;
  os << "anicemc(x_dim=" << model_->x_dim() << ", v_dim=" << model_->v_dim()
     << ", pattern=" << model_->pattern() << ")";
  return os.str();
}

StepOutcome NiceMhKernel::step(const EnergyTarget& target, ChainBatch& chains) const {
  const std::size_t n = chains.size();
  const std::size_t d = target.dim();
  if (model_->x_dim() != d) {
    throw ConfigError("NICE model x_dim " + std::to_string(model_->x_dim()) +
                      " does not match target dimension " + std::to_string(d));
  }
  auto prop = nice_proposal(*model_, chains.x, chains.rng);
  std::vector<double> u_new(n);
  target.energy_batch(prop.x_next, u_new);

  StepOutcome out{std::vector<char>(n, 0), std::vector<double>(n, 0.0), std::vector<char>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const double h0 = hamiltonian(chains.energy[i], prop.v.row(i));
    const double h1 = hamiltonian(u_new[i], prop.v_next.row(i));
    const bool ok = std::isfinite(h1) && row_finite(prop.x_next, i);
    out.nonfinite[i] = !ok;
    out.accept_prob[i] = ok ? mh_accept_probability(h0, h1) : 0.0;
    const double u = chains.rng[i].uniform();
    if (u < out.accept_prob[i]) {
      out.accepted[i] = 1;
      std::copy_n(prop.x_next.row(i).begin(), d, chains.x.row(i).begin());
      chains.energy[i] = u_new[i];
    }
  }
  return out;
}

// Chain runner

std::vector<std::vector<double>> ChainDump::coordinate(std::size_t d) const {
  std::vector<std::vector<double>> out(n_chains, std::vector<double>(n_steps));
  for (std::size_t c = 0; c < n_chains; ++c) {
    for (std::size_t t = 0; t < n_steps; ++t) out[c][t] = state(c, t)[d];
  }
  return out;
}

std::vector<std::vector<double>> ChainDump::statistic(const EnergyTarget& target) const {
  std::vector<std::vector<double>> out(n_chains, std::vector<double>(n_steps));
  for (std::size_t c = 0; c < n_chains; ++c) {
    for (std::size_t t = 0; t < n_steps; ++t) out[c][t] = target.summary(state(c, t));
  }
  return out;
}

Tensor ChainDump::final_states() const {
  Tensor out(Shape{n_chains, dim});
  if (n_steps == 0) return out;
  for (std::size_t c = 0; c < n_chains; ++c) {
    auto s = state(c, n_steps - 1);
    std::copy(s.begin(), s.end(), out.row(c).begin());
  }
  return out;
}

double ChainDump::mean_acceptance() const {
  if (acceptance_rate.empty()) return 0.0;
  double s = 0.0;
  for (double a : acceptance_rate) s += a;
  return s / static_cast<double>(acceptance_rate.size());
}

namespace {

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  ChainBatch batch;
  std::vector<std::uint64_t> accepted;
  std::vector<std::uint64_t> nonfinite;
  std::exception_ptr error;
  std::size_t steps_done = 0;
};

template <class F>
void for_each_chunk(std::vector<Chunk>& chunks, F&& body) {
  if (chunks.size() == 1) {
    body(chunks[0]);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(chunks.size());
  for (auto& c : chunks) workers.emplace_back([&body, &c] { body(c); });
  for (auto& w : workers) w.join();
}

}  // namespace

ChainDump run_chain(const TransitionKernel& kernel, const EnergyTarget& target,
                    const RunConfig& config) {
  if (config.n_chains == 0) throw ConfigError("run_chain needs at least one chain");
  if (!(config.init_sigma > 0.0)) throw ConfigError("init_sigma must be positive");
  const std::size_t n = config.n_chains;
  const std::size_t d = target.dim();

  Tensor x0(Shape{n, d});
  if (config.initial_states) {
    const auto& s = *config.initial_states;
    if (s.rank() != 2 || s.rows() != n || s.cols() != d) {
      throw ConfigError("initial states " + shape_to_string(s.shape()) + " do not match " +
                        std::to_string(n) + " chains of dimension " + std::to_string(d));
    }
    x0 = s;
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      auto init = make_stream(config.seed, Stream::ChainInit, c);
      for (auto& e : x0.row(c)) e = config.init_sigma * init.normal();
    }
  }

  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(n)));
  std::vector<Chunk> chunks(threads);
  for (unsigned t = 0; t < threads; ++t) {
    auto& ch = chunks[t];
    ch.begin = n * t / threads;
    ch.end = n * (t + 1) / threads;
    std::vector<std::size_t> idx(ch.end - ch.begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = ch.begin + i;
    ch.batch.x = gather_rows(x0, idx);
    for (std::size_t c = ch.begin; c < ch.end; ++c) {
      ch.batch.rng.push_back(make_stream(config.seed, Stream::ChainStep, c));
    }
    ch.batch.refresh_energy(target);
    ch.accepted.assign(idx.size(), 0);
    ch.nonfinite.assign(idx.size(), 0);
  }

  ChainDump dump;
  dump.target_name = target.name();
  dump.kernel = kernel.describe();
  dump.n_chains = n;
  dump.n_steps = config.n_steps;
  dump.dim = d;
  dump.samples.assign(n * config.n_steps * d, 0.0);
  dump.acceptance_rate.assign(n, 0.0);
  dump.nonfinite_rejections.assign(n, 0);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  for_each_chunk(chunks, [&](Chunk& ch) {
    try {
      for (std::size_t s = 0; s < config.burn_in; ++s) kernel.step(target, ch.batch);
    } catch (...) {
      ch.error = std::current_exception();
    }
  });
  const auto t1 = clock::now();
  for_each_chunk(chunks, [&](Chunk& ch) {
    if (ch.error) return;
    try {
      for (std::size_t s = 0; s < config.n_steps; ++s) {
        const auto out = kernel.step(target, ch.batch);
        for (std::size_t i = 0; i < ch.batch.size(); ++i) {
          ch.accepted[i] += out.accepted[i];
          ch.nonfinite[i] += out.nonfinite[i];
          const auto c = ch.begin + i;
          std::copy_n(ch.batch.x.row(i).begin(), d, dump.samples.begin() + (c * config.n_steps + s) * d);
        }
        ++ch.steps_done;
      }
    } catch (...) {
      ch.error = std::current_exception();
    }
  });
  const auto t2 = clock::now();
  dump.burn_in_seconds = std::chrono::duration<double>(t1 - t0).count();
  dump.wall_time_seconds = std::chrono::duration<double>(t2 - t1).count();

  for (const auto& ch : chunks) {
    for (std::size_t i = 0; i < ch.batch.size(); ++i) {
      const auto c = ch.begin + i;
      dump.acceptance_rate[c] = ch.steps_done ? static_cast<double>(ch.accepted[i]) / ch.steps_done : 0.0;
      dump.nonfinite_rejections[c] = ch.nonfinite[i];
    }
    if (ch.error) {
      for (std::size_t c = ch.begin; c < ch.end; ++c) dump.failed_chains.push_back(c);
      try {
        std::rethrow_exception(ch.error);
      } catch (const std::exception& e) {
        if (dump.failure.empty()) dump.failure = e.what();
      }
    }
  }
  return dump;
}

double fit_isotropic_sigma(const Tensor& states) {
  require_matrix(states, "fit_isotropic_sigma");
  if (states.size() == 0) throw ConfigError("fit_isotropic_sigma: empty sample");
  return std::sqrt(states.mat().squaredNorm() / static_cast<double>(states.size()));
}

}  // namespace anicemc
