#pragma once

#include "anicemc/nice.hpp"
#include "anicemc/rng.hpp"
#include "anicemc/targets.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace anicemc {

struct HmcConfig {
  double step_size = 0.1;
  int leapfrog_steps = 40;
};

/// H(x, v) = U(x) + vᵀv / 2.
double hamiltonian(double energy, std::span<const double> v) noexcept;

/// min(1, exp(h_current - h_proposed)); 0 when the proposal is non-finite.
double mh_accept_probability(double h_current, double h_proposed) noexcept;

/// Leapfrog integration of every row of (x, v) in place: half momentum step,
/// `steps` position steps interleaved with full momentum steps, closing half
/// momentum step, then v is negated. Returns 1 per row whose trajectory stayed finite.
std::vector<char> leapfrog(const EnergyTarget& target, Tensor& x, Tensor& v, double step_size,
                           int steps);

/// A batch of independent chains. Each chain owns its random stream, so the
/// result does not depend on how chains are grouped or scheduled.
struct ChainBatch {
  Tensor x;                    // [n, dim]
  std::vector<double> energy;  // cached U(x) per row
  std::vector<StreamRng> rng;

  std::size_t size() const { return rng.size(); }
  void refresh_energy(const EnergyTarget& target);
};

struct StepOutcome {
  std::vector<char> accepted;
  std::vector<double> accept_prob;
  std::vector<char> nonfinite;
};

/// A Markov transition applied to every chain of a batch.
class TransitionKernel {
 public:
  virtual ~TransitionKernel() = default;
  virtual std::string describe() const = 0;
  virtual StepOutcome step(const EnergyTarget& target, ChainBatch& chains) const = 0;
};

class HmcKernel final : public TransitionKernel {
 public:
  explicit HmcKernel(HmcConfig config);
  std::string describe() const override;
  StepOutcome step(const EnergyTarget& target, ChainBatch& chains) const override;
  const HmcConfig& config() const { return config_; }

 private:
  HmcConfig config_;
};

/// Result of a NICE proposal for a batch of states.
struct NiceProposal {
  Tensor v;                  // auxiliary draw the proposal started from
  Tensor x_next;
  Tensor v_next;
  std::vector<char> forward; // 1 where f was applied, 0 where f⁻¹ was
};

/// Applies f where direction_u > 0.5 and f⁻¹ where direction_u <= 0.5, row by row.
NiceProposal nice_propose(const NiceModel& model, const Tensor& x, const Tensor& v,
                          std::span<const double> direction_u);

/// Draws v ~ N(0, I) and u ~ U[0, 1) from each chain's stream, then proposes.
NiceProposal nice_proposal(const NiceModel& model, const Tensor& x, std::span<StreamRng> rng);

/// NICE proposal followed by a Metropolis-Hastings test on p(x, v) = p_d(x) N(v; 0, I).
/// The proposal is symmetric, so no proposal-density ratio enters the test; v'
/// is dropped after the step.
class NiceMhKernel final : public TransitionKernel {
 public:
  explicit NiceMhKernel(const NiceModel& model) : model_(&model) {}
  std::string describe() const override;
  StepOutcome step(const EnergyTarget& target, ChainBatch& chains) const override;
  const NiceModel& model() const { return *model_; }

 private:
  const NiceModel* model_;
};

struct RunConfig {
  std::size_t n_chains = 1;
  std::size_t burn_in = 0;
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;
  /// x₀ ~ N(0, init_sigma² I) unless `initial_states` is given.
  double init_sigma = 1.0;
  std::optional<Tensor> initial_states;
  unsigned threads = 1;
};

/// Post-burn-in samples of a batched run.
struct ChainDump {
  std::string target_name;
  std::string kernel;
  std::size_t n_chains = 0;
  std::size_t n_steps = 0;
  std::size_t dim = 0;
  std::vector<double> samples;  // [chain][step][dim]
  std::vector<double> acceptance_rate;
  std::vector<std::uint64_t> nonfinite_rejections;
  double wall_time_seconds = 0.0;
  double burn_in_seconds = 0.0;
  /// Chains whose run was cut short by an error, with the reason.
  std::vector<std::size_t> failed_chains;
  std::string failure;

  std::span<const double> state(std::size_t chain, std::size_t step) const {
    return std::span<const double>(samples).subspan((chain * n_steps + step) * dim, dim);
  }
  /// One coordinate as [n_chains][n_steps] series.
  std::vector<std::vector<double>> coordinate(std::size_t d) const;
  /// Target's summary statistic as [n_chains][n_steps] series.
  std::vector<std::vector<double>> statistic(const EnergyTarget& target) const;
  /// Final state of each chain, [n_chains, dim].
  Tensor final_states() const;
  double mean_acceptance() const;
};

/// Runs `burn_in` discarded transitions then records `n_steps`. Deterministic
/// given the seed; chains are split across `threads` workers and merged by index.
ChainDump run_chain(const TransitionKernel& kernel, const EnergyTarget& target,
                    const RunConfig& config);

/// Maximum-likelihood σ of N(0, σ² I) for a sample of states.
double fit_isotropic_sigma(const Tensor& states);

}  // namespace anicemc
