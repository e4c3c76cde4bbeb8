#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "isingep/annealer.hpp"
#include "isingep/data.hpp"
#include "isingep/networks.hpp"

namespace isingep {

// Recipe for the annealing sampler. The temperature scale is derived from
// the first problem the sampler sees (t_hot_factor * max coupling/bias
// magnitude) and then held fixed for the rest of training, so free and
// nudge phases stay comparable across the run.
struct AnnealerSettings {
  int n_reads = 10;
  double t_hot_factor = 2.0;
  double t_cold = 0.01;
  int n_sweeps = 200;
  double reverse_fraction = 0.25;
};

struct TrainConfig {
  double beta = 2.0;
  double lr_w = 1e-2;
  double lr_b = 1e-3;
  int epochs = 30;
  bool skip_nudge = true;
  bool clip = true;
  uint64_t seed = 0;
  AnnealerSettings annealer;
};

struct EpochMetrics {
  int epoch = 0;
  double train_acc = 0.0;  // percent, measured online during the epoch
  double test_acc = 0.0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  int nudges_skipped = 0;
  int unconverged = 0;  // free relaxations that missed the fixed-point tolerance (deterministic net only)
  double wall_seconds = 0.0;
};

// The training loop only needs the two equilibria; anything that can produce
// them (annealer, exact enumeration, deterministic dynamics) can train the
// same network. Seeds vary per example and phase; exact samplers ignore them.
class PhaseSampler {
 public:
  virtual ~PhaseSampler() = default;
  virtual SpinState free_phase(const IsingProblem& problem, uint64_t seed) = 0;
  virtual SpinState nudge_phase(const IsingProblem& nudged_problem, const SpinState& free_state,
                                uint64_t seed) = 0;
};

class AnnealPhaseSampler : public PhaseSampler {
 public:
  explicit AnnealPhaseSampler(const AnnealerSettings& settings) : settings_(settings) {}
  SpinState free_phase(const IsingProblem& problem, uint64_t seed) override;
  SpinState nudge_phase(const IsingProblem& nudged_problem, const SpinState& free_state,
                        uint64_t seed) override;
  double t_hot() const { return t_hot_; }  // < 0 until the first phase runs

 private:
  SamplerConfig config_for(const IsingProblem& problem, uint64_t seed);
  AnnealerSettings settings_;
  double t_hot_ = -1.0;
};

// Exact argmin via enumeration; the test oracle (n_spins <= 24).
class BruteForcePhaseSampler : public PhaseSampler {
 public:
  SpinState free_phase(const IsingProblem& problem, uint64_t seed) override;
  SpinState nudge_phase(const IsingProblem& nudged_problem, const SpinState& free_state,
                        uint64_t seed) override;
};

// Stand-alone phase drivers over an explicit SamplerConfig.
SpinState free_phase(const IsingProblem& problem, const SamplerConfig& cfg);
SpinState nudge_phase(const IsingProblem& problem, const SpinState& free_state,
                      const std::vector<int>& outputs, const SpinState& targets, double beta,
                      const SamplerConfig& cfg);

SpinState gather(const SpinState& state, const std::vector<int>& indices);

// Contrastive learning rules. The minus sign matches the +J energy
// convention: strengthening a correlation means making J more negative.
struct FcGradients {
  Matrix dJ;                        // hidden x outputs, chip-space
  std::vector<double> dh_hidden;    // chip-space
  std::vector<double> dh_output;    // chip-space
};

FcGradients fc_gradients(const SpinState& free_state, const SpinState& nudge_state, double beta,
                         const std::vector<int>& hidden, const std::vector<int>& outputs);

// dW[k][j] = x_k * dh_hidden[j] / input_scale (the scale is divided out so
// the master update matches the chip-space bias gradient).
Matrix input_weight_gradient(const std::vector<double>& dh_hidden, const std::vector<double>& x,
                             double input_scale);

// Shared-filter gradient, summed over the four patches, from *logical*
// states. Uses the same contrastive minus sign as fc_gradients: the filter
// couplings sit in the same +J energy, and the sign was confirmed by the
// 2-pattern loss-decrease run.
std::vector<Matrix> conv_gradient(const SpinState& free_logical, const SpinState& nudge_logical,
                                  double beta, const ConvArchitecture& arch);

// params += lr * grad / scale, then clip the on-chip masters to their ranges
// (W_input is off-chip and unclipped).
void sgd_step(FcParameters& params, const FcGradients& grads, const Matrix& dW_input,
              const FcArchitecture& arch, const TrainConfig& cfg);
void sgd_step(ConvParameters& params, const std::vector<Matrix>& dfilters,
              const FcGradients& classifier, const ConvArchitecture& arch, const TrainConfig& cfg);

EpochMetrics train_epoch(const Dataset& train, FcParameters& params, const FcArchitecture& arch,
                         const TrainConfig& cfg, PhaseSampler& sampler, int epoch);
EpochMetrics train_epoch(const Dataset& train, ConvParameters& params, const ConvArchitecture& arch,
                         const TrainConfig& cfg, PhaseSampler& sampler, int epoch);

// free phase only; returns {accuracy percent, mean MSE}
std::pair<double, double> evaluate(const Dataset& data, const FcParameters& params,
                                   const FcArchitecture& arch, const TrainConfig& cfg,
                                   PhaseSampler& sampler);
std::pair<double, double> evaluate(const Dataset& data, const ConvParameters& params,
                                   const ConvArchitecture& arch, const TrainConfig& cfg,
                                   PhaseSampler& sampler);

}  // namespace isingep
