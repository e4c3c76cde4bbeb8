#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "isingep/eqprop.hpp"
#include "isingep/networks.hpp"

namespace isingep {

// Deterministic reference network: same layered topology as the annealed FC
// net, but real-valued weights, binary Heaviside activations, and explicit
// gradient-flow dynamics instead of annealing. Serves as the software
// baseline the annealer results are compared against.

struct DetConfig {
  int free_steps = 30;   // Euler steps for the free phase
  int nudge_steps = 50;  // Euler steps for the nudge phase
  double dt = 0.5;       // Euler step size, must be in (0, 1]
  double beta = 2.0;
  double lr_w = 1e-1;
  double lr_b = 1e-2;
  int epochs = 50;
  bool skip_nudge = true;
  uint64_t seed = 0;
};

// Internal (pre-activation) states of the two free layers; inputs stay
// clamped to the pixel values and have no state of their own.
//
// The hard rho' gate makes the Euler dynamics limit-cycle whenever a unit's
// drive exceeds 1 (s bounces across the closed gate at s=1) or a nudged
// output fights a negative drive (s bounces across 0). The activations are
// the physically meaningful observable, and for a limit cycle their
// stationary statistic is the time average, so relax records activation
// means and pair correlations over the tail half of the steps. Whenever the
// dynamics truly settles these equal the final-state values.
struct DetState {
  std::vector<double> hidden;
  std::vector<double> output;
  std::vector<double> mean_rho_hidden;  // <rho(s_j)> over the tail window
  std::vector<double> mean_rho_output;
  Matrix mean_corr;         // <rho(s_j) rho(s_o)>, hidden x output
  bool converged = false;   // no activation flipped inside the tail window
  double residual = 0.0;    // max |ds| of the last step (diagnostic)
};

// Binary activation and the (arbitrary, but fixed) surrogate derivative
// that gates the synaptic drive. The gate window is symmetric around the
// activation threshold: if it only opened on (0, 1), a unit pushed below 0
// would be stuck — ds = -s merely decays toward 0 from below and never
// crosses it, so OFF would be absorbing and no drive could ever switch a
// hidden unit back ON. Opening the gate on (-1, 0] too lets positive drive
// recover such units while still saturating for |s| >= 1.
inline double rho(double s) { return s < 0.0 ? 0.0 : 1.0; }
inline double rho_prime(double s) { return (-1.0 < s && s < 1.0) ? 1.0 : 0.0; }

// Euler-integrates ds/dt = -s + rho'(s) * (synaptic drive) for `steps`
// steps, from the given state. With targets (beta > 0) the outputs feel an
// extra force -beta * (rho(y) - target) pulling their activation toward the
// target. That force is applied outside the rho' gate: an output resting
// OFF has s <= 0 where the gate is closed, so a gated nudge could never
// switch anything ON and learning would be one-sided.
// Targets must be null iff beta == 0. Throws on non-finite states.
DetState relax(DetState state, const FcParameters& params, const FcArchitecture& arch,
               const std::vector<double>& x, const std::vector<double>* targets, double beta,
               int steps, double dt);

// Free phase: all internal states start at 1.
DetState free_relax(const FcParameters& params, const FcArchitecture& arch,
                    const std::vector<double>& x, const DetConfig& cfg);

// Contrastive gradients on the recorded activation statistics, in the same
// container as the annealed trainer's. POSITIVE sign, opposite to
// fc_gradients: this network's energy carries -W terms, so strengthening a
// correlation means making the weight larger.
FcGradients det_gradient(const DetState& free_state, const DetState& nudge_state, double beta);

// {0,1} target activations: 1 on the label's block of output units.
std::vector<double> det_targets(int label, int n_classes, int spins_per_class);

// params += lr * grad, no clipping (nothing is range-limited here).
void det_sgd_step(FcParameters& params, const FcGradients& grads, const Matrix& dW_input,
                  const DetConfig& cfg);

// Same loop shape as the annealed trainer: shuffle, free phase, skip the
// nudge when the outputs already match, otherwise nudge + update. The MSE
// is in activation space (entries in {0,1}).
EpochMetrics det_train_epoch(const Dataset& train, FcParameters& params,
                             const FcArchitecture& arch, const DetConfig& cfg, int epoch);

// Free phase only; returns {accuracy percent, mean activation-space MSE}.
std::pair<double, double> det_evaluate(const Dataset& data, const FcParameters& params,
                                       const FcArchitecture& arch, const DetConfig& cfg);

}  // namespace isingep
