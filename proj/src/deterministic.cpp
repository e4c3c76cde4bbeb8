#include "isingep/deterministic.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "isingep/rng.hpp"

namespace isingep {

namespace {

void check_euler(double dt, int steps) {
  if (!(dt > 0.0 && dt <= 1.0)) throw std::invalid_argument("dt must be in (0, 1]");
  if (steps < 1) throw std::invalid_argument("step count must be >= 1");
}

SpinState activation_spins(const std::vector<double>& mean_rho) {
  SpinState spins;
  spins.reserve(mean_rho.size());
  for (double a : mean_rho) spins.push_back(a > 0.5 ? Spin{1} : Spin{-1});
  return spins;
}

double activation_error(const std::vector<double>& mean_rho, const std::vector<double>& targets) {
  double e = 0.0;
  for (size_t o = 0; o < mean_rho.size(); ++o) {
    const double d = mean_rho[o] - targets[o];
    e += d * d;
  }
  return e;
}

}  // namespace

DetState relax(DetState state, const FcParameters& params, const FcArchitecture& arch,
               const std::vector<double>& x, const std::vector<double>* targets, double beta,
               int steps, double dt) {
  check_euler(dt, steps);
  if ((beta > 0.0) != (targets != nullptr)) {
    throw std::invalid_argument("targets are required exactly when beta > 0");
  }
  if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
  const size_t nh = static_cast<size_t>(arch.n_hidden);
  const size_t no = static_cast<size_t>(arch.n_outputs());
  if (x.size() != static_cast<size_t>(arch.n_inputs) || state.hidden.size() != nh ||
      state.output.size() != no || (targets && targets->size() != no)) {
    throw std::invalid_argument("state/input/target sizes do not match the architecture");
  }

  // inputs are clamped, so their contribution to the hidden drive is constant
  std::vector<double> in_drive(nh);
  for (size_t j = 0; j < nh; ++j) {
    double d = params.h_bias_hidden[j];
    for (size_t k = 0; k < x.size(); ++k) d += params.W_input[k][j] * x[k];
    in_drive[j] = d;
  }

  const int window = std::max(1, steps / 2);  // tail steps that enter the statistics
  std::vector<double> sum_rho_h(nh, 0.0), sum_rho_o(no, 0.0);
  Matrix sum_corr(nh, std::vector<double>(no, 0.0));

  std::vector<double> rho_h(nh), rho_o(no), new_h(nh), new_o(no);
  for (int step = 0; step < steps; ++step) {
    for (size_t j = 0; j < nh; ++j) rho_h[j] = rho(state.hidden[j]);
    for (size_t o = 0; o < no; ++o) rho_o[o] = rho(state.output[o]);
    double residual = 0.0;
    for (size_t j = 0; j < nh; ++j) {
      double drive = in_drive[j];
      for (size_t o = 0; o < no; ++o) drive += params.J_hidden_output[j][o] * rho_o[o];
      const double ds = -state.hidden[j] + rho_prime(state.hidden[j]) * drive;
      new_h[j] = state.hidden[j] + dt * ds;
      residual = std::max(residual, std::abs(dt * ds));
    }
    for (size_t o = 0; o < no; ++o) {
      double drive = params.h_bias_output[o];
      for (size_t j = 0; j < nh; ++j) drive += params.J_hidden_output[j][o] * rho_h[j];
      double ds = -state.output[o] + rho_prime(state.output[o]) * drive;
      if (targets) ds -= beta * (rho_o[o] - (*targets)[o]);
      new_o[o] = state.output[o] + dt * ds;
      residual = std::max(residual, std::abs(dt * ds));
    }
    state.hidden.swap(new_h);
    state.output.swap(new_o);
    state.residual = residual;

    if (step >= steps - window) {
      for (size_t j = 0; j < nh; ++j) rho_h[j] = rho(state.hidden[j]);
      for (size_t o = 0; o < no; ++o) rho_o[o] = rho(state.output[o]);
      for (size_t j = 0; j < nh; ++j) {
        sum_rho_h[j] += rho_h[j];
        for (size_t o = 0; o < no; ++o) sum_corr[j][o] += rho_h[j] * rho_o[o];
      }
      for (size_t o = 0; o < no; ++o) sum_rho_o[o] += rho_o[o];
    }
  }

  for (double s : state.hidden) {
    if (!std::isfinite(s)) throw std::runtime_error("relaxation produced a non-finite state");
  }
  for (double s : state.output) {
    if (!std::isfinite(s)) throw std::runtime_error("relaxation produced a non-finite state");
  }

  // window sums are integer counts; a unit whose activation never flipped in
  // the window contributes exactly 0 or `window`
  state.converged = true;
  state.mean_rho_hidden.resize(nh);
  state.mean_rho_output.resize(no);
  state.mean_corr.assign(nh, std::vector<double>(no));
  for (size_t j = 0; j < nh; ++j) {
    state.converged = state.converged && (sum_rho_h[j] == 0.0 || sum_rho_h[j] == window);
    state.mean_rho_hidden[j] = sum_rho_h[j] / window;
    for (size_t o = 0; o < no; ++o) state.mean_corr[j][o] = sum_corr[j][o] / window;
  }
  for (size_t o = 0; o < no; ++o) {
    state.converged = state.converged && (sum_rho_o[o] == 0.0 || sum_rho_o[o] == window);
    state.mean_rho_output[o] = sum_rho_o[o] / window;
  }
  return state;
}

DetState free_relax(const FcParameters& params, const FcArchitecture& arch,
                    const std::vector<double>& x, const DetConfig& cfg) {
  DetState s;
  s.hidden.assign(static_cast<size_t>(arch.n_hidden), 1.0);
  s.output.assign(static_cast<size_t>(arch.n_outputs()), 1.0);
  return relax(std::move(s), params, arch, x, nullptr, 0.0, cfg.free_steps, cfg.dt);
}

FcGradients det_gradient(const DetState& free_state, const DetState& nudge_state, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (free_state.mean_rho_hidden.size() != nudge_state.mean_rho_hidden.size() ||
      free_state.mean_rho_output.size() != nudge_state.mean_rho_output.size()) {
    throw std::invalid_argument("free and nudge states have different shapes");
  }
  const size_t nh = free_state.mean_rho_hidden.size();
  const size_t no = free_state.mean_rho_output.size();
  FcGradients g;
  g.dJ.assign(nh, std::vector<double>(no));
  g.dh_hidden.resize(nh);
  g.dh_output.resize(no);
  for (size_t j = 0; j < nh; ++j) {
    for (size_t o = 0; o < no; ++o) {
      g.dJ[j][o] = (nudge_state.mean_corr[j][o] - free_state.mean_corr[j][o]) / beta;
    }
    g.dh_hidden[j] = (nudge_state.mean_rho_hidden[j] - free_state.mean_rho_hidden[j]) / beta;
  }
  for (size_t o = 0; o < no; ++o) {
    g.dh_output[o] = (nudge_state.mean_rho_output[o] - free_state.mean_rho_output[o]) / beta;
  }
  return g;
}

std::vector<double> det_targets(int label, int n_classes, int spins_per_class) {
  if (label < 0 || label >= n_classes) throw std::invalid_argument("label out of range");
  std::vector<double> t(static_cast<size_t>(n_classes * spins_per_class), 0.0);
  for (int k = 0; k < spins_per_class; ++k) t[static_cast<size_t>(label * spins_per_class + k)] = 1.0;
  return t;
}

void det_sgd_step(FcParameters& params, const FcGradients& grads, const Matrix& dW_input,
                  const DetConfig& cfg) {
  if (dW_input.size() != params.W_input.size() || grads.dJ.size() != params.J_hidden_output.size()) {
    throw std::invalid_argument("gradient shapes do not match the parameters");
  }
  for (size_t k = 0; k < params.W_input.size(); ++k) {
    for (size_t j = 0; j < params.W_input[k].size(); ++j) {
      params.W_input[k][j] += cfg.lr_w * dW_input[k][j];
    }
  }
  for (size_t j = 0; j < params.J_hidden_output.size(); ++j) {
    for (size_t o = 0; o < params.J_hidden_output[j].size(); ++o) {
      params.J_hidden_output[j][o] += cfg.lr_w * grads.dJ[j][o];
    }
    params.h_bias_hidden[j] += cfg.lr_b * grads.dh_hidden[j];
  }
  for (size_t o = 0; o < params.h_bias_output.size(); ++o) {
    params.h_bias_output[o] += cfg.lr_b * grads.dh_output[o];
  }
}

EpochMetrics det_train_epoch(const Dataset& train, FcParameters& params,
                             const FcArchitecture& arch, const DetConfig& cfg, int epoch) {
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  const auto start = std::chrono::steady_clock::now();
  EpochMetrics m;
  m.epoch = epoch;

  const uint64_t base = mix_seed(cfg.seed, 0x10000ull + static_cast<uint64_t>(epoch));
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng shuffle_rng(mix_seed(base, 0));
  shuffle_rng.shuffle(order);

  int correct = 0;
  double mse = 0.0;
  for (size_t i : order) {
    const std::vector<double>& x = train.images[i];
    const DetState free_state = free_relax(params, arch, x, cfg);
    m.unconverged += !free_state.converged;

    const std::vector<double> targets =
        det_targets(train.labels[i], arch.n_classes, arch.spins_per_class);
    correct += readout(activation_spins(free_state.mean_rho_output), arch.n_classes,
                       arch.spins_per_class) == train.labels[i];
    mse += activation_error(free_state.mean_rho_output, targets);

    if (cfg.skip_nudge && free_state.mean_rho_output == targets) {
      ++m.nudges_skipped;
      continue;
    }
    const DetState nudge_state =
        relax(free_state, params, arch, x, &targets, cfg.beta, cfg.nudge_steps, cfg.dt);
    const FcGradients g = det_gradient(free_state, nudge_state, cfg.beta);
    const Matrix dW = input_weight_gradient(g.dh_hidden, x, 1.0);
    det_sgd_step(params, g, dW, cfg);
  }

  const size_t n = train.size();
  m.train_acc = n ? 100.0 * correct / static_cast<double>(n) : 0.0;
  m.train_mse = n ? mse / static_cast<double>(n) : 0.0;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::pair<double, double> det_evaluate(const Dataset& data, const FcParameters& params,
                                       const FcArchitecture& arch, const DetConfig& cfg) {
  int correct = 0;
  double mse = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    const DetState s = free_relax(params, arch, data.images[i], cfg);
    correct += readout(activation_spins(s.mean_rho_output), arch.n_classes, arch.spins_per_class) ==
               data.labels[i];
    mse += activation_error(s.mean_rho_output,
                            det_targets(data.labels[i], arch.n_classes, arch.spins_per_class));
  }
  const double n = data.size() ? static_cast<double>(data.size()) : 1.0;
  return {100.0 * correct / n, mse / n};
}

}  // namespace isingep
