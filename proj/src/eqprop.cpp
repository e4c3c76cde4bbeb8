#include "isingep/eqprop.hpp"

#include <chrono>
#include <numeric>
#include <stdexcept>

#include "isingep/rng.hpp"

namespace isingep {

namespace {

AnnealSchedule make_schedule(ScheduleKind kind, double t_hot, const AnnealerSettings& s) {
  AnnealSchedule sched;
  sched.kind = kind;
  sched.t_hot = t_hot;
  sched.t_cold = s.t_cold;
  sched.n_sweeps = s.n_sweeps;
  sched.reverse_fraction = s.reverse_fraction;
  return sched;
}

double squared_output_error(const SpinState& outputs, const SpinState& targets) {
  double e = 0.0;
  for (size_t k = 0; k < outputs.size(); ++k) {
    const double d = outputs[k] - targets[k];
    e += d * d;
  }
  return e;
}

}  // namespace

SamplerConfig AnnealPhaseSampler::config_for(const IsingProblem& problem, uint64_t seed) {
  if (t_hot_ < 0.0) t_hot_ = default_t_hot(problem, settings_.t_hot_factor);
  SamplerConfig cfg;
  cfg.n_reads = settings_.n_reads;
  cfg.seed = seed;
  cfg.schedule_free = make_schedule(ScheduleKind::forward, t_hot_, settings_);
  cfg.schedule_nudge = make_schedule(ScheduleKind::reverse, t_hot_, settings_);
  return cfg;
}

SpinState AnnealPhaseSampler::free_phase(const IsingProblem& problem, uint64_t seed) {
  return isingep::free_phase(problem, config_for(problem, seed));
}

SpinState AnnealPhaseSampler::nudge_phase(const IsingProblem& nudged_problem,
                                          const SpinState& free_state, uint64_t seed) {
  const SamplerConfig cfg = config_for(nudged_problem, seed);
  return sample_best(nudged_problem, Phase::nudge, free_state, cfg).state;
}

SpinState BruteForcePhaseSampler::free_phase(const IsingProblem& problem, uint64_t) {
  return ground_state_bruteforce(problem).state;
}

SpinState BruteForcePhaseSampler::nudge_phase(const IsingProblem& nudged_problem, const SpinState&,
                                              uint64_t) {
  return ground_state_bruteforce(nudged_problem).state;
}

SpinState free_phase(const IsingProblem& problem, const SamplerConfig& cfg) {
  return sample_best(problem, Phase::free, std::nullopt, cfg).state;
}

SpinState nudge_phase(const IsingProblem& problem, const SpinState& free_state,
                      const std::vector<int>& outputs, const SpinState& targets, double beta,
                      const SamplerConfig& cfg) {
  const IsingProblem nudged = apply_nudge(problem, outputs, targets, beta);
  return sample_best(nudged, Phase::nudge, free_state, cfg).state;
}

SpinState gather(const SpinState& state, const std::vector<int>& indices) {
  SpinState out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(state.at(static_cast<size_t>(i)));
  return out;
}

FcGradients fc_gradients(const SpinState& free_state, const SpinState& nudge_state, double beta,
                         const std::vector<int>& hidden, const std::vector<int>& outputs) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (free_state.size() != nudge_state.size()) {
    throw std::invalid_argument("free and nudge states have different lengths");
  }
  FcGradients g;
  g.dJ.assign(hidden.size(), std::vector<double>(outputs.size()));
  g.dh_hidden.resize(hidden.size());
  g.dh_output.resize(outputs.size());
  for (size_t a = 0; a < hidden.size(); ++a) {
    const size_t i = static_cast<size_t>(hidden[a]);
    for (size_t b = 0; b < outputs.size(); ++b) {
      const size_t j = static_cast<size_t>(outputs[b]);
      g.dJ[a][b] = -(double(nudge_state[i]) * nudge_state[j] - double(free_state[i]) * free_state[j]) / beta;
    }
    g.dh_hidden[a] = -(double(nudge_state[i]) - free_state[i]) / beta;
  }
  for (size_t b = 0; b < outputs.size(); ++b) {
    const size_t j = static_cast<size_t>(outputs[b]);
    g.dh_output[b] = -(double(nudge_state[j]) - free_state[j]) / beta;
  }
  return g;
}

Matrix input_weight_gradient(const std::vector<double>& dh_hidden, const std::vector<double>& x,
                             double input_scale) {
  Matrix dW(x.size(), std::vector<double>(dh_hidden.size()));
  for (size_t k = 0; k < x.size(); ++k) {
    for (size_t j = 0; j < dh_hidden.size(); ++j) {
      dW[k][j] = x[k] * dh_hidden[j] / input_scale;
    }
  }
  return dW;
}

std::vector<Matrix> conv_gradient(const SpinState& free_logical, const SpinState& nudge_logical,
                                  double beta, const ConvArchitecture& arch) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  std::vector<Matrix> d(static_cast<size_t>(arch.n_filters),
                        Matrix(static_cast<size_t>(arch.kernel),
                               std::vector<double>(static_cast<size_t>(arch.kernel), 0.0)));
  for (int p = 0; p < arch.n_patches(); ++p) {
    for (int f = 0; f < arch.n_filters; ++f) {
      const size_t h = static_cast<size_t>(arch.conv_spin(p, f));
      for (int k = 0; k < arch.kernel_size(); ++k) {
        const size_t x = static_cast<size_t>(arch.input_spin(p, k));
        const double diff = double(nudge_logical[x]) * nudge_logical[h] -
                            double(free_logical[x]) * free_logical[h];
        d[static_cast<size_t>(f)][static_cast<size_t>(k / arch.kernel)][static_cast<size_t>(k % arch.kernel)] -=
            diff / beta;
      }
    }
  }
  return d;
}

void sgd_step(FcParameters& params, const FcGradients& grads, const Matrix& dW_input,
              const FcArchitecture& arch, const TrainConfig& cfg) {
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
      double v = params.J_hidden_output[j][o] + cfg.lr_w * grads.dJ[j][o] / arch.chip_scale;
      params.J_hidden_output[j][o] = cfg.clip ? arch.j_range.clamp(v) : v;
    }
  }
  for (size_t j = 0; j < params.h_bias_hidden.size(); ++j) {
    double v = params.h_bias_hidden[j] + cfg.lr_b * grads.dh_hidden[j];
    params.h_bias_hidden[j] = cfg.clip ? arch.h_range.clamp(v) : v;
  }
  for (size_t o = 0; o < params.h_bias_output.size(); ++o) {
    double v = params.h_bias_output[o] + cfg.lr_b * grads.dh_output[o] / arch.chip_scale;
    params.h_bias_output[o] = cfg.clip ? arch.h_range.clamp(v) : v;
  }
}

void sgd_step(ConvParameters& params, const std::vector<Matrix>& dfilters,
              const FcGradients& classifier, const ConvArchitecture& arch, const TrainConfig& cfg) {
  if (dfilters.size() != params.filters.size() || classifier.dJ.size() != params.W_class.size()) {
    throw std::invalid_argument("gradient shapes do not match the parameters");
  }
  for (size_t f = 0; f < params.filters.size(); ++f) {
    for (size_t u = 0; u < params.filters[f].size(); ++u) {
      for (size_t v = 0; v < params.filters[f][u].size(); ++v) {
        double w = params.filters[f][u][v] + cfg.lr_w * dfilters[f][u][v] / arch.conv_scale;
        params.filters[f][u][v] = cfg.clip ? arch.j_range.clamp(w) : w;
      }
    }
  }
  for (size_t f = 0; f < params.W_class.size(); ++f) {
    for (size_t o = 0; o < params.W_class[f].size(); ++o) {
      double w = params.W_class[f][o] + cfg.lr_w * classifier.dJ[f][o] / arch.class_scale;
      params.W_class[f][o] = cfg.clip ? arch.j_range.clamp(w) : w;
    }
  }
  for (size_t o = 0; o < params.biases.size(); ++o) {
    double w = params.biases[o] + cfg.lr_b * classifier.dh_output[o] / arch.class_scale;
    params.biases[o] = cfg.clip ? arch.h_range.clamp(w) : w;
  }
}

EpochMetrics train_epoch(const Dataset& train, FcParameters& params, const FcArchitecture& arch,
                         const TrainConfig& cfg, PhaseSampler& sampler, int epoch) {
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
  for (size_t t = 0; t < order.size(); ++t) {
    const size_t i = order[t];
    const std::vector<double>& x = train.images[i];
    const FcProblem fp = build_fc_problem(arch, params, x);
    const SpinState free_state = sampler.free_phase(fp.problem, mix_seed(base, 2 * t + 1));

    const SpinState out_spins = gather(free_state, fp.outputs);
    const SpinState targets = target_spins(train.labels[i], arch.n_classes, arch.spins_per_class);
    correct += readout(out_spins, arch.n_classes, arch.spins_per_class) == train.labels[i];
    mse += squared_output_error(out_spins, targets);

    if (cfg.skip_nudge && out_spins == targets) {
      ++m.nudges_skipped;
      continue;
    }
    const IsingProblem nudged = apply_nudge(fp.problem, fp.outputs, targets, cfg.beta);
    const SpinState nudge_state = sampler.nudge_phase(nudged, free_state, mix_seed(base, 2 * t + 2));

    const FcGradients g = fc_gradients(free_state, nudge_state, cfg.beta, fp.hidden, fp.outputs);
    const Matrix dW = input_weight_gradient(g.dh_hidden, x, arch.input_scale);
    sgd_step(params, g, dW, arch, cfg);
  }

  const size_t n = train.size();
  m.train_acc = n ? 100.0 * correct / static_cast<double>(n) : 0.0;
  m.train_mse = n ? mse / static_cast<double>(n) : 0.0;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

EpochMetrics train_epoch(const Dataset& train, ConvParameters& params, const ConvArchitecture& arch,
                         const TrainConfig& cfg, PhaseSampler& sampler, int epoch) {
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
  for (size_t t = 0; t < order.size(); ++t) {
    const size_t i = order[t];
    const ConvProblem cp = build_conv_problem(arch, params, train.images[i]);
    const SpinState free_phys = sampler.free_phase(cp.physical, mix_seed(base, 2 * t + 1));
    const SpinState free_log = unembed(free_phys, cp.embedding);

    const SpinState out_spins = gather(free_log, cp.outputs);
    const SpinState targets = target_spins(train.labels[i], arch.n_classes, arch.spins_per_class);
    correct += readout(out_spins, arch.n_classes, arch.spins_per_class) == train.labels[i];
    mse += squared_output_error(out_spins, targets);

    if (cfg.skip_nudge && out_spins == targets) {
      ++m.nudges_skipped;
      continue;
    }
    const IsingProblem nudged = apply_nudge(cp.physical, cp.output_sites, targets, cfg.beta);
    const SpinState nudge_phys = sampler.nudge_phase(nudged, free_phys, mix_seed(base, 2 * t + 2));
    const SpinState nudge_log = unembed(nudge_phys, cp.embedding);

    const std::vector<Matrix> dfilters = conv_gradient(free_log, nudge_log, cfg.beta, arch);
    const FcGradients classifier = fc_gradients(free_log, nudge_log, cfg.beta, cp.pool, cp.outputs);
    sgd_step(params, dfilters, classifier, arch, cfg);
  }

  const size_t n = train.size();
  m.train_acc = n ? 100.0 * correct / static_cast<double>(n) : 0.0;
  m.train_mse = n ? mse / static_cast<double>(n) : 0.0;
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::pair<double, double> evaluate(const Dataset& data, const FcParameters& params,
                                   const FcArchitecture& arch, const TrainConfig& cfg,
                                   PhaseSampler& sampler) {
  const uint64_t base = mix_seed(cfg.seed, 0x20000ull);
  int correct = 0;
  double mse = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    const FcProblem fp = build_fc_problem(arch, params, data.images[i]);
    const SpinState state = sampler.free_phase(fp.problem, mix_seed(base, i + 1));
    const SpinState out_spins = gather(state, fp.outputs);
    correct += readout(out_spins, arch.n_classes, arch.spins_per_class) == data.labels[i];
    mse += squared_output_error(out_spins,
                                target_spins(data.labels[i], arch.n_classes, arch.spins_per_class));
  }
  const double n = data.size() ? static_cast<double>(data.size()) : 1.0;
  return {100.0 * correct / n, mse / n};
}

std::pair<double, double> evaluate(const Dataset& data, const ConvParameters& params,
                                   const ConvArchitecture& arch, const TrainConfig& cfg,
                                   PhaseSampler& sampler) {
  const uint64_t base = mix_seed(cfg.seed, 0x20000ull);
  int correct = 0;
  double mse = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    const ConvProblem cp = build_conv_problem(arch, params, data.images[i]);
    const SpinState state = unembed(sampler.free_phase(cp.physical, mix_seed(base, i + 1)), cp.embedding);
    const SpinState out_spins = gather(state, cp.outputs);
    correct += readout(out_spins, arch.n_classes, arch.spins_per_class) == data.labels[i];
    mse += squared_output_error(out_spins,
                                target_spins(data.labels[i], arch.n_classes, arch.spins_per_class));
  }
  const double n = data.size() ? static_cast<double>(data.size()) : 1.0;
  return {100.0 * correct / n, mse / n};
}

}  // namespace isingep
