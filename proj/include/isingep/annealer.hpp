#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "isingep/ising.hpp"
#include "isingep/rng.hpp"

namespace isingep {

enum class ScheduleKind { forward, reverse };

// Temperature trajectory. Forward: geometric decay t_hot -> t_cold over
// n_sweeps. Reverse: geometric rise from t_cold to reverse_fraction * t_hot
// over n_sweeps/2, then geometric decay back — the triangular bump used to let
// a frozen state drift under a nudge without full re-randomization.
struct AnnealSchedule {
  ScheduleKind kind = ScheduleKind::forward;
  double t_hot = 2.0;
  double t_cold = 0.01;
  int n_sweeps = 200;
  double reverse_fraction = 0.25;

  void validate() const;
};

struct SamplerConfig {
  int n_reads = 10;
  uint64_t seed = 0;
  AnnealSchedule schedule_free;
  AnnealSchedule schedule_nudge;
};

enum class Phase { free, nudge };

// One Metropolis sweep: n_spins single-flip proposals in a seeded random
// permutation order. dE for flipping spin i is -2 s_i (sum_j J_ij s_j + h_i);
// the bias term is included, as Eq. 1 consistency requires. Accept when
// dE < 0, otherwise with probability exp(-dE/T); T = 0 never moves uphill.
SpinState metropolis_sweep(const IsingProblem& problem, const SpinState& state,
                           double temperature, Rng& rng);

// The per-sweep temperature ladder a schedule expands to (exposed for tests).
std::vector<double> temperature_ladder(const AnnealSchedule& schedule);

// Spins initialized uniformly at random from the seed, then one sweep per
// ladder rung. The returned energy is recomputed from scratch.
Sample anneal_forward(const IsingProblem& problem, const AnnealSchedule& schedule, uint64_t seed);

// Starts from `initial` and follows the reverse (rise-then-fall) ladder.
Sample anneal_reverse(const IsingProblem& problem, const AnnealSchedule& schedule,
                      const SpinState& initial, uint64_t seed);

// n_reads independent anneals with per-read seed = cfg.seed + read index;
// returns the lowest-energy sample, ties broken by lowest read index.
// Phase::nudge anneals in reverse from `initial` (required).
Sample sample_best(const IsingProblem& problem, Phase phase,
                   const std::optional<SpinState>& initial, const SamplerConfig& cfg);

struct EnergyStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n-1)
  std::vector<int> histogram;
  double bin_lo = 0.0;
  double bin_width = 0.0;
  std::vector<double> energies;
};

// n_samples independent forward anneals (seed + k), summarized.
EnergyStats energy_distribution(const IsingProblem& problem, int n_samples,
                                const AnnealSchedule& schedule, uint64_t seed);

// Default hot temperature used when building schedules from a problem:
// factor * max(|J|, |h|). The training layer computes this once from the
// initial parameters and keeps it fixed for the whole run.
double default_t_hot(const IsingProblem& problem, double factor);

}  // namespace isingep
