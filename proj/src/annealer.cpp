#include "isingep/annealer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isingep {

namespace {

// adjacency-list view of a problem, built once per anneal
struct Lattice {
  int n;
  std::vector<double> h;
  std::vector<std::vector<std::pair<int, double>>> adj;

  explicit Lattice(const IsingProblem& p)
      : n(p.n_spins), h(p.biases), adj(static_cast<size_t>(p.n_spins)) {
    for (const auto& [key, j] : p.couplings) {
      adj[static_cast<size_t>(key.first)].push_back({key.second, j});
      adj[static_cast<size_t>(key.second)].push_back({key.first, j});
    }
  }

  // field_i = h_i + sum_j J_ij s_j, so dE(flip i) = -2 s_i field_i
  std::vector<double> fields(const SpinState& s) const {
    std::vector<double> f(h);
    for (int i = 0; i < n; ++i) {
      const size_t si = static_cast<size_t>(i);
      for (const auto& [j, v] : adj[si]) f[si] += v * s[static_cast<size_t>(j)];
    }
    return f;
  }
};

void sweep_inplace(const Lattice& lat, SpinState& s, std::vector<double>& field,
                   double temperature, Rng& rng, std::vector<int>& order) {
  order.resize(static_cast<size_t>(lat.n));
  for (int i = 0; i < lat.n; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  for (int i : order) {
    const size_t si = static_cast<size_t>(i);
    const double de = -2.0 * s[si] * field[si];
    bool flip;
    if (de < 0.0) {
      flip = true;
    } else if (temperature > 0.0) {
      flip = rng.uniform01() < std::exp(-de / temperature);
    } else {
      flip = false;
    }
    if (flip) {
      s[si] = static_cast<Spin>(-s[si]);
      for (const auto& [j, v] : lat.adj[si]) field[static_cast<size_t>(j)] += 2.0 * s[si] * v;
    }
  }
}

Sample run_ladder(const IsingProblem& problem, const std::vector<double>& ladder,
                  SpinState state, Rng& rng) {
  Lattice lat(problem);
  std::vector<double> field = lat.fields(state);
  std::vector<int> order;
  for (double t : ladder) sweep_inplace(lat, state, field, t, rng, order);
  const double e = energy(problem, state);  // from scratch, per the Sample invariant
  return {std::move(state), e};
}

// geometric interpolation lo..hi inclusive over n entries
void geometric_ramp(double from, double to, int n, std::vector<double>& out) {
  if (n <= 0) return;
  if (n == 1) {
    out.push_back(to);
    return;
  }
  const double ratio = std::pow(to / from, 1.0 / (n - 1));
  double t = from;
  for (int k = 0; k < n; ++k) {
    out.push_back(t);
    t *= ratio;
  }
  out.back() = to;  // kill pow/mul drift at the endpoint
}

}  // namespace

void AnnealSchedule::validate() const {
  if (!(t_hot > 0.0)) throw std::invalid_argument("schedule requires t_hot > 0");
  if (!(t_cold >= 0.0) || !(t_hot > t_cold)) {
    throw std::invalid_argument("schedule requires t_hot > t_cold >= 0");
  }
  if (n_sweeps < 1) throw std::invalid_argument("schedule requires n_sweeps >= 1");
  if (kind == ScheduleKind::reverse && !(reverse_fraction > 0.0 && reverse_fraction <= 1.0)) {
    throw std::invalid_argument("reverse_fraction must be in (0, 1]");
  }
}

SpinState metropolis_sweep(const IsingProblem& problem, const SpinState& state,
                           double temperature, Rng& rng) {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (static_cast<int>(state.size()) != problem.n_spins) {
    throw std::invalid_argument("state length != n_spins");
  }
  Lattice lat(problem);
  SpinState next = state;
  std::vector<double> field = lat.fields(next);
  std::vector<int> order;
  sweep_inplace(lat, next, field, temperature, rng, order);
  return next;
}

std::vector<double> temperature_ladder(const AnnealSchedule& schedule) {
  schedule.validate();
  std::vector<double> ladder;
  ladder.reserve(static_cast<size_t>(schedule.n_sweeps));
  if (schedule.kind == ScheduleKind::forward) {
    // geometric decay needs a positive endpoint; t_cold == 0 freezes just as
    // hard through a tiny floor
    const double cold = std::max(schedule.t_cold, schedule.t_hot * 1e-12);
    geometric_ramp(schedule.t_hot, cold, schedule.n_sweeps, ladder);
  } else {
    const double peak = schedule.reverse_fraction * schedule.t_hot;
    const double cold = schedule.t_cold > 0.0 ? schedule.t_cold : peak * 1e-6;
    const int n_up = schedule.n_sweeps / 2;
    const int n_down = schedule.n_sweeps - n_up;
    geometric_ramp(cold, peak, n_up, ladder);
    geometric_ramp(peak, cold, n_down, ladder);
  }
  return ladder;
}

Sample anneal_forward(const IsingProblem& problem, const AnnealSchedule& schedule, uint64_t seed) {
  if (schedule.kind != ScheduleKind::forward) {
    throw std::invalid_argument("anneal_forward requires a forward schedule");
  }
  const std::vector<double> ladder = temperature_ladder(schedule);
  Rng rng(seed);
  SpinState state(static_cast<size_t>(problem.n_spins));
  for (auto& s : state) s = rng.spin();
  return run_ladder(problem, ladder, std::move(state), rng);
}

Sample anneal_reverse(const IsingProblem& problem, const AnnealSchedule& schedule,
                      const SpinState& initial, uint64_t seed) {
  if (schedule.kind != ScheduleKind::reverse) {
    throw std::invalid_argument("anneal_reverse requires a reverse schedule");
  }
  if (static_cast<int>(initial.size()) != problem.n_spins) {
    throw std::invalid_argument("initial state length != n_spins");
  }
  const std::vector<double> ladder = temperature_ladder(schedule);
  Rng rng(seed);
  return run_ladder(problem, ladder, initial, rng);
}

Sample sample_best(const IsingProblem& problem, Phase phase,
                   const std::optional<SpinState>& initial, const SamplerConfig& cfg) {
  if (cfg.n_reads < 1) throw std::invalid_argument("n_reads must be >= 1");
  if (phase == Phase::nudge && !initial.has_value()) {
    throw std::invalid_argument("nudge phase requires an initial state");
  }
  Sample best;
  for (int read = 0; read < cfg.n_reads; ++read) {
    const uint64_t seed = cfg.seed + static_cast<uint64_t>(read);
    Sample s = phase == Phase::free
                   ? anneal_forward(problem, cfg.schedule_free, seed)
                   : anneal_reverse(problem, cfg.schedule_nudge, *initial, seed);
    if (read == 0 || s.energy < best.energy) best = std::move(s);  // ties keep the earlier read
  }
  return best;
}

EnergyStats energy_distribution(const IsingProblem& problem, int n_samples,
                                const AnnealSchedule& schedule, uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("energy_distribution requires n_samples >= 2");
  EnergyStats stats;
  stats.energies.reserve(static_cast<size_t>(n_samples));
  double sum = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double e = anneal_forward(problem, schedule, seed + static_cast<uint64_t>(k)).energy;
    stats.energies.push_back(e);
    sum += e;
  }
  stats.mean = sum / n_samples;
  double ss = 0.0;
  for (double e : stats.energies) ss += (e - stats.mean) * (e - stats.mean);
  stats.stddev = std::sqrt(ss / (n_samples - 1));

  constexpr int kBins = 50;
  const auto [lo_it, hi_it] = std::minmax_element(stats.energies.begin(), stats.energies.end());
  stats.bin_lo = *lo_it;
  if (*hi_it == *lo_it) {
    stats.bin_width = 0.0;
    stats.histogram.assign(1, n_samples);
  } else {
    stats.bin_width = (*hi_it - *lo_it) / kBins;
    stats.histogram.assign(kBins, 0);
    for (double e : stats.energies) {
      int bin = static_cast<int>((e - stats.bin_lo) / stats.bin_width);
      stats.histogram[static_cast<size_t>(std::min(bin, kBins - 1))] += 1;
    }
  }
  return stats;
}

double default_t_hot(const IsingProblem& problem, double factor) {
  double m = 0.0;
  for (const auto& [key, j] : problem.couplings) m = std::max(m, std::abs(j));
  for (double h : problem.biases) m = std::max(m, std::abs(h));
  return factor * std::max(m, 1e-6);
}

}  // namespace isingep
