#include "isingep/ising.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace isingep {

void IsingProblem::set_coupling(int i, int j, double value) {
  if (i == j) throw std::invalid_argument("self-coupling (" + std::to_string(i) + ") not allowed");
  if (i < 0 || j < 0 || i >= n_spins || j >= n_spins) {
    throw std::out_of_range("coupling index out of range");
  }
  if (i < j) std::swap(i, j);
  couplings[{i, j}] = value;
}

double IsingProblem::coupling(int i, int j) const {
  if (i < j) std::swap(i, j);
  auto it = couplings.find({i, j});
  return it == couplings.end() ? 0.0 : it->second;
}

double energy(const IsingProblem& problem, const SpinState& state) {
  if (static_cast<int>(state.size()) != problem.n_spins) {
    throw std::invalid_argument("state length " + std::to_string(state.size()) +
                                " != n_spins " + std::to_string(problem.n_spins));
  }
  double e = 0.0;
  for (const auto& [key, j] : problem.couplings) {
    e += j * state[static_cast<size_t>(key.first)] * state[static_cast<size_t>(key.second)];
  }
  for (int i = 0; i < problem.n_spins; ++i) {
    e += problem.biases[static_cast<size_t>(i)] * state[static_cast<size_t>(i)];
  }
  return e;
}

bool lex_less(const SpinState& a, const SpinState& b) {
  for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return a.size() < b.size();
}

IsingProblem apply_nudge(const IsingProblem& problem, const std::vector<int>& outputs,
                         const SpinState& targets, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (outputs.size() != targets.size()) {
    throw std::invalid_argument("outputs and targets must have equal length");
  }
  IsingProblem nudged = problem;
  for (size_t k = 0; k < outputs.size(); ++k) {
    int i = outputs[k];
    if (i < 0 || i >= problem.n_spins) throw std::out_of_range("output index out of range");
    if (targets[k] != 1 && targets[k] != -1) throw std::invalid_argument("target must be +1 or -1");
    nudged.biases[static_cast<size_t>(i)] -= beta * targets[k];
  }
  return nudged;
}

Sample ground_state_bruteforce(const IsingProblem& problem) {
  const int n = problem.n_spins;
  if (n > 24) throw std::invalid_argument("ground_state_bruteforce limited to 24 spins");
  if (n == 0) return {SpinState{}, 0.0};

  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<size_t>(n));
  for (const auto& [key, j] : problem.couplings) {
    adj[static_cast<size_t>(key.first)].push_back({key.second, j});
    adj[static_cast<size_t>(key.second)].push_back({key.first, j});
  }

  SpinState state(static_cast<size_t>(n), -1);  // Gray code 0 -> lex-smallest state
  SpinState best_state = state;
  double best_energy = energy(problem, state);
  double running = best_energy;

  const uint64_t total = uint64_t{1} << n;
  for (uint64_t k = 1; k < total; ++k) {
    // Gray-code walk: consecutive codes differ in exactly bit ctz(k)
    const int flip = std::countr_zero(k);
    const size_t fi = static_cast<size_t>(flip);
    double field = problem.biases[fi];
    for (const auto& [j, v] : adj[fi]) field += v * state[static_cast<size_t>(j)];
    running += -2.0 * state[fi] * field;
    state[fi] = static_cast<Spin>(-state[fi]);

    // `running` accumulates rounding error over up to 2^24 flips; recompute
    // exactly before accepting anything near the current best.
    if (running < best_energy + 1e-7) {
      const double exact = energy(problem, state);
      if (exact < best_energy ||
          (exact == best_energy && lex_less(state, best_state))) {
        best_energy = exact;
        best_state = state;
      }
    }
  }
  return {best_state, best_energy};
}

IsingProblem clip_parameters(const IsingProblem& problem) {
  IsingProblem clipped = problem;
  for (auto& [key, j] : clipped.couplings) j = clipped.j_range.clamp(j);
  for (auto& h : clipped.biases) h = clipped.h_range.clamp(h);
  return clipped;
}

std::string to_text(const IsingProblem& problem) {
  std::ostringstream out;
  char buf[64];
  out << "ising " << problem.n_spins << "\n";
  for (int i = 0; i < problem.n_spins; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", problem.biases[static_cast<size_t>(i)]);
    out << "h " << i << " " << buf << "\n";
  }
  for (const auto& [key, j] : problem.couplings) {
    std::snprintf(buf, sizeof buf, "%.17g", j);
    out << "J " << key.first << " " << key.second << " " << buf << "\n";
  }
  return out.str();
}

IsingProblem problem_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int n = -1;
  if (!(in >> tag >> n) || tag != "ising" || n < 0) {
    throw std::runtime_error("problem text must start with 'ising <n_spins>'");
  }
  IsingProblem problem(n);
  while (in >> tag) {
    if (tag == "h") {
      int i;
      double v;
      if (!(in >> i >> v)) throw std::runtime_error("malformed h record");
      if (i < 0 || i >= n) throw std::runtime_error("h record index out of range");
      problem.biases[static_cast<size_t>(i)] = v;
    } else if (tag == "J") {
      int i, j;
      double v;
      if (!(in >> i >> j >> v)) throw std::runtime_error("malformed J record");
      problem.set_coupling(i, j, v);
    } else {
      throw std::runtime_error("unknown record tag '" + tag + "'");
    }
  }
  return problem;
}

}  // namespace isingep
