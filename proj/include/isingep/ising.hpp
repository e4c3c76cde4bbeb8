#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace isingep {

using Spin = int8_t;  // strictly -1 or +1
using SpinState = std::vector<Spin>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// Ising problem in the +J convention used by the hardware this models:
//
//   E(s) = sum_{i>j} J_ij s_i s_j + sum_i h_i s_i
//
// Note the plus sign on the coupling term: a *negative* J_ij favours aligned
// spins. Everything downstream (nudge sign, learning-rule sign, chain
// couplings) depends on this convention.
struct IsingProblem {
  int n_spins = 0;
  // sparse symmetric couplings, keyed (i, j) with i > j, each pair stored once
  std::map<std::pair<int, int>, double> couplings;
  std::vector<double> biases;
  Interval j_range{-2.0, 2.0};
  Interval h_range{-4.0, 4.0};

  IsingProblem() = default;
  explicit IsingProblem(int n, Interval jr = {-2.0, 2.0}, Interval hr = {-4.0, 4.0})
      : n_spins(n), biases(static_cast<size_t>(n), 0.0), j_range(jr), h_range(hr) {}

  void set_coupling(int i, int j, double value);
  double coupling(int i, int j) const;  // 0 if absent
};

struct Sample {
  SpinState state;
  double energy = 0.0;
};

double energy(const IsingProblem& problem, const SpinState& state);

// total order on spin vectors, -1 < +1, index 0 most significant
bool lex_less(const SpinState& a, const SpinState& b);

// Nudge-as-bias: returns a copy with h_i <- h_i - beta * target_i on the
// output spins. Minimizing the result is exactly equivalent to minimizing
// E + (beta/2) * sum_Y (s_i - target_i)^2 (the two differ by the constant
// beta*|Y|). Nudge biases are deliberately NOT clipped to h_range: they model
// the nudging force, not a learned parameter.
IsingProblem apply_nudge(const IsingProblem& problem, const std::vector<int>& outputs,
                         const SpinState& targets, double beta);

// Exact minimizer by exhaustive enumeration (n_spins <= 24), ties broken
// toward the lexicographically smallest state. Test oracle; walks states in
// Gray-code order with incremental energy updates.
Sample ground_state_bruteforce(const IsingProblem& problem);

IsingProblem clip_parameters(const IsingProblem& problem);

// Plain-text serialization: header "ising <n>", then one record per line,
// "h <i> <value>" and "J <i> <j> <value>" with i > j.
std::string to_text(const IsingProblem& problem);
IsingProblem problem_from_text(const std::string& text);

}  // namespace isingep
