#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isingep/ising.hpp"
#include "isingep/topology.hpp"

namespace isingep {

using Matrix = std::vector<std::vector<double>>;

// 784 -> n_hidden -> n_classes*spins_per_class, trained against the sampler.
// Input weights live off-chip: they only enter the spin problem through the
// hidden biases. input_scale/chip_scale multiply parameters when the problem
// is built; master parameters stay unscaled.
struct FcArchitecture {
  int n_inputs = 784;
  int n_hidden = 120;
  int n_classes = 10;
  int spins_per_class = 4;
  double input_scale = 0.5;
  double chip_scale = 0.25;
  Interval j_range{-2.0, 2.0};
  Interval h_range{-4.0, 4.0};

  int n_outputs() const { return n_classes * spins_per_class; }
};

struct FcParameters {
  Matrix W_input;                     // n_inputs x n_hidden
  std::vector<double> h_bias_hidden;  // n_hidden
  Matrix J_hidden_output;             // n_hidden x n_outputs
  std::vector<double> h_bias_output;  // n_outputs
};

// weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero
FcParameters init_fc_parameters(const FcArchitecture& arch, uint64_t seed);

// input_scale * (x^T W_input) + h_bias_hidden, unclipped
std::vector<double> compute_input_bias(const std::vector<double>& x, const FcParameters& params,
                                       const FcArchitecture& arch);

struct FcProblem {
  IsingProblem problem;      // n_hidden + n_outputs spins, bipartite couplings
  std::vector<int> hidden;   // spin indices [0, n_hidden)
  std::vector<int> outputs;  // spin indices [n_hidden, n_hidden + n_outputs)
};

FcProblem build_fc_problem(const FcArchitecture& arch, const FcParameters& params,
                           const std::vector<double>& x);

// 3x3 binary image -> 2x2 conv (4 shared filters) -> per-filter average pool
// -> 4x4 classifier -> 2 classes x 2 spins. The pooled feature spins couple
// to each of their filter's four conv outputs with -pool_coef, and the whole
// logical network is minor-embedded onto a Chimera graph.
struct ConvArchitecture {
  int input_h = 3, input_w = 3;
  int kernel = 2, stride = 1, padding = 0;
  int n_filters = 4;
  int pool = 2;  // pool window matches the feature-map size: one pooled spin per filter
  double pool_coef = 0.25;
  int classifier_in = 4, classifier_out = 4;
  int n_classes = 2, spins_per_class = 2;
  double input_bias_magnitude = 4.0;
  double conv_scale = 0.1;
  double class_scale = 0.1;
  double chain_strength = 2.0;
  Interval j_range{-1.0, 1.0};
  Interval h_range{-4.0, 4.0};

  int out_h() const { return (input_h + 2 * padding - kernel) / stride + 1; }
  int out_w() const { return (input_w + 2 * padding - kernel) / stride + 1; }
  int n_patches() const { return out_h() * out_w(); }
  int kernel_size() const { return kernel * kernel; }
  int n_outputs() const { return n_classes * spins_per_class; }

  // logical spin layout shared by the problem builder, the embedding, and
  // the gradient rules
  int input_spin(int p, int k) const { return p * kernel_size() + k; }
  int conv_spin(int p, int f) const { return n_patches() * kernel_size() + p * n_filters + f; }
  int pool_spin(int f) const { return n_patches() * (kernel_size() + n_filters) + f; }
  int output_spin(int o) const { return pool_spin(n_filters) + o; }
  int n_logical() const { return output_spin(n_outputs()); }
};

struct ConvParameters {
  std::vector<Matrix> filters;  // n_filters x kernel x kernel, shared across patches
  Matrix W_class;               // classifier_in x classifier_out
  std::vector<double> biases;   // classifier_out
};

ConvParameters init_conv_parameters(const ConvArchitecture& arch, uint64_t seed);

// Logical spin layout produced by build_conv_problem / build_conv_embedding.
// Every patch gets its own copies of its four input pixels (they are bias-
// clamped, so duplication is free) — "inputs" is patch-major, kernel-position
// minor; "conv" is patch-major, filter-minor.
struct ConvProblem {
  IsingProblem physical;
  Embedding embedding;
  std::vector<int> inputs;        // 16 logical indices
  std::vector<int> conv;          // 16 logical indices
  std::vector<int> pool;          // 4 logical indices
  std::vector<int> outputs;       // 4 logical indices
  std::vector<int> output_sites;  // physical sites of the output spins
};

ConvProblem build_conv_problem(const ConvArchitecture& arch, const ConvParameters& params,
                               const std::vector<double>& pixels);

// flat pixel indices (row-major 3x3) covered by patch p, kernel-position order
std::vector<int> conv_patch_pixels(const ConvArchitecture& arch, int p);

// score_c = sum of class c's spins; argmax, ties to the lowest class
int readout(const SpinState& output_spins, int n_classes, int spins_per_class);

// +1 on the label's block, -1 elsewhere
SpinState target_spins(int label, int n_classes, int spins_per_class);

// JSON checkpoints: architecture, named tensors, and the seed that produced
// the initial parameters.
struct FcCheckpoint {
  FcArchitecture arch;
  FcParameters params;
  uint64_t seed = 0;
};

struct ConvCheckpoint {
  ConvArchitecture arch;
  ConvParameters params;
  uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const FcCheckpoint& ckpt);
void save_checkpoint(const std::string& path, const ConvCheckpoint& ckpt);
FcCheckpoint load_fc_checkpoint(const std::string& path);
ConvCheckpoint load_conv_checkpoint(const std::string& path);
std::string checkpoint_kind(const std::string& path);  // "fc" or "conv"

}  // namespace isingep
