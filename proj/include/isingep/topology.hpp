#pragma once

#include <set>
#include <string>
#include <vector>

#include "isingep/ising.hpp"

namespace isingep {

struct ConvArchitecture;  // networks.hpp

// Chimera lattice: a rows x cols grid of K_{4,4} unit cells. Within a cell,
// sites 0-3 are the "horizontal" side and 4-7 the "vertical" side; every
// horizontal couples to every vertical (16 intra-cell edges). Horizontal
// sites additionally link to the same-position site of the cell to the
// right, vertical sites to the cell below. Max degree 6.
struct ChimeraGraph {
  int rows = 0;
  int cols = 0;
  static constexpr int cell_size = 4;
  std::set<std::pair<int, int>> edges;       // (i, j) with i > j
  std::vector<std::vector<int>> adjacency;   // sorted neighbor lists

  int n_sites() const { return rows * cols * 2 * cell_size; }
  // k in [0, 8): horizontals first, then verticals
  int site(int r, int c, int k) const { return (r * cols + c) * 8 + k; }
  bool has_edge(int i, int j) const;
};

ChimeraGraph build_chimera(int rows, int cols);

// One logical spin per entry; each maps to an ordered chain of physical
// sites. chain_strength is a magnitude: intra-chain couplings are written as
// -|chain_strength| (ferromagnetic under the +J energy convention).
struct Embedding {
  std::vector<std::vector<int>> map;
  double chain_strength = 1.0;
};

// Throws if chains are empty, out of range, overlapping, or disconnected.
void validate_embedding(const Embedding& emb, const ChimeraGraph& graph);

// Physical problem over all graph sites: logical biases on each chain's
// first site, each logical coupling on the lowest-index physical edge
// between the two chains, and -|chain_strength| on every physical edge
// internal to a chain. Chain couplings bypass j_range on purpose.
IsingProblem embed_problem(const IsingProblem& logical, const Embedding& emb,
                           const ChimeraGraph& graph);

// Majority vote per chain; exact ties take the first site's value.
SpinState unembed(const SpinState& physical, const Embedding& emb);

// Handcrafted layout for the 3x3-input convolutional network on a >= 3x3
// Chimera graph: four corner cells hold the input/conv crossbars (inputs on
// the horizontal side, conv outputs on the vertical side), the middle-row
// cells carry one 5-site chain per feature map, and the center cell couples
// those chains to the four classifier outputs. Only the pooling spins are
// multi-site chains.
Embedding build_conv_embedding(const ConvArchitecture& arch, const ChimeraGraph& graph);

// One line per logical spin: "0: [560]"
std::string format_embedding(const Embedding& emb);

}  // namespace isingep
