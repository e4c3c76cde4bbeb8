#include "isingep/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "isingep/networks.hpp"

namespace isingep {

namespace {

void add_edge(ChimeraGraph& g, int a, int b) {
  if (a < b) std::swap(a, b);
  g.edges.insert({a, b});
  g.adjacency[static_cast<size_t>(a)].push_back(b);
  g.adjacency[static_cast<size_t>(b)].push_back(a);
}

}  // namespace

bool ChimeraGraph::has_edge(int i, int j) const {
  if (i < j) std::swap(i, j);
  return edges.count({i, j}) > 0;
}

ChimeraGraph build_chimera(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("chimera dimensions must be >= 1");
  ChimeraGraph g;
  g.rows = rows;
  g.cols = cols;
  g.adjacency.resize(static_cast<size_t>(g.n_sites()));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int hk = 0; hk < 4; ++hk) {
        for (int vk = 4; vk < 8; ++vk) add_edge(g, g.site(r, c, hk), g.site(r, c, vk));
      }
      if (c + 1 < cols) {
        for (int k = 0; k < 4; ++k) add_edge(g, g.site(r, c, k), g.site(r, c + 1, k));
      }
      if (r + 1 < rows) {
        for (int k = 4; k < 8; ++k) add_edge(g, g.site(r, c, k), g.site(r + 1, c, k));
      }
    }
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

void validate_embedding(const Embedding& emb, const ChimeraGraph& graph) {
  std::vector<int> owner(static_cast<size_t>(graph.n_sites()), -1);
  for (size_t i = 0; i < emb.map.size(); ++i) {
    const auto& chain = emb.map[i];
    if (chain.empty()) throw std::invalid_argument("chain " + std::to_string(i) + " is empty");
    for (int s : chain) {
      if (s < 0 || s >= graph.n_sites()) {
        throw std::out_of_range("chain " + std::to_string(i) + " site " + std::to_string(s) +
                                " outside the graph");
      }
      if (owner[static_cast<size_t>(s)] != -1) {
        throw std::invalid_argument("site " + std::to_string(s) + " used by chains " +
                                    std::to_string(owner[static_cast<size_t>(s)]) + " and " +
                                    std::to_string(i));
      }
      owner[static_cast<size_t>(s)] = static_cast<int>(i);
    }
    // connectivity within the chain's vertex set
    std::vector<int> seen;
    std::queue<int> frontier;
    frontier.push(chain[0]);
    seen.push_back(chain[0]);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : graph.adjacency[static_cast<size_t>(u)]) {
        if (owner[static_cast<size_t>(v)] == static_cast<int>(i) &&
            std::find(seen.begin(), seen.end(), v) == seen.end()) {
          seen.push_back(v);
          frontier.push(v);
        }
      }
    }
    if (seen.size() != chain.size()) {
      throw std::invalid_argument("chain " + std::to_string(i) + " is not connected");
    }
  }
}

IsingProblem embed_problem(const IsingProblem& logical, const Embedding& emb,
                           const ChimeraGraph& graph) {
  if (static_cast<int>(emb.map.size()) != logical.n_spins) {
    throw std::invalid_argument("embedding covers " + std::to_string(emb.map.size()) +
                                " logical spins, problem has " + std::to_string(logical.n_spins));
  }
  validate_embedding(emb, graph);

  IsingProblem physical(graph.n_sites(), logical.j_range, logical.h_range);
  for (int i = 0; i < logical.n_spins; ++i) {
    physical.biases[static_cast<size_t>(emb.map[static_cast<size_t>(i)][0])] =
        logical.biases[static_cast<size_t>(i)];
  }
  const double ferro = -std::abs(emb.chain_strength);
  for (const auto& chain : emb.map) {
    for (size_t a = 0; a < chain.size(); ++a) {
      for (size_t b = a + 1; b < chain.size(); ++b) {
        if (graph.has_edge(chain[a], chain[b])) physical.set_coupling(chain[a], chain[b], ferro);
      }
    }
  }
  for (const auto& [key, value] : logical.couplings) {
    const auto& ci = emb.map[static_cast<size_t>(key.first)];
    const auto& cj = emb.map[static_cast<size_t>(key.second)];
    std::pair<int, int> best{-1, -1};
    for (int a : ci) {
      for (int b : cj) {
        if (!graph.has_edge(a, b)) continue;
        std::pair<int, int> cand{std::min(a, b), std::max(a, b)};
        if (best.first == -1 || cand < best) best = cand;
      }
    }
    if (best.first == -1) {
      throw std::invalid_argument("no physical edge for logical coupling (" +
                                  std::to_string(key.first) + ", " + std::to_string(key.second) +
                                  ")");
    }
    physical.set_coupling(best.first, best.second, value);
  }
  return physical;
}

SpinState unembed(const SpinState& physical, const Embedding& emb) {
  SpinState logical(emb.map.size());
  for (size_t i = 0; i < emb.map.size(); ++i) {
    int sum = 0;
    for (int s : emb.map[i]) {
      if (s < 0 || s >= static_cast<int>(physical.size())) {
        throw std::out_of_range("physical state does not cover chain site " + std::to_string(s));
      }
      sum += physical[static_cast<size_t>(s)];
    }
    logical[i] = sum != 0 ? static_cast<Spin>(sum > 0 ? 1 : -1)
                          : physical[static_cast<size_t>(emb.map[i][0])];
  }
  return logical;
}

Embedding build_conv_embedding(const ConvArchitecture& arch, const ChimeraGraph& graph) {
  if (graph.rows < 3 || graph.cols < 3) {
    throw std::invalid_argument("chimera graph too small for the conv embedding (need 3x3 cells)");
  }
  if (arch.n_patches() != 4 || arch.n_filters != 4 || arch.kernel_size() != 4 ||
      arch.classifier_in != 4 || arch.classifier_out != 4 || arch.n_outputs() != 4) {
    throw std::invalid_argument("conv embedding supports only the 4-patch/4-filter/4x4 layout");
  }

  Embedding emb;
  emb.chain_strength = arch.chain_strength;
  emb.map.resize(static_cast<size_t>(arch.n_logical()));
  // patch p -> corner cell, matching the patches' spatial positions
  const int corner[4][2] = {{0, 0}, {0, 2}, {2, 0}, {2, 2}};
  for (int p = 0; p < 4; ++p) {
    const int r = corner[p][0], c = corner[p][1];
    for (int k = 0; k < 4; ++k) {
      emb.map[static_cast<size_t>(arch.input_spin(p, k))] = {graph.site(r, c, k)};
      emb.map[static_cast<size_t>(arch.conv_spin(p, k))] = {graph.site(r, c, 4 + k)};
    }
  }
  // pooled feature spin f: a path through the middle row. Its ends are
  // vertical sites adjacent to the corner cells' conv outputs; its center
  // sits in cell (1,1) where it meets the classifier outputs.
  for (int f = 0; f < 4; ++f) {
    emb.map[static_cast<size_t>(arch.pool_spin(f))] = {graph.site(1, 0, 4 + f), graph.site(1, 0, f),
                                                       graph.site(1, 1, f), graph.site(1, 2, f),
                                                       graph.site(1, 2, 4 + f)};
  }
  for (int o = 0; o < 4; ++o) {
    emb.map[static_cast<size_t>(arch.output_spin(o))] = {graph.site(1, 1, 4 + o)};
  }
  return emb;
}

std::string format_embedding(const Embedding& emb) {
  std::ostringstream out;
  for (size_t i = 0; i < emb.map.size(); ++i) {
    out << i << ": [";
    for (size_t k = 0; k < emb.map[i].size(); ++k) {
      if (k) out << ", ";
      out << emb.map[i][k];
    }
    out << "]\n";
  }
  return out.str();
}

}  // namespace isingep
