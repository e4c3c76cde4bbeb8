#include "isingep/networks.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "isingep/rng.hpp"
#include "json.hpp"

namespace isingep {

namespace {

using nlohmann::json;

Matrix random_matrix(int rows, int cols, double limit, Rng& rng) {
  Matrix m(static_cast<size_t>(rows), std::vector<double>(static_cast<size_t>(cols)));
  for (auto& row : m) {
    for (auto& v : row) v = rng.uniform(-limit, limit);
  }
  return m;
}

void check_matrix(const Matrix& m, int rows, int cols, const char* name) {
  if (static_cast<int>(m.size()) != rows) {
    throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(rows) +
                                " rows, got " + std::to_string(m.size()));
  }
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument(std::string(name) + ": ragged or mis-sized row");
    }
  }
}

}  // namespace

FcParameters init_fc_parameters(const FcArchitecture& arch, uint64_t seed) {
  Rng rng(seed);
  FcParameters p;
  p.W_input = random_matrix(arch.n_inputs, arch.n_hidden, 1.0 / std::sqrt(arch.n_inputs), rng);
  p.h_bias_hidden.assign(static_cast<size_t>(arch.n_hidden), 0.0);
  p.J_hidden_output =
      random_matrix(arch.n_hidden, arch.n_outputs(), 1.0 / std::sqrt(arch.n_hidden), rng);
  p.h_bias_output.assign(static_cast<size_t>(arch.n_outputs()), 0.0);
  return p;
}

std::vector<double> compute_input_bias(const std::vector<double>& x, const FcParameters& params,
                                       const FcArchitecture& arch) {
  if (static_cast<int>(x.size()) != arch.n_inputs) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) + " != n_inputs " +
                                std::to_string(arch.n_inputs));
  }
  check_matrix(params.W_input, arch.n_inputs, arch.n_hidden, "W_input");
  std::vector<double> h(static_cast<size_t>(arch.n_hidden));
  for (int j = 0; j < arch.n_hidden; ++j) {
    double acc = 0.0;
    for (int k = 0; k < arch.n_inputs; ++k) {
      acc += x[static_cast<size_t>(k)] * params.W_input[static_cast<size_t>(k)][static_cast<size_t>(j)];
    }
    h[static_cast<size_t>(j)] = arch.input_scale * acc + params.h_bias_hidden[static_cast<size_t>(j)];
  }
  return h;
}

FcProblem build_fc_problem(const FcArchitecture& arch, const FcParameters& params,
                           const std::vector<double>& x) {
  check_matrix(params.J_hidden_output, arch.n_hidden, arch.n_outputs(), "J_hidden_output");
  if (static_cast<int>(params.h_bias_output.size()) != arch.n_outputs()) {
    throw std::invalid_argument("h_bias_output has the wrong length");
  }
  const int nh = arch.n_hidden, no = arch.n_outputs();

  FcProblem out;
  out.problem = IsingProblem(nh + no, arch.j_range, arch.h_range);
  const std::vector<double> h_hidden = compute_input_bias(x, params, arch);
  for (int j = 0; j < nh; ++j) {
    out.problem.biases[static_cast<size_t>(j)] = h_hidden[static_cast<size_t>(j)];
    out.hidden.push_back(j);
  }
  for (int o = 0; o < no; ++o) {
    out.problem.biases[static_cast<size_t>(nh + o)] =
        arch.chip_scale * params.h_bias_output[static_cast<size_t>(o)];
    out.outputs.push_back(nh + o);
  }
  for (int j = 0; j < nh; ++j) {
    for (int o = 0; o < no; ++o) {
      out.problem.set_coupling(
          nh + o, j, arch.chip_scale * params.J_hidden_output[static_cast<size_t>(j)][static_cast<size_t>(o)]);
    }
  }
  out.problem = clip_parameters(out.problem);
  return out;
}

ConvParameters init_conv_parameters(const ConvArchitecture& arch, uint64_t seed) {
  Rng rng(seed);
  ConvParameters p;
  const double filter_limit = 1.0 / std::sqrt(arch.kernel_size());
  for (int f = 0; f < arch.n_filters; ++f) {
    p.filters.push_back(random_matrix(arch.kernel, arch.kernel, filter_limit, rng));
  }
  p.W_class = random_matrix(arch.classifier_in, arch.classifier_out,
                            1.0 / std::sqrt(arch.classifier_in), rng);
  p.biases.assign(static_cast<size_t>(arch.classifier_out), 0.0);
  return p;
}

std::vector<int> conv_patch_pixels(const ConvArchitecture& arch, int p) {
  if (p < 0 || p >= arch.n_patches()) throw std::out_of_range("patch index out of range");
  const int py = p / arch.out_w(), px = p % arch.out_w();
  std::vector<int> pixels;
  for (int u = 0; u < arch.kernel; ++u) {
    for (int v = 0; v < arch.kernel; ++v) {
      pixels.push_back((py * arch.stride + u) * arch.input_w + (px * arch.stride + v));
    }
  }
  return pixels;
}

ConvProblem build_conv_problem(const ConvArchitecture& arch, const ConvParameters& params,
                               const std::vector<double>& pixels) {
  if (static_cast<int>(pixels.size()) != arch.input_h * arch.input_w) {
    throw std::invalid_argument("pixel vector has the wrong length");
  }
  for (double v : pixels) {
    if (v != 1.0 && v != -1.0) throw std::invalid_argument("conv inputs must be binary (+1/-1)");
  }
  if (static_cast<int>(params.filters.size()) != arch.n_filters) {
    throw std::invalid_argument("wrong filter count");
  }
  for (const auto& f : params.filters) check_matrix(f, arch.kernel, arch.kernel, "filter");
  check_matrix(params.W_class, arch.classifier_in, arch.classifier_out, "W_class");

  const ChimeraGraph graph = build_chimera(3, 3);
  ConvProblem out;
  out.embedding = build_conv_embedding(arch, graph);

  const int np = arch.n_patches(), nf = arch.n_filters;
  IsingProblem logical(arch.n_logical(), arch.j_range, arch.h_range);
  for (int p = 0; p < np; ++p) {
    const std::vector<int> patch = conv_patch_pixels(arch, p);
    for (int k = 0; k < arch.kernel_size(); ++k) {
      logical.biases[static_cast<size_t>(arch.input_spin(p, k))] =
          arch.input_bias_magnitude * pixels[static_cast<size_t>(patch[static_cast<size_t>(k)])];
      out.inputs.push_back(arch.input_spin(p, k));
    }
    for (int f = 0; f < nf; ++f) {
      for (int k = 0; k < arch.kernel_size(); ++k) {
        const int u = k / arch.kernel, v = k % arch.kernel;
        logical.set_coupling(arch.conv_spin(p, f), arch.input_spin(p, k),
                             arch.conv_scale * params.filters[static_cast<size_t>(f)][static_cast<size_t>(u)][static_cast<size_t>(v)]);
      }
      logical.set_coupling(arch.pool_spin(f), arch.conv_spin(p, f), -arch.pool_coef);
      out.conv.push_back(arch.conv_spin(p, f));
    }
  }
  for (int f = 0; f < nf; ++f) {
    for (int o = 0; o < arch.n_outputs(); ++o) {
      logical.set_coupling(arch.output_spin(o), arch.pool_spin(f),
                           arch.class_scale * params.W_class[static_cast<size_t>(f)][static_cast<size_t>(o)]);
    }
    out.pool.push_back(arch.pool_spin(f));
  }
  for (int o = 0; o < arch.n_outputs(); ++o) {
    logical.biases[static_cast<size_t>(arch.output_spin(o))] =
        arch.class_scale * params.biases[static_cast<size_t>(o)];
    out.outputs.push_back(arch.output_spin(o));
    out.output_sites.push_back(out.embedding.map[static_cast<size_t>(arch.output_spin(o))][0]);
  }
  logical = clip_parameters(logical);
  out.physical = embed_problem(logical, out.embedding, graph);
  return out;
}

int readout(const SpinState& output_spins, int n_classes, int spins_per_class) {
  if (static_cast<int>(output_spins.size()) != n_classes * spins_per_class) {
    throw std::invalid_argument("output state has the wrong length");
  }
  int best_class = 0, best_score = 0;
  for (int c = 0; c < n_classes; ++c) {
    int score = 0;
    for (int k = 0; k < spins_per_class; ++k) {
      score += output_spins[static_cast<size_t>(c * spins_per_class + k)];
    }
    if (c == 0 || score > best_score) {
      best_class = c;
      best_score = score;
    }
  }
  return best_class;
}

SpinState target_spins(int label, int n_classes, int spins_per_class) {
  if (label < 0 || label >= n_classes) throw std::out_of_range("label out of range");
  SpinState t(static_cast<size_t>(n_classes * spins_per_class), -1);
  for (int k = 0; k < spins_per_class; ++k) {
    t[static_cast<size_t>(label * spins_per_class + k)] = 1;
  }
  return t;
}

namespace {

json interval_to_json(const Interval& r) { return json::array({r.lo, r.hi}); }
Interval interval_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json fc_arch_to_json(const FcArchitecture& a) {
  return json{{"n_inputs", a.n_inputs},      {"n_hidden", a.n_hidden},
              {"n_classes", a.n_classes},    {"spins_per_class", a.spins_per_class},
              {"input_scale", a.input_scale}, {"chip_scale", a.chip_scale},
              {"j_range", interval_to_json(a.j_range)}, {"h_range", interval_to_json(a.h_range)}};
}

FcArchitecture fc_arch_from_json(const json& j) {
  FcArchitecture a;
  a.n_inputs = j.at("n_inputs");
  a.n_hidden = j.at("n_hidden");
  a.n_classes = j.at("n_classes");
  a.spins_per_class = j.at("spins_per_class");
  a.input_scale = j.at("input_scale");
  a.chip_scale = j.at("chip_scale");
  a.j_range = interval_from_json(j.at("j_range"));
  a.h_range = interval_from_json(j.at("h_range"));
  return a;
}

json conv_arch_to_json(const ConvArchitecture& a) {
  return json{{"input_h", a.input_h},
              {"input_w", a.input_w},
              {"kernel", a.kernel},
              {"stride", a.stride},
              {"padding", a.padding},
              {"n_filters", a.n_filters},
              {"pool", a.pool},
              {"pool_coef", a.pool_coef},
              {"classifier_in", a.classifier_in},
              {"classifier_out", a.classifier_out},
              {"n_classes", a.n_classes},
              {"spins_per_class", a.spins_per_class},
              {"input_bias_magnitude", a.input_bias_magnitude},
              {"conv_scale", a.conv_scale},
              {"class_scale", a.class_scale},
              {"chain_strength", a.chain_strength},
              {"j_range", interval_to_json(a.j_range)},
              {"h_range", interval_to_json(a.h_range)}};
}

ConvArchitecture conv_arch_from_json(const json& j) {
  ConvArchitecture a;
  a.input_h = j.at("input_h");
  a.input_w = j.at("input_w");
  a.kernel = j.at("kernel");
  a.stride = j.at("stride");
  a.padding = j.at("padding");
  a.n_filters = j.at("n_filters");
  a.pool = j.at("pool");
  a.pool_coef = j.at("pool_coef");
  a.classifier_in = j.at("classifier_in");
  a.classifier_out = j.at("classifier_out");
  a.n_classes = j.at("n_classes");
  a.spins_per_class = j.at("spins_per_class");
  a.input_bias_magnitude = j.at("input_bias_magnitude");
  a.conv_scale = j.at("conv_scale");
  a.class_scale = j.at("class_scale");
  a.chain_strength = j.at("chain_strength");
  a.j_range = interval_from_json(j.at("j_range"));
  a.h_range = interval_from_json(j.at("h_range"));
  return a;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

}  // namespace

void save_checkpoint(const std::string& path, const FcCheckpoint& ckpt) {
  write_json(path, json{{"kind", "fc"},
                        {"seed", ckpt.seed},
                        {"arch", fc_arch_to_json(ckpt.arch)},
                        {"params",
                         {{"W_input", ckpt.params.W_input},
                          {"h_bias_hidden", ckpt.params.h_bias_hidden},
                          {"J_hidden_output", ckpt.params.J_hidden_output},
                          {"h_bias_output", ckpt.params.h_bias_output}}}});
}

void save_checkpoint(const std::string& path, const ConvCheckpoint& ckpt) {
  write_json(path, json{{"kind", "conv"},
                        {"seed", ckpt.seed},
                        {"arch", conv_arch_to_json(ckpt.arch)},
                        {"params",
                         {{"filters", ckpt.params.filters},
                          {"W_class", ckpt.params.W_class},
                          {"biases", ckpt.params.biases}}}});
}

FcCheckpoint load_fc_checkpoint(const std::string& path) {
  const json j = read_json(path);
  if (j.at("kind") != "fc") throw std::runtime_error(path + " is not an fc checkpoint");
  FcCheckpoint ckpt;
  ckpt.seed = j.at("seed");
  ckpt.arch = fc_arch_from_json(j.at("arch"));
  const json& p = j.at("params");
  ckpt.params.W_input = p.at("W_input").get<Matrix>();
  ckpt.params.h_bias_hidden = p.at("h_bias_hidden").get<std::vector<double>>();
  ckpt.params.J_hidden_output = p.at("J_hidden_output").get<Matrix>();
  ckpt.params.h_bias_output = p.at("h_bias_output").get<std::vector<double>>();
  return ckpt;
}

ConvCheckpoint load_conv_checkpoint(const std::string& path) {
  const json j = read_json(path);
  if (j.at("kind") != "conv") throw std::runtime_error(path + " is not a conv checkpoint");
  ConvCheckpoint ckpt;
  ckpt.seed = j.at("seed");
  ckpt.arch = conv_arch_from_json(j.at("arch"));
  const json& p = j.at("params");
  ckpt.params.filters = p.at("filters").get<std::vector<Matrix>>();
  ckpt.params.W_class = p.at("W_class").get<Matrix>();
  ckpt.params.biases = p.at("biases").get<std::vector<double>>();
  return ckpt;
}

std::string checkpoint_kind(const std::string& path) {
  return read_json(path).at("kind").get<std::string>();
}

}  // namespace isingep
