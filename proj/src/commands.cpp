#include "isingep/commands.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "isingep/annealer.hpp"
#include "isingep/data.hpp"

namespace fs = std::filesystem;

namespace isingep {

namespace {

using nlohmann::json;

constexpr const char* kCodeVersion = "1.0.0";

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key " + key + ": cannot parse '" + value + "' as " + want);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v, "a number");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, v, "a number");
  }
}

long long parse_ll(const std::string& key, const std::string& v) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  long long x = parse_ll(key, v);
  if (x < INT_MIN || x > INT_MAX) bad_value(key, v, "an integer");
  return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean (true/false/1/0)");
}

// %.17g round-trips doubles exactly, so a manifest regenerates the run.
std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_g10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct KeyHandler {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class F>  // F: RunConfig& -> double&
KeyHandler dbl_key(F field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_double(k, v); },
          [field](const RunConfig& c) { return fmt_g17(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
KeyHandler int_key(F field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_int(k, v); },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
KeyHandler bool_key(F field) {
  return {[field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_bool(k, v); },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)) ? "true" : "false"; }};
}

template <class F>
KeyHandler str_key(F field) {
  return {[field](RunConfig& c, const std::string&, const std::string& v) { field(c) = v; },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

KeyHandler enum_key(std::string RunConfig::* member, std::vector<std::string> allowed) {
  return {[member, allowed](RunConfig& c, const std::string& k, const std::string& v) {
            if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
              std::string opts;
              for (const auto& a : allowed) opts += (opts.empty() ? "" : " | ") + a;
              throw ConfigError("config key " + k + ": expected one of " + opts + ", got '" + v + "'");
            }
            c.*member = v;
          },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<std::pair<std::string, KeyHandler>>& key_registry() {
  static const std::vector<std::pair<std::string, KeyHandler>> reg = [] {
    std::vector<std::pair<std::string, KeyHandler>> r;
    auto add = [&r](const char* k, KeyHandler h) { r.emplace_back(k, std::move(h)); };

    add("task", enum_key(&RunConfig::task, {"fc-mnist", "conv-patterns"}));
    add("sampler", enum_key(&RunConfig::sampler, {"sa", "bruteforce", "deterministic"}));
    add("seed", {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    add("output_dir", str_key([](RunConfig& c) -> std::string& { return c.output_dir; }));

    add("data.dir", str_key([](RunConfig& c) -> std::string& { return c.data_dir; }));
    add("data.train_per_class", int_key([](RunConfig& c) -> int& { return c.train_per_class; }));
    add("data.test_per_class", int_key([](RunConfig& c) -> int& { return c.test_per_class; }));

    add("train.beta", dbl_key([](RunConfig& c) -> double& { return c.train.beta; }));
    add("train.lr_w", dbl_key([](RunConfig& c) -> double& { return c.train.lr_w; }));
    add("train.lr_b", dbl_key([](RunConfig& c) -> double& { return c.train.lr_b; }));
    add("train.epochs", int_key([](RunConfig& c) -> int& { return c.train.epochs; }));
    add("train.skip_nudge", bool_key([](RunConfig& c) -> bool& { return c.train.skip_nudge; }));
    add("train.clip", bool_key([](RunConfig& c) -> bool& { return c.train.clip; }));

    add("annealer.n_reads", int_key([](RunConfig& c) -> int& { return c.train.annealer.n_reads; }));
    add("annealer.t_hot_factor", dbl_key([](RunConfig& c) -> double& { return c.train.annealer.t_hot_factor; }));
    add("annealer.t_cold", dbl_key([](RunConfig& c) -> double& { return c.train.annealer.t_cold; }));
    add("annealer.n_sweeps", int_key([](RunConfig& c) -> int& { return c.train.annealer.n_sweeps; }));
    add("annealer.reverse_fraction",
        dbl_key([](RunConfig& c) -> double& { return c.train.annealer.reverse_fraction; }));
    add("annealer.seed", {[](RunConfig& c, const std::string& k, const std::string& v) {
                            c.annealer_seed = parse_u64(k, v);
                            c.annealer_seed_set = true;
                          },
                          [](const RunConfig& c) { return std::to_string(c.annealer_seed); }});

    add("network.n_hidden", int_key([](RunConfig& c) -> int& { return c.fc.n_hidden; }));
    add("network.spins_per_class", int_key([](RunConfig& c) -> int& { return c.fc.spins_per_class; }));
    add("network.input_scale", dbl_key([](RunConfig& c) -> double& { return c.fc.input_scale; }));
    add("network.chip_scale", dbl_key([](RunConfig& c) -> double& { return c.fc.chip_scale; }));
    add("network.j_min", dbl_key([](RunConfig& c) -> double& { return c.fc.j_range.lo; }));
    add("network.j_max", dbl_key([](RunConfig& c) -> double& { return c.fc.j_range.hi; }));
    add("network.h_min", dbl_key([](RunConfig& c) -> double& { return c.fc.h_range.lo; }));
    add("network.h_max", dbl_key([](RunConfig& c) -> double& { return c.fc.h_range.hi; }));

    add("conv.conv_scale", dbl_key([](RunConfig& c) -> double& { return c.conv.conv_scale; }));
    add("conv.class_scale", dbl_key([](RunConfig& c) -> double& { return c.conv.class_scale; }));
    add("conv.chain_strength", dbl_key([](RunConfig& c) -> double& { return c.conv.chain_strength; }));
    add("conv.pool_coef", dbl_key([](RunConfig& c) -> double& { return c.conv.pool_coef; }));
    add("conv.input_bias", dbl_key([](RunConfig& c) -> double& { return c.conv.input_bias_magnitude; }));
    add("conv.j_min", dbl_key([](RunConfig& c) -> double& { return c.conv.j_range.lo; }));
    add("conv.j_max", dbl_key([](RunConfig& c) -> double& { return c.conv.j_range.hi; }));
    add("conv.h_min", dbl_key([](RunConfig& c) -> double& { return c.conv.h_range.lo; }));
    add("conv.h_max", dbl_key([](RunConfig& c) -> double& { return c.conv.h_range.hi; }));

    add("det.free_steps", int_key([](RunConfig& c) -> int& { return c.det.free_steps; }));
    add("det.nudge_steps", int_key([](RunConfig& c) -> int& { return c.det.nudge_steps; }));
    add("det.dt", dbl_key([](RunConfig& c) -> double& { return c.det.dt; }));
    add("det.beta", dbl_key([](RunConfig& c) -> double& { return c.det.beta; }));
    add("det.lr_w", dbl_key([](RunConfig& c) -> double& { return c.det.lr_w; }));
    add("det.lr_b", dbl_key([](RunConfig& c) -> double& { return c.det.lr_b; }));

    add("run.record_walltime", bool_key([](RunConfig& c) -> bool& { return c.record_walltime; }));
    add("run.checkpoint_every", int_key([](RunConfig& c) -> int& { return c.checkpoint_every; }));
    return r;
  }();
  return reg;
}

const KeyHandler* find_handler(const std::string& key) {
  for (const auto& [k, h] : key_registry()) {
    if (k == key) return &h;
  }
  return nullptr;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path))
    throw ConfigError(path.string() + " already exists; pass --force to overwrite");
}

void write_manifest(const fs::path& path, const RunConfig& cfg, const std::string& command) {
  json j;
  j["code_version"] = kCodeVersion;
  j["command"] = command;
  j["seeds"] = {{"run", cfg.seed}, {"init", cfg.seed}, {"annealer", cfg.annealer_seed}};
  json c = json::object();
  for (const auto& [k, v] : config_items(cfg)) c[k] = v;
  j["config"] = c;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Dataset load_mnist_split(const RunConfig& cfg, bool train_split) {
  fs::path dir(cfg.data_dir);
  fs::path images = dir / (train_split ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte");
  fs::path labels = dir / (train_split ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte");
  Dataset full = load_idx(images.string(), labels.string());
  return take_per_class(full, train_split ? cfg.train_per_class : cfg.test_per_class);
}

std::unique_ptr<PhaseSampler> make_annealed_sampler(const RunConfig& cfg) {
  if (cfg.sampler == "sa") return std::make_unique<AnnealPhaseSampler>(cfg.train.annealer);
  return std::make_unique<BruteForcePhaseSampler>();
}

void check_bruteforce_size(int n_spins) {
  require(n_spins <= 24, "bruteforce sampler enumerates at most 24 spins; this network needs " +
                             std::to_string(n_spins));
}

fs::path epoch_checkpoint_path(const fs::path& out, int epochs_done) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "checkpoint_epoch_%04d.json", epochs_done);
  return out / buf;
}

bool fc_arch_equal(const FcArchitecture& a, const FcArchitecture& b) {
  return a.n_inputs == b.n_inputs && a.n_hidden == b.n_hidden && a.n_classes == b.n_classes &&
         a.spins_per_class == b.spins_per_class && a.input_scale == b.input_scale &&
         a.chip_scale == b.chip_scale && a.j_range.lo == b.j_range.lo &&
         a.j_range.hi == b.j_range.hi && a.h_range.lo == b.h_range.lo && a.h_range.hi == b.h_range.hi;
}

bool conv_arch_equal(const ConvArchitecture& a, const ConvArchitecture& b) {
  return a.input_h == b.input_h && a.input_w == b.input_w && a.kernel == b.kernel &&
         a.stride == b.stride && a.padding == b.padding && a.n_filters == b.n_filters &&
         a.pool_coef == b.pool_coef && a.n_classes == b.n_classes &&
         a.spins_per_class == b.spins_per_class &&
         a.input_bias_magnitude == b.input_bias_magnitude && a.conv_scale == b.conv_scale &&
         a.class_scale == b.class_scale && a.chain_strength == b.chain_strength &&
         a.j_range.lo == b.j_range.lo && a.j_range.hi == b.j_range.hi &&
         a.h_range.lo == b.h_range.lo && a.h_range.hi == b.h_range.hi;
}

void write_histogram_csv(const fs::path& path, const EnergyStats& stats, bool force) {
  refuse_overwrite(path, force);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "bin_lo,bin_hi,count\n";
  for (size_t i = 0; i < stats.histogram.size(); ++i) {
    f << fmt_g17(stats.bin_lo + static_cast<double>(i) * stats.bin_width) << ','
      << fmt_g17(stats.bin_lo + static_cast<double>(i + 1) * stats.bin_width) << ','
      << stats.histogram[i] << '\n';
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.train.epochs = 50;  // the published runs train for 50 epochs

  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value, got '" +
                        line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": missing key before '='");
    entries.emplace_back(std::move(key), std::move(value));
  }

  // Apply the task first: conv-patterns switches beta and the learning rates
  // to the conv table's values, and explicit keys must still win regardless
  // of where they appear in the file.
  for (const auto& [k, v] : entries) {
    if (k == "task") find_handler("task")->set(cfg, k, v);
  }
  if (cfg.task == "conv-patterns") {
    cfg.train.beta = 5.0;
    cfg.train.lr_w = 1e-1;
    cfg.train.lr_b = 1e-1;
  }
  for (const auto& [k, v] : entries) {
    const KeyHandler* h = find_handler(k);
    if (!h) throw ConfigError("unknown config key: " + k);
    h->set(cfg, k, v);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_config_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& [k, h] : key_registry()) items.emplace_back(k, h.get(cfg));
  return items;
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_items(cfg)) out += k + " = " + v + "\n";
  return out;
}

void validate(const RunConfig& cfg) {
  require(cfg.task == "fc-mnist" || cfg.task == "conv-patterns", "task must be fc-mnist or conv-patterns");
  require(cfg.sampler == "sa" || cfg.sampler == "bruteforce" || cfg.sampler == "deterministic",
          "sampler must be sa, bruteforce or deterministic");
  if (cfg.task == "conv-patterns") {
    require(cfg.sampler != "deterministic", "sampler = deterministic supports only task = fc-mnist");
    require(cfg.sampler != "bruteforce",
            "sampler = bruteforce cannot enumerate the embedded conv problem");
  }
  require(!cfg.output_dir.empty(), "output_dir must not be empty");
  require(cfg.train_per_class >= 1, "data.train_per_class must be at least 1");
  require(cfg.test_per_class >= 1, "data.test_per_class must be at least 1");

  require(cfg.train.beta > 0.0, "train.beta must be positive");
  require(cfg.train.lr_w >= 0.0, "train.lr_w must be non-negative");
  require(cfg.train.lr_b >= 0.0, "train.lr_b must be non-negative");
  require(cfg.train.epochs >= 1, "train.epochs must be at least 1");

  const AnnealerSettings& a = cfg.train.annealer;
  require(a.n_reads >= 1, "annealer.n_reads must be at least 1");
  require(a.t_hot_factor > 0.0, "annealer.t_hot_factor must be positive");
  require(a.t_cold > 0.0, "annealer.t_cold must be positive");
  require(a.n_sweeps >= 2, "annealer.n_sweeps must be at least 2");
  require(a.reverse_fraction > 0.0 && a.reverse_fraction <= 1.0,
          "annealer.reverse_fraction must be in (0, 1]");

  require(cfg.fc.n_hidden >= 1, "network.n_hidden must be at least 1");
  require(cfg.fc.spins_per_class >= 1, "network.spins_per_class must be at least 1");
  require(cfg.fc.input_scale > 0.0, "network.input_scale must be positive");
  require(cfg.fc.chip_scale > 0.0, "network.chip_scale must be positive");
  require(cfg.fc.j_range.lo < cfg.fc.j_range.hi, "network.j_min must be below network.j_max");
  require(cfg.fc.h_range.lo < cfg.fc.h_range.hi, "network.h_min must be below network.h_max");

  require(cfg.conv.conv_scale > 0.0, "conv.conv_scale must be positive");
  require(cfg.conv.class_scale > 0.0, "conv.class_scale must be positive");
  require(cfg.conv.chain_strength > 0.0, "conv.chain_strength must be positive");
  require(cfg.conv.pool_coef > 0.0, "conv.pool_coef must be positive");
  require(cfg.conv.input_bias_magnitude > 0.0, "conv.input_bias must be positive");
  require(cfg.conv.j_range.lo < cfg.conv.j_range.hi, "conv.j_min must be below conv.j_max");
  require(cfg.conv.h_range.lo < cfg.conv.h_range.hi, "conv.h_min must be below conv.h_max");

  require(cfg.det.free_steps >= 1, "det.free_steps must be at least 1");
  require(cfg.det.nudge_steps >= 1, "det.nudge_steps must be at least 1");
  require(cfg.det.dt > 0.0 && cfg.det.dt <= 1.0, "det.dt must be in (0, 1]");
  require(cfg.det.beta > 0.0, "det.beta must be positive");
  require(cfg.det.lr_w >= 0.0, "det.lr_w must be non-negative");
  require(cfg.det.lr_b >= 0.0, "det.lr_b must be non-negative");

  require(cfg.checkpoint_every >= 0, "run.checkpoint_every must be non-negative");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config_path.empty() ? parse_config_text("") : load_config(flags.config_path);
  if (!flags.data_dir.empty()) cfg.data_dir = flags.data_dir;
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  if (flags.seed_set) cfg.seed = flags.seed;
  if (!cfg.annealer_seed_set) {
    cfg.annealer_seed = cfg.seed;
    cfg.annealer_seed_set = true;
  }
  cfg.train.seed = cfg.seed;
  cfg.det.seed = cfg.seed;
  cfg.det.epochs = cfg.train.epochs;
  cfg.det.skip_nudge = cfg.train.skip_nudge;
  validate(cfg);
  return cfg;
}

int cmd_train(const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);

  Dataset train_set, test_set;
  if (cfg.task == "conv-patterns") {
    train_set = patterns_3x3();
    test_set = train_set;
  } else {
    train_set = load_mnist_split(cfg, true);
    test_set = load_mnist_split(cfg, false);
  }
  if (train_set.size() == 0 || test_set.size() == 0) throw std::runtime_error("empty dataset");

  fs::path out(cfg.output_dir);
  fs::create_directories(out);
  for (const char* name : {"manifest.json", "metrics.csv", "checkpoint_init.json", "checkpoint.json"})
    refuse_overwrite(out / name, flags.force);
  write_manifest(out / "manifest.json", cfg, "train");

  std::ofstream csv(out / "metrics.csv", std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + (out / "metrics.csv").string());
  csv << "epoch,train_acc,test_acc,train_mse,test_mse,nudges_skipped,wall_seconds\n";
  csv.flush();

  auto write_row = [&](EpochMetrics m) {
    if (!cfg.record_walltime) m.wall_seconds = 0.0;
    csv << m.epoch << ',' << fmt_g10(m.train_acc) << ',' << fmt_g10(m.test_acc) << ','
        << fmt_g10(m.train_mse) << ',' << fmt_g10(m.test_mse) << ',' << m.nudges_skipped << ','
        << fmt_g10(m.wall_seconds) << '\n';
    csv.flush();  // partial metrics survive an interrupt
  };
  auto log_epoch = [&](const EpochMetrics& m, bool det) {
    std::printf("epoch %4d  train %6.2f%%  test %6.2f%%  mse %.4f / %.4f  skipped %d", m.epoch,
                m.train_acc, m.test_acc, m.train_mse, m.test_mse, m.nudges_skipped);
    if (det) std::printf("  unconverged %d", m.unconverged);
    std::printf("\n");
    std::fflush(stdout);
  };

  if (cfg.task == "conv-patterns") {
    ConvArchitecture arch = cfg.conv;
    ConvParameters params = init_conv_parameters(arch, cfg.seed);
    save_checkpoint((out / "checkpoint_init.json").string(), ConvCheckpoint{arch, params, cfg.seed});
    std::unique_ptr<PhaseSampler> sampler = make_annealed_sampler(cfg);
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
      EpochMetrics m = train_epoch(train_set, params, arch, cfg.train, *sampler, epoch);
      std::tie(m.test_acc, m.test_mse) = evaluate(test_set, params, arch, cfg.train, *sampler);
      write_row(m);
      log_epoch(m, false);
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
          epoch + 1 < cfg.train.epochs)
        save_checkpoint(epoch_checkpoint_path(out, epoch + 1).string(),
                        ConvCheckpoint{arch, params, cfg.seed});
    }
    save_checkpoint((out / "checkpoint.json").string(), ConvCheckpoint{arch, params, cfg.seed});
    return 0;
  }

  FcArchitecture arch = cfg.fc;
  arch.n_inputs = static_cast<int>(train_set.images[0].size());
  arch.n_classes = train_set.n_classes;
  FcParameters params = init_fc_parameters(arch, cfg.seed);
  save_checkpoint((out / "checkpoint_init.json").string(), FcCheckpoint{arch, params, cfg.seed});

  if (cfg.sampler == "deterministic") {
    for (int epoch = 0; epoch < cfg.det.epochs; ++epoch) {
      EpochMetrics m = det_train_epoch(train_set, params, arch, cfg.det, epoch);
      std::tie(m.test_acc, m.test_mse) = det_evaluate(test_set, params, arch, cfg.det);
      write_row(m);
      log_epoch(m, true);
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
          epoch + 1 < cfg.det.epochs)
        save_checkpoint(epoch_checkpoint_path(out, epoch + 1).string(),
                        FcCheckpoint{arch, params, cfg.seed});
    }
  } else {
    if (cfg.sampler == "bruteforce") check_bruteforce_size(arch.n_hidden + arch.n_outputs());
    std::unique_ptr<PhaseSampler> sampler = make_annealed_sampler(cfg);
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
      EpochMetrics m = train_epoch(train_set, params, arch, cfg.train, *sampler, epoch);
      std::tie(m.test_acc, m.test_mse) = evaluate(test_set, params, arch, cfg.train, *sampler);
      write_row(m);
      log_epoch(m, false);
      if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
          epoch + 1 < cfg.train.epochs)
        save_checkpoint(epoch_checkpoint_path(out, epoch + 1).string(),
                        FcCheckpoint{arch, params, cfg.seed});
    }
  }
  save_checkpoint((out / "checkpoint.json").string(), FcCheckpoint{arch, params, cfg.seed});
  return 0;
}

int cmd_eval(const std::string& checkpoint, const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  std::string kind = checkpoint_kind(checkpoint);

  double acc = 0.0, mse = 0.0;
  size_t n_examples = 0;
  if (kind == "fc") {
    FcCheckpoint ck = load_fc_checkpoint(checkpoint);
    Dataset test = load_mnist_split(cfg, false);
    if (test.size() == 0) throw std::runtime_error("empty test set");
    if (static_cast<int>(test.images[0].size()) != ck.arch.n_inputs)
      throw std::runtime_error("image size " + std::to_string(test.images[0].size()) +
                               " does not match checkpoint input size " +
                               std::to_string(ck.arch.n_inputs));
    if (test.n_classes != ck.arch.n_classes)
      throw std::runtime_error("dataset has " + std::to_string(test.n_classes) +
                               " classes, checkpoint expects " + std::to_string(ck.arch.n_classes));
    if (cfg.sampler == "deterministic") {
      std::tie(acc, mse) = det_evaluate(test, ck.params, ck.arch, cfg.det);
    } else {
      if (cfg.sampler == "bruteforce") check_bruteforce_size(ck.arch.n_hidden + ck.arch.n_outputs());
      std::unique_ptr<PhaseSampler> sampler = make_annealed_sampler(cfg);
      std::tie(acc, mse) = evaluate(test, ck.params, ck.arch, cfg.train, *sampler);
    }
    n_examples = test.size();
  } else {
    require(cfg.sampler == "sa", "conv checkpoints evaluate with sampler = sa");
    ConvCheckpoint ck = load_conv_checkpoint(checkpoint);
    Dataset patterns = patterns_3x3();
    AnnealPhaseSampler sampler(cfg.train.annealer);
    std::tie(acc, mse) = evaluate(patterns, ck.params, ck.arch, cfg.train, sampler);
    n_examples = patterns.size();
  }

  std::printf("accuracy %.4f%%  mse %.6f  (%zu examples)\n", acc, mse, n_examples);
  std::fflush(stdout);

  fs::path out(cfg.output_dir);
  fs::create_directories(out);
  fs::path record = out / "eval.json";
  refuse_overwrite(record, flags.force);
  json j = {{"checkpoint", checkpoint}, {"kind", kind},           {"sampler", cfg.sampler},
            {"seed", cfg.seed},         {"n_examples", n_examples}, {"accuracy_percent", acc},
            {"mse", mse}};
  std::ofstream f(record);
  if (!f) throw std::runtime_error("cannot write " + record.string());
  f << j.dump(2) << "\n";
  return 0;
}

int cmd_energy_dist(const std::string& checkpoint_a, const std::string& checkpoint_b,
                    int image_index, int n_samples, const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  require(n_samples >= 2, "n_samples must be at least 2");
  require(image_index >= 0, "image index must be non-negative");

  std::string kind_a = checkpoint_kind(checkpoint_a);
  std::string kind_b = checkpoint_kind(checkpoint_b);
  if (kind_a != kind_b)
    throw std::runtime_error("checkpoint kinds differ: " + kind_a + " vs " + kind_b);

  IsingProblem problem_a, problem_b;
  if (kind_a == "fc") {
    FcCheckpoint ca = load_fc_checkpoint(checkpoint_a);
    FcCheckpoint cb = load_fc_checkpoint(checkpoint_b);
    if (!fc_arch_equal(ca.arch, cb.arch)) throw std::runtime_error("checkpoint architectures differ");
    Dataset test = load_mnist_split(cfg, false);
    if (image_index >= static_cast<int>(test.size()))
      throw ConfigError("image index " + std::to_string(image_index) +
                        " out of range (test split has " + std::to_string(test.size()) + " images)");
    const std::vector<double>& x = test.images[image_index];
    if (static_cast<int>(x.size()) != ca.arch.n_inputs)
      throw std::runtime_error("image size does not match checkpoint input size");
    problem_a = build_fc_problem(ca.arch, ca.params, x).problem;
    problem_b = build_fc_problem(cb.arch, cb.params, x).problem;
  } else {
    ConvCheckpoint ca = load_conv_checkpoint(checkpoint_a);
    ConvCheckpoint cb = load_conv_checkpoint(checkpoint_b);
    if (!conv_arch_equal(ca.arch, cb.arch))
      throw std::runtime_error("checkpoint architectures differ");
    Dataset patterns = patterns_3x3();
    if (image_index >= static_cast<int>(patterns.size()))
      throw ConfigError("image index " + std::to_string(image_index) + " out of range (" +
                        std::to_string(patterns.size()) + " patterns)");
    const std::vector<double>& x = patterns.images[image_index];
    problem_a = build_conv_problem(ca.arch, ca.params, x).physical;
    problem_b = build_conv_problem(cb.arch, cb.params, x).physical;
  }

  // The same forward schedule and seed for both checkpoints, so the only
  // difference between the histograms is the learned landscape.
  const AnnealerSettings& a = cfg.train.annealer;
  AnnealSchedule schedule;
  schedule.t_hot = std::max(default_t_hot(problem_a, a.t_hot_factor),
                            default_t_hot(problem_b, a.t_hot_factor));
  schedule.t_cold = a.t_cold;
  schedule.n_sweeps = a.n_sweeps;
  schedule.reverse_fraction = a.reverse_fraction;

  EnergyStats stats_a = energy_distribution(problem_a, n_samples, schedule, cfg.annealer_seed);
  EnergyStats stats_b = energy_distribution(problem_b, n_samples, schedule, cfg.annealer_seed);

  fs::path out(cfg.output_dir);
  fs::create_directories(out);
  write_histogram_csv(out / "energy_hist_a.csv", stats_a, flags.force);
  write_histogram_csv(out / "energy_hist_b.csv", stats_b, flags.force);

  fs::path summary = out / "energy_summary.json";
  refuse_overwrite(summary, flags.force);
  json j = {{"checkpoint_a", checkpoint_a},
            {"checkpoint_b", checkpoint_b},
            {"image_index", image_index},
            {"n_samples", n_samples},
            {"seed", cfg.annealer_seed},
            {"mean_a", stats_a.mean},
            {"std_a", stats_a.stddev},
            {"mean_b", stats_b.mean},
            {"std_b", stats_b.stddev},
            {"std_b_smaller", stats_b.stddev < stats_a.stddev}};
  std::ofstream f(summary);
  if (!f) throw std::runtime_error("cannot write " + summary.string());
  f << j.dump(2) << "\n";

  std::printf("a %s: mean %.6f  std %.6f\n", checkpoint_a.c_str(), stats_a.mean, stats_a.stddev);
  std::printf("b %s: mean %.6f  std %.6f\n", checkpoint_b.c_str(), stats_b.mean, stats_b.stddev);
  std::printf("std_b_smaller %s\n", stats_b.stddev < stats_a.stddev ? "true" : "false");
  std::fflush(stdout);
  return 0;
}

int cmd_dump_problem(const std::string& checkpoint, int image_index, const CommonFlags& flags) {
  RunConfig cfg = resolve_config(flags);
  require(image_index >= 0, "image index must be non-negative");

  std::string kind = checkpoint_kind(checkpoint);
  IsingProblem problem;
  if (kind == "fc") {
    FcCheckpoint ck = load_fc_checkpoint(checkpoint);
    Dataset test = load_mnist_split(cfg, false);
    if (image_index >= static_cast<int>(test.size()))
      throw ConfigError("image index " + std::to_string(image_index) +
                        " out of range (test split has " + std::to_string(test.size()) + " images)");
    problem = build_fc_problem(ck.arch, ck.params, test.images[image_index]).problem;
  } else {
    ConvCheckpoint ck = load_conv_checkpoint(checkpoint);
    Dataset patterns = patterns_3x3();
    if (image_index >= static_cast<int>(patterns.size()))
      throw ConfigError("image index " + std::to_string(image_index) + " out of range (" +
                        std::to_string(patterns.size()) + " patterns)");
    problem = build_conv_problem(ck.arch, ck.params, patterns.images[image_index]).physical;
  }

  std::string text = to_text(problem);
  if (flags.out.empty()) {
    std::fputs(text.c_str(), stdout);
    std::fflush(stdout);
  } else {
    fs::path out(flags.out);
    fs::create_directories(out);
    fs::path file = out / "problem.txt";
    refuse_overwrite(file, flags.force);
    std::ofstream f(file);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << text;
    std::printf("wrote %s\n", file.string().c_str());
    std::fflush(stdout);
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Ising-machine training by equilibrium propagation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string ckpt, ckpt_b;
  int image_index = 0;
  int n_samples = 1000;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "flat key = value config file");
    cmd->add_option("--data-dir", flags.data_dir, "override data.dir");
    cmd->add_option("--out", flags.out, "override output_dir");
    cmd->add_option("--seed", flags.seed, "override the run seed")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_flag("--force", flags.force, "overwrite existing outputs");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a network; writes manifest, metrics CSV and checkpoints");
  add_common(train_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint; prints accuracy and MSE");
  eval_cmd->add_option("checkpoint", ckpt, "checkpoint JSON file")->required();
  add_common(eval_cmd);

  CLI::App* edist_cmd = app.add_subcommand(
      "energy-dist", "annealed energy histograms of two checkpoints on the same input");
  edist_cmd->add_option("checkpoint_a", ckpt, "first checkpoint (e.g. untrained)")->required();
  edist_cmd->add_option("checkpoint_b", ckpt_b, "second checkpoint (e.g. trained)")->required();
  edist_cmd->add_option("--image", image_index, "test image index (default 0)");
  edist_cmd->add_option("--samples", n_samples, "samples per checkpoint (default 1000)");
  add_common(edist_cmd);

  CLI::App* dump_cmd =
      app.add_subcommand("dump-problem", "write a checkpoint's spin problem as text");
  dump_cmd->add_option("checkpoint", ckpt, "checkpoint JSON file")->required();
  dump_cmd->add_option("--image", image_index, "test image index (default 0)");
  add_common(dump_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train_cmd)) return cmd_train(flags);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(ckpt, flags);
    if (app.got_subcommand(edist_cmd))
      return cmd_energy_dist(ckpt, ckpt_b, image_index, n_samples, flags);
    return cmd_dump_problem(ckpt, image_index, flags);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace isingep
