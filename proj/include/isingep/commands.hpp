#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isingep/deterministic.hpp"
#include "isingep/eqprop.hpp"

namespace isingep {

// Bad configuration: unknown key, unparsable value, invalid combination,
// refusing to overwrite an existing run. run_cli maps this to exit code 2;
// every other exception exits 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One training/evaluation run, assembled from a flat `key = value` config
// file plus command-line overrides. Defaults reproduce the published
// hyperparameter tables; selecting task=conv-patterns switches beta and the
// learning rates to the conv table unless the file sets them explicitly.
struct RunConfig {
  std::string task = "fc-mnist";  // fc-mnist | conv-patterns
  std::string sampler = "sa";     // sa | bruteforce | deterministic
  uint64_t seed = 0;
  std::string output_dir = "run";

  std::string data_dir = "data/mnist";
  int train_per_class = 100;  // MNIST/k subset sizes; ignored by conv-patterns
  int test_per_class = 10;

  TrainConfig train;    // annealed-EP loop settings, incl. annealer.* keys
  FcArchitecture fc;    // network.* keys (input/class counts come from data)
  ConvArchitecture conv;
  DetConfig det;        // det.* keys; epochs/skip/seed are shared with train

  // Sampling seed for standalone analyses (energy-dist). Training derives
  // its per-phase seeds from the run seed; this one defaults to it too.
  uint64_t annealer_seed = 0;
  bool annealer_seed_set = false;

  bool record_walltime = true;  // false writes 0 wall_seconds, making the
                                // metrics CSV bit-reproducible across reruns
  int checkpoint_every = 0;     // 0: checkpoint only at init and at the end
};

// `key = value` per line; '#' starts a comment; blank lines ignored; later
// occurrences of a key win. Unknown keys and unparsable values throw
// ConfigError naming the key.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Effective configuration, one `key = value` line per registry key. The run
// manifest embeds the same listing, so a manifest alone is enough to
// reconstruct the config file that reproduces the run.
std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg);
std::string render_config(const RunConfig& cfg);

// Cross-key consistency checks (task/sampler combination, positive scales,
// sane schedule...). Throws ConfigError.
void validate(const RunConfig& cfg);

// Flags shared by the subcommands; file values lose to these.
struct CommonFlags {
  std::string config_path;  // optional; defaults alone are a valid config
  std::string data_dir;
  std::string out;
  uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

// load_config + flag overrides + derived defaults (annealer.seed, det/train
// seed sync) + validate.
RunConfig resolve_config(const CommonFlags& flags);

int cmd_train(const CommonFlags& flags);
int cmd_eval(const std::string& checkpoint, const CommonFlags& flags);
int cmd_energy_dist(const std::string& checkpoint_a, const std::string& checkpoint_b,
                    int image_index, int n_samples, const CommonFlags& flags);
int cmd_dump_problem(const std::string& checkpoint, int image_index, const CommonFlags& flags);

// Subcommand dispatch. Exit codes: 0 ok, 1 runtime failure, 2 config error.
int run_cli(int argc, const char* const* argv);

}  // namespace isingep
