#pragma once

#include "pso_cli/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pso::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 1, kConfig = 2, kNumeric = 3, kLoad = 4, kFailure = 5 };

struct TrainOptions {
  std::string out_dir;  // overrides output.dir
};

// Writes <dir>/<csv>, periodic and final checkpoints, and <dir>/summary.json.
int run_train(const ExperimentConfig& cfg, const TrainOptions& opt, std::ostream& log);

struct EvalOptions {
  std::string checkpoint;
  std::optional<std::uint64_t> test_seed;  // defaults to train.seed
  std::string out_dir;                     // empty: JSON to stdout only
};

int run_eval(const ExperimentConfig& cfg, const EvalOptions& opt, std::ostream& out, std::ostream& log);

struct DiagOptions {
  std::string checkpoint;
  std::string mode = "scan";  // scan | gramian | differential
  std::string kernel = "raw";  // raw | relative | cosine
  int probes = 100;
  std::vector<double> deltas{1e-3};
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

int run_diag(const ExperimentConfig& cfg, const DiagOptions& opt, std::ostream& log);

struct FeasibilityOptions {
  std::string instance;  // empty: taken from the config
  std::vector<std::string> params;  // key=value
  int grid_count = 401;
  double margin = 1e-9;
  std::string out_path;  // empty: stdout
};

int run_feasibility(const ExperimentConfig& cfg, const FeasibilityOptions& opt, std::ostream& out, std::ostream& log);

struct SampleOptions {
  long count = 1000;
  std::optional<std::uint64_t> seed;
  std::string out_path;  // empty: stdout
};

// Draws from the config's data distribution on the "data" stream, so count = data.dataset_size
// reproduces the training set.
int run_sample(const ExperimentConfig& cfg, const SampleOptions& opt, std::ostream& out, std::ostream& log);

}  // namespace pso::cli
