#include "pso/runtime.hpp"
#include "pso/trainer.hpp"
#include "pso_cli/checkpoint.hpp"
#include "pso_cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace pso::cli;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
};

ExperimentConfig load_config(const Common& c, bool required) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = ExperimentConfig::load(c.config_path);
  } else if (required) {
    throw ConfigError("--config", "a config file is required");
  }
  for (const auto& o : c.overrides) cfg.apply_override(o);
  return cfg;
}

void add_common(CLI::App* sub, Common& c, bool with_checkpoint) {
  sub->add_option("--config", c.config_path, "Experiment config (key=value lines)");
  sub->add_option("--set", c.overrides, "Override a config entry, key=value (repeatable)");
  sub->add_option("--seed", c.seed, "Seed override");
  sub->add_option("--out", c.out, "Output directory or file");
  if (with_checkpoint) sub->add_option("--checkpoint", c.checkpoint, "Checkpoint file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  pso::retain_heap_memory();
  CLI::App app{"Train and inspect neural surfaces with probabilistic surface optimization"};
  app.require_subcommand(1);

  Common train_c, eval_c, diag_c, feas_c, sample_c;

  auto* train = app.add_subcommand("train", "Run a training experiment");
  add_common(train, train_c, false);

  auto* eval = app.add_subcommand("eval", "Recompute metrics for a checkpoint on a seeded test set");
  add_common(eval, eval_c, true);

  DiagOptions diag_opt;
  auto* diag = app.add_subcommand("diag", "Kernel scans, Gramian export and differential checks");
  add_common(diag, diag_c, true);
  diag->add_option("--mode", diag_opt.mode, "scan | gramian | differential")
      ->check(CLI::IsMember({"scan", "gramian", "differential"}));
  diag->add_option("--kernel", diag_opt.kernel, "raw | relative | cosine (scan mode)")
      ->check(CLI::IsMember({"raw", "relative", "cosine"}));
  diag->add_option("--probes", diag_opt.probes, "Number of probe points");
  diag->add_option("--delta", diag_opt.deltas, "Step sizes for the differential check");

  FeasibilityOptions feas_opt;
  auto* feas = app.add_subcommand("feasibility", "Check the feasibility conditions of a PSO instance");
  add_common(feas, feas_c, false);
  feas->add_option("--instance", feas_opt.instance, "Registry name (default: instance.name of the config)");
  feas->add_option("--param", feas_opt.params, "Instance parameter key=value (repeatable)");
  feas->add_option("--grid", feas_opt.grid_count, "Grid points inside the convergence interval");
  feas->add_option("--margin", feas_opt.margin, "Distance kept from finite interval ends");

  SampleOptions sample_opt;
  std::string sample_dist;
  int sample_dim = 0;
  auto* sample = app.add_subcommand("sample", "Dump samples of the data distribution as CSV");
  add_common(sample, sample_c, false);
  sample->add_option("--count", sample_opt.count, "Number of samples");
  sample->add_option("--distribution", sample_dist, "Shorthand for data.distribution");
  sample->add_option("--dim", sample_dim, "Shorthand for data.dim");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig cfg = load_config(train_c, true);
      if (train_c.seed) cfg.set("train.seed", std::to_string(*train_c.seed));
      return run_train(cfg, TrainOptions{train_c.out}, std::cerr);
    }
    if (*eval) {
      EvalOptions opt{eval_c.checkpoint, eval_c.seed, eval_c.out};
      return run_eval(load_config(eval_c, true), opt, std::cout, std::cerr);
    }
    if (*diag) {
      diag_opt.checkpoint = diag_c.checkpoint;
      diag_opt.seed = diag_c.seed;
      if (!diag_c.out.empty()) diag_opt.out_dir = diag_c.out;
      return run_diag(load_config(diag_c, true), diag_opt, std::cerr);
    }
    if (*feas) {
      feas_opt.out_path = feas_c.out;
      return run_feasibility(load_config(feas_c, false), feas_opt, std::cout, std::cerr);
    }
    if (*sample) {
      ExperimentConfig cfg = load_config(sample_c, false);
      if (!sample_dist.empty()) cfg.set("data.distribution", sample_dist);
      if (sample_dim > 0) cfg.set("data.dim", std::to_string(sample_dim));
      sample_opt.seed = sample_c.seed;
      sample_opt.out_path = sample_c.out;
      return run_sample(cfg, sample_opt, std::cout, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const CheckpointError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return kLoad;
  } catch (const pso::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
