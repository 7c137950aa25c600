#pragma once

#include "pso/evaluation.hpp"
#include "pso/pso_instances.hpp"
#include "pso/trainer.hpp"
#include "pso_cli/checkpoint.hpp"
#include "pso_cli/config.hpp"

#include <optional>
#include <string>

namespace pso::cli {

// Everything a config determines, built deterministically from train.seed.
struct Experiment {
  ExperimentConfig config;
  NetworkSpec spec;
  PsoInstance instance;
  TrainConfig train;
  bool zero_last_layer = true;

  // Density the data comes from; absent for a plain dataset file.
  std::optional<Distribution> truth;
  bool conditional = false;  // linear_gaussian: rows are (x, y), the surface targets log p(x | y)
  LinearGaussianPairs pairs_law;

  Matrix dataset;  // empty when batches are sampled fresh from truth
  Distribution down;  // over x only when conditional
  Preconditioner precond;

  long test_size = 10000;
  long ti_samples = 1000000;

  bool has_true_log_pdf() const { return conditional || truth.has_value(); }
  LogDensityFn true_log_pdf() const;
  AuxEvaluator aux() const;

  // Held-out points from the "test" stream of the given seed.
  EvalSetup eval_setup(std::uint64_t seed) const;
  EvalSetup eval_setup() const { return eval_setup(train.seed); }

  // Importance-sampling total integral on the "test" stream; conditional runs average over y.
  TotalIntegral total_integral_of(const Model& model, std::uint64_t seed) const;

  Model initial_model() const;
  Model restore(const Checkpoint& c) const;
  Checkpoint checkpoint_of(const ParamVector& theta, long iteration) const;
};

Experiment build_experiment(const ExperimentConfig& config);

// Preconditioner with the height bias a down density implies for a spec of input_dim.
Preconditioner preconditioner_for(const Vector& mean, const Vector& std, const Distribution& down, int input_dim);

PsoInstance instance_from(const ExperimentConfig& config);
NetworkSpec spec_from(const ExperimentConfig& config, int input_dim);

}  // namespace pso::cli
