#pragma once

#include "pso/distributions.hpp"
#include "pso/pso_instances.hpp"
#include "pso/rng.hpp"
#include "pso/surface_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace pso {

struct TrainConfig {
  long iterations = 300000;
  int batch_up = 1000;
  int batch_down = 1000;
  double lr0 = 0.0035;
  long warm_iters = 40000;
  double lr_min = 3e-9;
  double adam_beta1 = 0.75;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-10;
  std::uint64_t seed = 0;
  double augment_sigma = 0.0;
  long eval_period = 1000;
  long checkpoint_period = 0;  // 0 disables periodic checkpoints
  double grad_clip = 0.0;      // 0 disables clipping of ||dtheta||
  bool record_wall_time = false;

  void validate() const;  // throws std::invalid_argument
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  static AdamState zeros(std::size_t n);
};

struct AdamParams {
  double beta1 = 0.75;
  double beta2 = 0.999;
  double eps = 1e-10;
};

void adam_step(AdamState& state, ParamVector& theta, const Vector& g, double lr, const AdamParams& p);

double lr_at(long t, const TrainConfig& cfg);

using AuxEvaluator = std::function<AuxInfo(std::span<const double>)>;

AuxEvaluator density_aux(const Distribution& down);
// log_q from the first x_dim coordinates of each row.
AuxEvaluator conditional_aux(const Distribution& down_x);

struct UpdateDirection {
  Vector dtheta;
  Vector up_heights;
  Vector down_heights;
};

UpdateDirection pso_update(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                           const AuxEvaluator& aux);

Vector pso_update_direction(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                            const AuxEvaluator& aux);

struct MetricsRow {
  long iter = 0;
  double lr = 0.0;
  double psqr = 0.0;
  double lsqr = 0.0;
  double is_err = 0.0;
  double grad_norm = 0.0;
  double wall_time = 0.0;
};

struct MetricsTrace {
  std::vector<MetricsRow> rows;
};

// Held-out points for the periodic metrics. true_log_pdf may be empty (psqr/lsqr become NaN).
struct EvalSetup {
  Matrix up_test;
  Matrix down_test;
  LogDensityFn true_log_pdf;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_row;
  std::function<void(long iter, const ParamVector&)> on_checkpoint;
};

// Batch sources for the generic loop; each call draws one batch.
struct TrainProblem {
  std::function<Matrix(CounterRng& up_rng)> up_batch;
  std::function<Matrix(CounterRng& down_rng)> down_batch;
  AuxEvaluator aux;
  std::optional<EvalSetup> eval;
};

struct TrainResult {
  ParamVector theta;
  MetricsTrace trace;
  AdamState adam;
};

class TrainingAborted : public NumericFailure {
 public:
  TrainingAborted(const std::string& what, long iteration, long last_checkpoint)
      : NumericFailure(what), iteration_(iteration), last_checkpoint_(last_checkpoint) {}
  long iteration() const { return iteration_; }
  long last_checkpoint() const { return last_checkpoint_; }  // -1 if none was emitted

 private:
  long iteration_;
  long last_checkpoint_;
};

TrainResult run_training(const Model& initial, const PsoInstance& inst, const TrainProblem& problem,
                         const TrainConfig& cfg, const TrainHooks& hooks = {});

using UpSource = std::variant<Matrix, Distribution>;

// Density estimation: up batches cycle through a dataset (reshuffled per epoch) or are sampled
// fresh from a distribution; down batches are sampled fresh from down_dist.
TrainResult train(const NetworkSpec& spec, const Preconditioner& precond, const PsoInstance& inst,
                  const UpSource& up_source, const Distribution& down_dist, const TrainConfig& cfg,
                  std::optional<EvalSetup> eval = std::nullopt, const TrainHooks& hooks = {},
                  bool zero_last_layer = true);

// Rows are (x, y) with x of dimension down_x.dim().
std::pair<Matrix, Matrix> conditional_batch(const Matrix& pairs, const Distribution& down_x, int n_up, int n_down,
                                            CounterRng& rng);

TrainResult train_conditional(const NetworkSpec& spec, const Preconditioner& precond, const PsoInstance& inst,
                              const Matrix& pairs, const Distribution& down_x, const TrainConfig& cfg,
                              std::optional<EvalSetup> eval = std::nullopt, const TrainHooks& hooks = {},
                              bool zero_last_layer = true);

}  // namespace pso
