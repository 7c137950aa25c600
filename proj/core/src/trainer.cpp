#include "pso/trainer.hpp"

#include "pso/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace pso {

namespace {

std::span<const double> row_span(const Matrix& X, Eigen::Index i) {
  return {X.row(i).data(), static_cast<std::size_t>(X.cols())};
}

Vector log_q_of(const Matrix& X, const AuxEvaluator& aux) {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = aux(row_span(X, i)).log_q;
  return out;
}

// Reshuffled-per-epoch cursor over dataset rows.
class DatasetCycler {
 public:
  explicit DatasetCycler(const Matrix& data) : data_(data), order_(static_cast<std::size_t>(data.rows())) {
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    cursor_ = order_.size();
  }

  Matrix next(CounterRng& rng, int count) {
    Matrix out(count, data_.cols());
    for (int i = 0; i < count; ++i) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng);
        cursor_ = 0;
      }
      out.row(i) = data_.row(order_[cursor_++]);
    }
    return out;
  }

 private:
  Matrix data_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (iterations < 0) fail("iterations must be non-negative");
  if (batch_up < 1 || batch_down < 1) fail("batch sizes must be positive");
  if (!(lr0 > 0.0) || !(lr_min > 0.0)) fail("learning rates must be positive");
  if (warm_iters < 0 || warm_iters > iterations) fail("warm_iters must lie in [0, iterations]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail("adam betas must lie in [0,1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (!(augment_sigma >= 0.0)) fail("augment_sigma must be non-negative");
  if (eval_period < 1) fail("eval_period must be positive");
  if (checkpoint_period < 0) fail("checkpoint_period must be non-negative");
  if (!(grad_clip >= 0.0)) fail("grad_clip must be non-negative");
}

AdamState AdamState::zeros(std::size_t n) {
  AdamState s;
  s.m = Vector::Zero(static_cast<Eigen::Index>(n));
  s.v = Vector::Zero(static_cast<Eigen::Index>(n));
  return s;
}

void adam_step(AdamState& state, ParamVector& theta, const Vector& g, double lr, const AdamParams& p) {
  if (g.size() != theta.values.size() || state.m.size() != g.size() || state.v.size() != g.size())
    throw std::invalid_argument("adam_step shape mismatch");
  ++state.step;
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * g;
  state.v = p.beta2 * state.v + (1.0 - p.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step));
  theta.values.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + p.eps);
}

double lr_at(long t, const TrainConfig& cfg) {
  if (t <= cfg.warm_iters || cfg.iterations <= cfg.warm_iters) return cfg.lr0;
  const double frac = static_cast<double>(t - cfg.warm_iters) / static_cast<double>(cfg.iterations - cfg.warm_iters);
  if (frac >= 1.0) return cfg.lr_min;
  return cfg.lr0 * std::pow(cfg.lr_min / cfg.lr0, frac);
}

AuxEvaluator density_aux(const Distribution& down) {
  return [down](std::span<const double> x) { return AuxInfo{down.log_pdf(x), {}}; };
}

AuxEvaluator conditional_aux(const Distribution& down_x) {
  const auto dx = static_cast<std::size_t>(down_x.dim());
  return [down_x, dx](std::span<const double> x) { return AuxInfo{down_x.log_pdf(x.first(dx)), {}}; };
}

UpdateDirection pso_update(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                           const AuxEvaluator& aux) {
  if (up.rows() < 1 || down.rows() < 1) throw std::invalid_argument("pso update needs nonempty batches");
  const Eigen::Index nu = up.rows();
  const Eigen::Index nd = down.rows();
  Matrix X(nu + nd, up.cols());
  X.topRows(nu) = up;
  X.bottomRows(nd) = down;

  const ForwardTape tape = forward_tape(model.spec, model.precond, model.theta, X);
  Vector coeffs(nu + nd);
  for (Eigen::Index i = 0; i < nu + nd; ++i) {
    const auto x = row_span(X, i);
    const AuxInfo info = aux(x);
    const bool is_up = i < nu;
    const double m = is_up ? inst.up(x, tape.out[i], info) : inst.down(x, tape.out[i], info);
    if (!std::isfinite(m)) {
      const long idx = static_cast<long>(is_up ? i : i - nu);
      throw NumericFailure("instance '" + inst.name + "' produced a non-finite " + (is_up ? "up" : "down") +
                               " magnitude at point " + std::to_string(idx),
                           -1, idx);
    }
    coeffs[i] = is_up ? -m / static_cast<double>(nu) : m / static_cast<double>(nd);
  }
  UpdateDirection r;
  r.dtheta = backward(model.spec, model.theta, tape, coeffs);
  r.up_heights = tape.out.head(nu);
  r.down_heights = tape.out.tail(nd);
  return r;
}

Vector pso_update_direction(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                            const AuxEvaluator& aux) {
  return pso_update(model, inst, up, down, aux).dtheta;
}

TrainResult run_training(const Model& initial, const PsoInstance& inst, const TrainProblem& problem,
                         const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  TrainResult result;
  result.theta = initial.theta;
  result.adam = AdamState::zeros(initial.theta.size());
  if (cfg.iterations == 0) return result;

  Model model{initial.spec, initial.precond, initial.theta};
  CounterRng up_rng = stream_for(cfg.seed, "up");
  CounterRng down_rng = stream_for(cfg.seed, "down");
  CounterRng noise_rng = stream_for(cfg.seed, "noise");
  const AdamParams adam{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};

  Vector true_up_log;
  Vector down_test_log_q;
  if (problem.eval) {
    down_test_log_q = log_q_of(problem.eval->down_test, problem.aux);
    if (problem.eval->true_log_pdf) {
      true_up_log.resize(problem.eval->up_test.rows());
      for (Eigen::Index i = 0; i < true_up_log.size(); ++i)
        true_up_log[i] = problem.eval->true_log_pdf(row_span(problem.eval->up_test, i));
    }
  }

  const auto start = std::chrono::steady_clock::now();
  double last_grad_norm = 0.0;
  long last_checkpoint = -1;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto record = [&](long t) {
    MetricsRow row;
    row.iter = t;
    row.lr = lr_at(t, cfg);
    row.grad_norm = last_grad_norm;
    row.psqr = row.lsqr = row.is_err = nan;
    if (problem.eval) {
      const Vector fu = model.heights(problem.eval->up_test);
      if (true_up_log.size() > 0) {
        row.psqr = psqr(fu, true_up_log);
        row.lsqr = lsqr(fu, true_up_log);
      }
      if (problem.eval->down_test.rows() > 0) {
        row.is_err = is_error(fu, model.heights(problem.eval->down_test), down_test_log_q);
      }
    }
    if (cfg.record_wall_time) {
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.trace.rows.push_back(row);
    if (hooks.on_row) hooks.on_row(row);
  };

  record(0);
  for (long t = 1; t <= cfg.iterations; ++t) {
    try {
      Matrix up = problem.up_batch(up_rng);
      if (cfg.augment_sigma > 0.0) up = augment_additive_noise(up, cfg.augment_sigma, noise_rng);
      const Matrix down = problem.down_batch(down_rng);
      Vector d = pso_update_direction(model, inst, up, down, problem.aux);
      last_grad_norm = d.norm();
      if (cfg.grad_clip > 0.0 && last_grad_norm > cfg.grad_clip) d *= cfg.grad_clip / last_grad_norm;
      adam_step(result.adam, model.theta, d, lr_at(t, cfg), adam);
      if (!all_finite(model.theta.values)) throw NumericFailure("parameters became non-finite");
      if (t % cfg.eval_period == 0 || t == cfg.iterations) record(t);
    } catch (const NumericFailure& e) {
      throw TrainingAborted(std::string(e.what()) + " at iteration " + std::to_string(t), t, last_checkpoint);
    }
    if (cfg.checkpoint_period > 0 && t % cfg.checkpoint_period == 0) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(t, model.theta);
      last_checkpoint = t;
    }
  }
  result.theta = model.theta;
  return result;
}

TrainResult train(const NetworkSpec& spec, const Preconditioner& precond, const PsoInstance& inst,
                  const UpSource& up_source, const Distribution& down_dist, const TrainConfig& cfg,
                  std::optional<EvalSetup> eval, const TrainHooks& hooks, bool zero_last_layer) {
  if (down_dist.dim() != spec.input_dim) throw std::invalid_argument("down density dimension does not match spec");
  TrainProblem problem;
  const int nu = cfg.batch_up;
  const int nd = cfg.batch_down;
  if (const auto* data = std::get_if<Matrix>(&up_source)) {
    if (data->cols() != spec.input_dim || data->rows() < 1) throw std::invalid_argument("dataset shape does not match spec");
    auto cycler = std::make_shared<DatasetCycler>(*data);
    problem.up_batch = [cycler, nu](CounterRng& rng) { return cycler->next(rng, nu); };
  } else {
    const Distribution& dist = std::get<Distribution>(up_source);
    if (dist.dim() != spec.input_dim) throw std::invalid_argument("up density dimension does not match spec");
    problem.up_batch = [dist, nu](CounterRng& rng) { return dist.sample(rng, nu); };
  }
  problem.down_batch = [down_dist, nd](CounterRng& rng) { return down_dist.sample(rng, nd); };
  problem.aux = density_aux(down_dist);
  problem.eval = std::move(eval);

  Model model{spec, precond, init_params(spec, cfg.seed, zero_last_layer)};
  return run_training(model, inst, problem, cfg, hooks);
}

std::pair<Matrix, Matrix> conditional_batch(const Matrix& pairs, const Distribution& down_x, int n_up, int n_down,
                                            CounterRng& rng) {
  if (pairs.rows() < 1) throw std::invalid_argument("conditional dataset is empty");
  const int dx = down_x.dim();
  if (pairs.cols() <= dx) throw std::invalid_argument("pairs must have x and y columns");
  const auto rows = static_cast<std::uint64_t>(pairs.rows());
  auto pick = [&]() { return static_cast<Eigen::Index>(rng() % rows); };

  Matrix up(n_up, pairs.cols());
  for (int i = 0; i < n_up; ++i) up.row(i) = pairs.row(pick());

  Matrix down(n_down, pairs.cols());
  down.leftCols(dx) = down_x.sample(rng, n_down);
  for (int i = 0; i < n_down; ++i) down.row(i).tail(pairs.cols() - dx) = pairs.row(pick()).tail(pairs.cols() - dx);
  return {std::move(up), std::move(down)};
}

TrainResult train_conditional(const NetworkSpec& spec, const Preconditioner& precond, const PsoInstance& inst,
                              const Matrix& pairs, const Distribution& down_x, const TrainConfig& cfg,
                              std::optional<EvalSetup> eval, const TrainHooks& hooks, bool zero_last_layer) {
  if (pairs.cols() != spec.input_dim) throw std::invalid_argument("pair width does not match spec");
  TrainProblem problem;
  const int nu = cfg.batch_up;
  const int nd = cfg.batch_down;
  // Up rows cycle through the dataset; down rows pair fresh x draws with y values of random rows.
  auto cycler = std::make_shared<DatasetCycler>(pairs);
  problem.up_batch = [cycler, nu](CounterRng& rng) { return cycler->next(rng, nu); };
  problem.down_batch = [pairs, down_x, nd](CounterRng& rng) {
    return conditional_batch(pairs, down_x, 0, nd, rng).second;
  };
  problem.aux = conditional_aux(down_x);
  problem.eval = std::move(eval);

  Model model{spec, precond, init_params(spec, cfg.seed, zero_last_layer)};
  return run_training(model, inst, problem, cfg, hooks);
}

}  // namespace pso
