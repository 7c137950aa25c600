#include "pso_cli/experiment.hpp"

#include "pso_cli/csv.hpp"

#include <cmath>

namespace pso::cli {

namespace {

constexpr long kFitSamples = 100000;

ActivationKind activation_from(const std::string& s) {
  if (s == "relu") return ActivationKind::relu;
  if (s == "tanh") return ActivationKind::tanh;
  if (s == "identity") return ActivationKind::identity;
  return ActivationKind::leaky_relu;
}

Vector vec(const std::vector<double>& v, std::size_t from, std::size_t n) {
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = v[from + i];
  return out;
}

Distribution truth_for(const std::string& name, int dim) {
  if (name == "columns") return columns(dim);
  if (name == "transformed_columns") {
    if (dim == 20) return transformed_columns();
    return transformed(columns(dim), TransformSpec::from_matrix(leading_rotation(dim)));
  }
  return diag_gaussian(Vector::Zero(dim), Vector::Ones(dim));
}

Distribution down_from(const ExperimentConfig& cfg, const Matrix& fit_data) {
  const std::string kind = cfg.get_string("down.kind", "uniform_fit");
  const int dim = static_cast<int>(fit_data.cols());
  if (kind == "uniform_fit") return uniform_box_fit(fit_data);
  if (kind == "gaussian_fit") return diag_gaussian_fit(fit_data);
  if (!cfg.has("down.family")) throw ConfigError("down.family", "required when down.kind=explicit");
  const auto p = cfg.get_doubles("down.params");
  if (p.size() != 2 * static_cast<std::size_t>(dim))
    throw ConfigError("down.params", "expected " + std::to_string(2 * dim) + " values for dimension " +
                                         std::to_string(dim));
  const Vector a = vec(p, 0, dim), b = vec(p, dim, dim);
  try {
    if (cfg.get_string("down.family", "") == "uniform") return uniform_box(a, b);
    return diag_gaussian(a, b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("down.params", e.what());
  }
}

}  // namespace

NetworkSpec spec_from(const ExperimentConfig& cfg, int input_dim) {
  const std::string topo = cfg.get_string("model.topology", "block_diagonal");
  NetworkSpec s;
  if (topo == "linear") {
    s = NetworkSpec::linear(input_dim);
  } else if (topo == "fully_connected") {
    s = NetworkSpec::fully_connected(input_dim, static_cast<int>(cfg.get_long("model.width", 64)),
                                     static_cast<int>(cfg.get_long("model.num_layers", 4)));
  } else {
    s = NetworkSpec::block_diagonal(input_dim, static_cast<int>(cfg.get_long("model.num_blocks", 8)),
                                    static_cast<int>(cfg.get_long("model.block_size", 16)),
                                    static_cast<int>(cfg.get_long("model.num_layers", 4)));
  }
  if (topo != "linear") {
    s.activation.kind = activation_from(cfg.get_string("model.activation", "leaky_relu"));
    s.activation.slope = cfg.get_double("model.leaky_slope", 0.01);
    s.shortcuts = cfg.get_bool("model.shortcuts", false);
  }
  if (cfg.get_string("model.output_transform", "none") == "bounded") {
    if (!cfg.has("model.h_min") || !cfg.has("model.h_max"))
      throw ConfigError("model.output_transform", "bounded output needs model.h_min and model.h_max");
    s.output = {true, cfg.get_double("model.h_min", 0.0), cfg.get_double("model.h_max", 0.0)};
  }
  try {
    s.validate();
  } catch (const SpecError& e) {
    throw ConfigError("model", e.what());
  }
  return s;
}

PsoInstance instance_from(const ExperimentConfig& cfg) {
  const std::string name = cfg.get_string("instance.name", "pso_lde");
  InstanceParams params;
  for (const char* p : {"alpha", "d", "m", "a", "b"}) {
    const std::string key = std::string("instance.") + p;
    if (cfg.has(key)) params[p] = cfg.get_double(key, 0.0);
  }
  if (name == "pso_lde" && !params.count("alpha")) params["alpha"] = 0.25;
  PsoInstance inst;
  try {
    inst = make_named(name, params);
  } catch (const RegistryError& e) {
    const std::string msg = e.what();
    std::string key = "instance.name";
    for (const auto& [p, _] : params)
      if (msg.find("'" + p + "'") != std::string::npos) key = "instance." + p;
    for (const char* p : {"alpha", "d", "m", "a", "b"})
      if (!params.count(p) && msg.find("'" + std::string(p) + "'") != std::string::npos) key = std::string("instance.") + p;
    throw ConfigError(key, msg);
  }
  if (cfg.get_bool("instance.wrap_bounded", false)) inst = wrap_bounded(inst);
  if (cfg.has("instance.cut_up_at"))
    inst = wrap_cut_at(inst, cfg.get_double("instance.cut_up_at", 0.0), Side::above, Force::up);
  if (cfg.has("instance.cut_down_at"))
    inst = wrap_cut_at(inst, cfg.get_double("instance.cut_down_at", 0.0), Side::below, Force::down);
  return inst;
}

Preconditioner preconditioner_for(const Vector& mean, const Vector& std, const Distribution& down, int input_dim) {
  Preconditioner p;
  p.mean = mean;
  p.std = std;
  if (down.dim() == input_dim) {
    p.height_bias = down.height_bias();
  } else {
    const auto dx = static_cast<std::size_t>(down.dim());
    p.height_bias = [hb = down.height_bias(), dx](std::span<const double> x) { return hb(x.first(dx)); };
  }
  return p;
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment e;
  e.config = cfg;
  const std::uint64_t seed = cfg.get_u64("train.seed", 0);
  CounterRng data_rng = stream_for(seed, "data");

  const bool has_path = cfg.has("data.dataset_path");
  const std::string dist = cfg.get_string("data.distribution", has_path ? "" : "columns");
  e.conditional = dist == "linear_gaussian";
  int dim = static_cast<int>(cfg.get_long("data.dim", e.conditional ? 2 : 1));
  if (e.conditional && dim != 2) throw ConfigError("data.dim", "linear_gaussian pairs are 2-dimensional");
  const long size = cfg.get_long("data.dataset_size", 200000);

  if (has_path) {
    try {
      e.dataset = read_matrix_csv(cfg.get_string("data.dataset_path", ""));
    } catch (const std::exception& ex) {
      throw ConfigError("data.dataset_path", ex.what());
    }
    if (cfg.has("data.dim") && e.dataset.cols() != dim)
      throw ConfigError("data.dim", "dataset has " + std::to_string(e.dataset.cols()) + " columns");
    dim = static_cast<int>(e.dataset.cols());
  } else if (e.conditional) {
    if (size < 1) throw ConfigError("data.dataset_size", "conditional training needs a dataset");
  }
  if (!dist.empty() && !e.conditional) e.truth = truth_for(dist, dim);

  if (!has_path) {
    if (e.conditional) {
      e.dataset = e.pairs_law.sample(data_rng, size);
    } else if (size > 0) {
      e.dataset = e.truth->sample(data_rng, size);
    }
  }

  Matrix fit = e.dataset.rows() > 0 ? e.dataset : e.truth->sample(data_rng, kFitSamples);
  const Matrix down_fit = e.conditional ? Matrix(fit.leftCols(1)) : fit;
  e.down = down_from(cfg, down_fit);

  e.spec = spec_from(cfg, dim);
  e.instance = instance_from(cfg);
  e.zero_last_layer = cfg.get_bool("model.zero_last_layer", true);
  {
    const Preconditioner stats = Preconditioner::from_data(fit);
    e.precond = preconditioner_for(stats.mean, stats.std, e.down, dim);
  }

  TrainConfig& t = e.train;
  t.iterations = cfg.get_long("train.iterations", t.iterations);
  t.batch_up = static_cast<int>(cfg.get_long("train.batch_up", t.batch_up));
  t.batch_down = static_cast<int>(cfg.get_long("train.batch_down", t.batch_down));
  t.lr0 = cfg.get_double("train.lr0", t.lr0);
  t.warm_iters = cfg.get_long("train.warm_iters", std::min(t.warm_iters, t.iterations));
  t.lr_min = cfg.get_double("train.lr_min", t.lr_min);
  t.adam_beta1 = cfg.get_double("train.adam_beta1", t.adam_beta1);
  t.adam_beta2 = cfg.get_double("train.adam_beta2", t.adam_beta2);
  t.adam_eps = cfg.get_double("train.adam_eps", t.adam_eps);
  t.seed = seed;
  t.augment_sigma = cfg.get_double("train.augment_sigma", t.augment_sigma);
  if (cfg.has("train.eval_period") && cfg.has("eval.eval_period") &&
      cfg.get_long("train.eval_period", 0) != cfg.get_long("eval.eval_period", 0))
    throw ConfigError("eval.eval_period", "conflicts with train.eval_period");
  t.eval_period = cfg.get_long("eval.eval_period", cfg.get_long("train.eval_period", t.eval_period));
  t.checkpoint_period = cfg.get_long("train.checkpoint_period", t.checkpoint_period);
  t.grad_clip = cfg.get_double("train.grad_clip", t.grad_clip);
  t.record_wall_time = cfg.get_bool("train.record_wall_time", t.record_wall_time);
  try {
    t.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("train", ex.what());
  }

  e.test_size = cfg.get_long("eval.test_size", e.test_size);
  e.ti_samples = cfg.get_long("eval.ti_samples", e.ti_samples);
  return e;
}

LogDensityFn Experiment::true_log_pdf() const {
  if (conditional) {
    return [law = pairs_law](std::span<const double> p) { return law.conditional_log_pdf(p[0], p[1]); };
  }
  if (truth) return [d = *truth](std::span<const double> x) { return d.log_pdf(x); };
  return {};
}

AuxEvaluator Experiment::aux() const { return conditional ? conditional_aux(down) : density_aux(down); }

EvalSetup Experiment::eval_setup(std::uint64_t seed) const {
  CounterRng rng = stream_for(seed, "test");
  EvalSetup ev;
  ev.true_log_pdf = true_log_pdf();
  if (conditional) {
    ev.up_test = pairs_law.sample(rng, test_size);
    ev.down_test = conditional_batch(ev.up_test, down, 0, static_cast<int>(test_size), rng).second;
    return ev;
  }
  if (truth) {
    ev.up_test = truth->sample(rng, test_size);
  } else {
    ev.up_test.resize(test_size, dataset.cols());
    const auto rows = static_cast<std::uint64_t>(dataset.rows());
    for (Eigen::Index i = 0; i < test_size; ++i) ev.up_test.row(i) = dataset.row(static_cast<Eigen::Index>(rng() % rows));
  }
  ev.down_test = down.sample(rng, test_size);
  return ev;
}

TotalIntegral Experiment::total_integral_of(const Model& model, std::uint64_t seed) const {
  CounterRng rng = stream_for(seed, "test").split("total_integral");
  if (!conditional) return total_integral(height_fn(model), down, ti_samples, rng);

  constexpr long kChunk = 8192;
  const AuxEvaluator a = aux();
  double sum = 0.0, sum_sq = 0.0;
  for (long done = 0; done < ti_samples;) {
    const long c = std::min(kChunk, ti_samples - done);
    const Matrix ys = pairs_law.sample(rng, c);
    const Matrix X = conditional_batch(ys, down, 0, static_cast<int>(c), rng).second;
    const Vector f = model.heights(X);
    for (Eigen::Index i = 0; i < c; ++i) {
      const double w = std::exp(f[i] - a({X.row(i).data(), static_cast<std::size_t>(X.cols())}).log_q);
      sum += w;
      sum_sq += w * w;
    }
    done += c;
  }
  const double N = static_cast<double>(ti_samples);
  TotalIntegral t;
  t.value = sum / N;
  t.std_error = ti_samples > 1 ? std::sqrt(std::max(0.0, (sum_sq - N * t.value * t.value) / (N - 1.0)) / N) : 0.0;
  return t;
}

Model Experiment::initial_model() const { return Model{spec, precond, init_params(spec, train.seed, zero_last_layer)}; }

Model Experiment::restore(const Checkpoint& c) const {
  Distribution d;
  try {
    d = from_descriptor(c.down);
  } catch (const std::exception& ex) {
    throw CheckpointError(std::string("checkpoint down density: ") + ex.what());
  }
  return Model{c.spec, preconditioner_for(c.mean, c.std, d, c.spec.input_dim), c.theta};
}

Checkpoint Experiment::checkpoint_of(const ParamVector& theta, long iteration) const {
  Checkpoint c;
  c.experiment_hash = config.hash();
  c.iteration = iteration;
  c.spec = spec;
  c.mean = precond.mean;
  c.std = precond.std;
  c.down = down.descriptor();
  c.theta = theta;
  return c;
}

}  // namespace pso::cli
