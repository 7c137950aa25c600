#include "pso_cli/commands.hpp"

#include "pso/evaluation.hpp"
#include "pso/kernel_diag.hpp"
#include "pso_cli/checkpoint.hpp"
#include "pso_cli/csv.hpp"
#include "pso_cli/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace pso::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// nlohmann writes NaN and infinities as null; keep infinities readable.
json real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Vector log_q_of(const Matrix& X, const AuxEvaluator& aux) {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = aux({X.row(i).data(), static_cast<std::size_t>(X.cols())}).log_q;
  return out;
}

Matrix draw_up(const Experiment& e, CounterRng& rng, Eigen::Index n) {
  if (e.conditional) return e.pairs_law.sample(rng, n);
  if (e.truth) return e.truth->sample(rng, n);
  Matrix out(n, e.dataset.cols());
  const auto rows = static_cast<std::uint64_t>(e.dataset.rows());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = e.dataset.row(static_cast<Eigen::Index>(rng() % rows));
  return out;
}

Matrix draw_down(const Experiment& e, CounterRng& rng, Eigen::Index n) {
  if (!e.conditional) return e.down.sample(rng, n);
  return conditional_batch(e.pairs_law.sample(rng, n), e.down, 0, static_cast<int>(n), rng).second;
}

json row_json(const MetricsRow& r) {
  return {{"iter", r.iter},           {"lr", real(r.lr)},       {"psqr", real(r.psqr)}, {"lsqr", real(r.lsqr)},
          {"is_err", real(r.is_err)}, {"grad_norm", real(r.grad_norm)}};
}

struct Loaded {
  Checkpoint ckpt;
  Model model;
};

Loaded load_model(const Experiment& e, const std::string& path, std::ostream& log) {
  Checkpoint c = load_checkpoint(path);
  if (c.experiment_hash != e.config.hash())
    log << "warning: checkpoint was written by a different config (hash " << hex64(c.experiment_hash) << ")\n";
  Model m = e.restore(c);
  return {std::move(c), std::move(m)};
}

}  // namespace

int run_train(const ExperimentConfig& cfg, const TrainOptions& opt, std::ostream& log) {
  const Experiment e = build_experiment(cfg);
  const fs::path dir = opt.out_dir.empty() ? cfg.get_string("output.dir", "run") : opt.out_dir;
  fs::create_directories(dir);
  const bool checkpoints = cfg.get_bool("output.checkpoints", true);

  std::ofstream csv = open_out(dir / cfg.get_string("output.csv", "metrics.csv"));
  write_metrics_header(csv);

  std::string last_checkpoint;
  TrainHooks hooks;
  hooks.on_row = [&](const MetricsRow& r) {
    write_metrics_row(csv, r);
    csv.flush();
    log << "iter " << r.iter << " lsqr " << format_real(r.lsqr) << " is_err " << format_real(r.is_err) << '\n';
  };
  hooks.on_checkpoint = [&](long t, const ParamVector& theta) {
    if (!checkpoints) return;
    const fs::path p = dir / ("checkpoint_" + std::to_string(t) + ".ckpt");
    save_checkpoint(e.checkpoint_of(theta, t), p.string());
    last_checkpoint = p.string();
  };

  log << "experiment " << hex64(cfg.hash()) << ": " << e.spec.param_count() << " parameters, instance "
      << e.instance.name << ", " << e.train.iterations << " iterations\n";
  TrainResult result;
  try {
    if (e.conditional) {
      result = train_conditional(e.spec, e.precond, e.instance, e.dataset, e.down, e.train, e.eval_setup(), hooks,
                                 e.zero_last_layer);
    } else {
      const UpSource up = e.dataset.rows() > 0 ? UpSource(e.dataset) : UpSource(*e.truth);
      result = train(e.spec, e.precond, e.instance, up, e.down, e.train, e.eval_setup(), hooks, e.zero_last_layer);
    }
  } catch (const TrainingAborted& ex) {
    log << "error: training aborted at iteration " << ex.iteration() << ": " << ex.what() << "\n"
        << "last checkpoint: " << (last_checkpoint.empty() ? "none" : last_checkpoint) << '\n';
    json s = {{"status", "aborted"},
              {"experiment_hash", hex64(cfg.hash())},
              {"iteration", ex.iteration()},
              {"error", ex.what()},
              {"last_checkpoint", last_checkpoint.empty() ? json(nullptr) : json(last_checkpoint)}};
    write_json(s, dir / "summary.json");
    return kNumeric;
  }

  std::string final_path;
  if (checkpoints) {
    final_path = (dir / "final.ckpt").string();
    save_checkpoint(e.checkpoint_of(result.theta, e.train.iterations), final_path);
  }
  const Model model{e.spec, e.precond, result.theta};
  const TotalIntegral ti = e.total_integral_of(model, e.train.seed);
  json s = {{"status", "ok"},
            {"experiment_hash", hex64(cfg.hash())},
            {"iterations", e.train.iterations},
            {"final", row_json(result.trace.rows.back())},
            {"total_integral", {{"value", real(ti.value)}, {"std_error", real(ti.std_error)}, {"samples", e.ti_samples}}},
            {"checkpoint", final_path.empty() ? json(nullptr) : json(final_path)}};
  write_json(s, dir / "summary.json");
  log << "total integral " << format_real(ti.value) << " +- " << format_real(ti.std_error) << '\n';
  return kOk;
}

int run_eval(const ExperimentConfig& cfg, const EvalOptions& opt, std::ostream& out, std::ostream& log) {
  const Experiment e = build_experiment(cfg);
  const Loaded l = load_model(e, opt.checkpoint, log);
  const std::uint64_t seed = opt.test_seed.value_or(e.train.seed);
  const EvalSetup ev = e.eval_setup(seed);

  const Vector fu = l.model.heights(ev.up_test);
  double ps = std::nan(""), ls = std::nan(""), ls_se = std::nan("");
  if (ev.true_log_pdf) {
    Vector truth(ev.up_test.rows());
    for (Eigen::Index i = 0; i < truth.size(); ++i)
      truth[i] = ev.true_log_pdf({ev.up_test.row(i).data(), static_cast<std::size_t>(ev.up_test.cols())});
    ps = psqr(fu, truth);
    ls = lsqr(fu, truth);
    const Vector sq = (truth - fu).array().square();
    const double n = static_cast<double>(sq.size());
    ls_se = std::sqrt((sq.array() - ls).square().sum() / (n - 1.0) / n);
  }
  const double is = is_error(fu, l.model.heights(ev.down_test), log_q_of(ev.down_test, e.aux()));
  const TotalIntegral ti = e.total_integral_of(l.model, seed);

  const json j = {{"checkpoint", opt.checkpoint},
                  {"iteration", l.ckpt.iteration},
                  {"test_seed", seed},
                  {"n_test", e.test_size},
                  {"psqr", real(ps)},
                  {"lsqr", real(ls)},
                  {"lsqr_std_error", real(ls_se)},
                  {"is_err", real(is)},
                  {"total_integral", real(ti.value)},
                  {"total_integral_std_error", real(ti.std_error)}};
  out << j.dump(2) << '\n';
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    write_json(j, fs::path(opt.out_dir) / "eval.json");
  }
  return kOk;
}

int run_diag(const ExperimentConfig& cfg, const DiagOptions& opt, std::ostream& log) {
  if (opt.probes < 2) throw ConfigError("--probes", "needs at least two probes");
  const Experiment e = build_experiment(cfg);
  const Loaded l = load_model(e, opt.checkpoint, log);
  CounterRng rng = stream_for(opt.seed.value_or(e.train.seed), "test").split("diag");
  const Matrix probes = draw_up(e, rng, opt.probes);
  const fs::path dir = opt.out_dir;
  fs::create_directories(dir);

  if (opt.mode == "scan") {
    KernelKind kind = KernelKind::raw;
    if (opt.kernel == "relative") kind = KernelKind::relative;
    else if (opt.kernel == "cosine") kind = KernelKind::cosine;
    else if (opt.kernel != "raw") throw ConfigError("--kernel", "expected raw, relative or cosine");
    const KernelScan scan = pair_scan(l.model, probes, kind);
    const char* col = kind == KernelKind::raw ? "g" : (kind == KernelKind::relative ? "r" : "c");
    const fs::path path = dir / ("scan_" + to_string(kind) + ".csv");
    std::ofstream out = open_out(path);
    out << "i,j,d," << col << '\n';
    for (const auto& p : scan.pairs)
      out << p.i << ',' << p.j << ',' << format_real(p.distance) << ',' << format_real(p.similarity) << '\n';
    log << scan.pairs.size() << " pairs written to " << path.string() << '\n';
    return kOk;
  }

  if (opt.mode == "gramian") {
    const Eigen::MatrixXd G = gramian(l.model, probes);
    write_file((dir / "gramian.bin").string(), encode_gramian(G));
    const UncertaintyMetrics u = uncertainty_metrics(G);
    std::ofstream out = open_out(dir / "uncertainty.csv");
    out << "probe,c1,c2\n";
    for (Eigen::Index i = 0; i < G.rows(); ++i)
      out << i << ',' << format_real(u.c1[i]) << ',' << format_real(u.c2 ? (*u.c2)[i] : std::nan("")) << '\n';
    if (!u.c2) log << "c2 unavailable: " << u.c2_error << '\n';
    log << G.rows() << "x" << G.cols() << " gramian written to " << (dir / "gramian.bin").string() << '\n';
    return kOk;
  }

  if (opt.mode == "differential") {
    const Matrix up = draw_up(e, rng, e.train.batch_up);
    const Matrix down = draw_down(e, rng, e.train.batch_down);
    const auto recs = differential_check(l.model, e.instance, up, down, e.aux(), probes, opt.deltas);
    std::ofstream out = open_out(dir / "differential.csv");
    out << "probe,delta,df_real,df_approx,ratio,degenerate\n";
    for (const auto& r : recs)
      out << r.probe << ',' << format_real(r.delta) << ',' << format_real(r.df_real) << ','
          << format_real(r.df_approx) << ',' << format_real(r.ratio) << ',' << (r.degenerate ? 1 : 0) << '\n';
    log << recs.size() << " records written to " << (dir / "differential.csv").string() << '\n';
    return kOk;
  }
  throw ConfigError("--mode", "expected scan, gramian or differential");
}

int run_feasibility(const ExperimentConfig& cfg, const FeasibilityOptions& opt, std::ostream& out, std::ostream&) {
  ExperimentConfig c = cfg;
  if (!opt.instance.empty()) {
    c = ExperimentConfig{};
    c.set("instance.name", opt.instance);
  }
  for (const auto& p : opt.params) c.apply_override("instance." + p);
  const PsoInstance inst = instance_from(c);

  const std::vector<double> grid = default_grid(inst.interval, opt.grid_count, opt.margin);
  const FeasibilityProbe probe{{0.0}, AuxInfo{0.0, {}}};
  const FeasibilityReport r = check_feasibility(inst, inst.interval, grid, std::span<const FeasibilityProbe>(&probe, 1));

  json violations = json::array();
  for (const auto& v : r.violations) violations.push_back({{"condition", v.condition}, {"s", real(v.s)}, {"x", v.x}});
  const json j = {{"instance", inst.name},
                  {"interval", {real(inst.interval.lo), real(inst.interval.hi)}},
                  {"grid_points", grid.size()},
                  {"feasible_on_K", r.feasible_on_K},
                  {"needs_range_restriction", r.needs_range_restriction},
                  {"violations", violations}};
  if (opt.out_path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_json(j, opt.out_path);
  }
  return kOk;
}

int run_sample(const ExperimentConfig& cfg, const SampleOptions& opt, std::ostream& out, std::ostream& log) {
  if (cfg.has("data.dataset_path")) throw ConfigError("data.dataset_path", "sample draws from data.distribution");
  if (opt.count < 1) throw ConfigError("--count", "must be positive");
  ExperimentConfig c = cfg;
  c.set("data.dataset_size", std::to_string(opt.count));
  if (opt.seed) c.set("train.seed", std::to_string(*opt.seed));
  const Experiment e = build_experiment(c);

  std::vector<std::string> header;
  if (e.conditional) {
    header = {"x", "y"};
  } else {
    for (Eigen::Index k = 0; k < e.dataset.cols(); ++k) header.push_back("x" + std::to_string(k));
  }
  if (opt.out_path.empty()) {
    write_matrix_csv(out, e.dataset, header);
  } else {
    std::ofstream f = open_out(opt.out_path);
    write_matrix_csv(f, e.dataset, header);
    log << e.dataset.rows() << " samples written to " << opt.out_path << '\n';
  }
  return kOk;
}

}  // namespace pso::cli
