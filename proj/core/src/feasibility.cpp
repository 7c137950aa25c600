#include "pso/pso_instances.hpp"

#include <cmath>

namespace pso {

namespace {

constexpr double kStepTol = 1e-12;
constexpr double kMaxFlatFraction = 0.1;
constexpr std::size_t kMaxViolations = 32;
constexpr int kOutsidePoints = 200;

struct Eval {
  double up = 0.0;
  double down = 0.0;
  bool ok = false;
};

Eval evaluate(const PsoInstance& inst, const FeasibilityProbe& probe, double s) {
  Eval e;
  try {
    e.up = inst.up(probe.x, s, probe.aux);
    e.down = inst.down(probe.x, s, probe.aux);
    e.ok = true;
  } catch (const std::exception&) {
    e.ok = false;
  }
  return e;
}

class Recorder {
 public:
  explicit Recorder(std::vector<FeasibilityViolation>& out) : out_(out) {}
  void add(const std::string& cond, double s, const FeasibilityProbe& probe) {
    ++count_;
    if (out_.size() < kMaxViolations) out_.push_back({cond, s, probe.x});
  }
  std::size_t count() const { return count_; }

 private:
  std::vector<FeasibilityViolation>& out_;
  std::size_t count_ = 0;
};

// A zero magnitude next to a finite positive partner is treated as underflow at an extreme ratio.
bool positive_or_underflow(double m, double other) {
  if (m > 0.0 && std::isfinite(m)) return true;
  return m == 0.0 && other > 0.0 && std::isfinite(other);
}

void check_inside(const PsoInstance& inst, std::span<const double> grid, const FeasibilityProbe& probe,
                  Recorder& rec) {
  std::vector<double> log_ratio;
  log_ratio.reserve(grid.size());
  for (double s : grid) {
    const Eval e = evaluate(inst, probe, s);
    if (!e.ok) {
      rec.add("evaluation_failed", s, probe);
      return;
    }
    if (!positive_or_underflow(e.up, e.down)) rec.add("mag_up_not_positive_on_K", s, probe);
    if (!positive_or_underflow(e.down, e.up)) rec.add("mag_down_not_positive_on_K", s, probe);
    log_ratio.push_back(std::log(e.down) - std::log(e.up));
  }

  std::size_t flat = 0;
  for (std::size_t i = 1; i < log_ratio.size(); ++i) {
    const double a = log_ratio[i - 1];
    const double b = log_ratio[i];
    if (std::isnan(a) || std::isnan(b)) {
      rec.add("ratio_undefined_on_K", grid[i], probe);
      continue;
    }
    if (a == b) {
      ++flat;
      continue;
    }
    const double step = b - a;
    if (step < -kStepTol) {
      rec.add("ratio_not_increasing_on_K", grid[i], probe);
    } else if (step <= kStepTol) {
      ++flat;
    }
  }
  const std::size_t steps = log_ratio.size() > 1 ? log_ratio.size() - 1 : 0;
  if (steps > 0 && (flat == steps || static_cast<double>(flat) > kMaxFlatFraction * static_cast<double>(steps))) {
    rec.add("ratio_not_strictly_increasing_on_K", grid.front(), probe);
  }
}

// Quadrant IV below K (M^U >= 0 >= M^D), quadrant II above K (M^D >= 0 >= M^U), continuous and nonzero.
void check_outside(const PsoInstance& inst, const Interval& K, const FeasibilityProbe& probe, Recorder& rec) {
  auto side = [&](double edge, double direction, bool below) {
    const double span = 4.0 * std::max(1.0, std::abs(edge));
    const Eval inner = evaluate(inst, probe, edge - direction * 1e-9);
    const Eval at = evaluate(inst, probe, edge);
    if (inner.ok && at.ok && std::isfinite(inner.up) && std::isfinite(at.up) && std::isfinite(inner.down) &&
        std::isfinite(at.down)) {
      const double jump = std::max(std::abs(inner.up - at.up), std::abs(inner.down - at.down));
      const double scale = 1.0 + std::max({std::abs(at.up), std::abs(at.down)});
      if (jump > 1e-6 * scale) rec.add("discontinuous_at_K_boundary", edge, probe);
    }
    for (int k = 0; k < kOutsidePoints; ++k) {
      const double s = edge + direction * span * static_cast<double>(k) / (kOutsidePoints - 1);
      const Eval e = evaluate(inst, probe, s);
      if (!e.ok || !std::isfinite(e.up) || !std::isfinite(e.down)) {
        rec.add("not_finite_outside_K", s, probe);
        continue;
      }
      if (e.up == 0.0 && e.down == 0.0) {
        rec.add("zero_modulus_outside_K", s, probe);
        continue;
      }
      const bool quadrant = below ? (e.up >= 0.0 && e.down <= 0.0) : (e.up <= 0.0 && e.down >= 0.0);
      if (!quadrant) rec.add(below ? "wrong_quadrant_below_K" : "wrong_quadrant_above_K", s, probe);
    }
  };
  if (K.lower_finite()) side(K.lo, -1.0, true);
  if (K.upper_finite()) side(K.hi, +1.0, false);
}

}  // namespace

std::vector<double> default_grid(const Interval& K, int count, double margin) {
  std::vector<double> g(static_cast<std::size_t>(count));
  const double n1 = count - 1;
  for (int i = 0; i < count; ++i) {
    const double t = i / n1;
    double s = 0.0;
    if (!K.lower_finite() && !K.upper_finite()) {
      s = -30.0 + 60.0 * t;
    } else if (K.lower_finite() && !K.upper_finite()) {
      s = K.lo + std::pow(10.0, -6.0 + 12.0 * t);
    } else if (!K.lower_finite() && K.upper_finite()) {
      s = K.hi - std::pow(10.0, 6.0 - 12.0 * t);
    } else {
      s = (K.lo + margin) + (K.hi - K.lo - 2.0 * margin) * t;
    }
    g[static_cast<std::size_t>(i)] = s;
  }
  return g;
}

FeasibilityReport check_feasibility(const PsoInstance& inst, const Interval& K, std::span<const double> s_grid,
                                    std::span<const FeasibilityProbe> probes) {
  if (s_grid.size() < 100) throw std::invalid_argument("feasibility grid needs at least 100 points");
  for (std::size_t i = 1; i < s_grid.size(); ++i)
    if (!(s_grid[i] > s_grid[i - 1])) throw std::invalid_argument("feasibility grid must be strictly sorted");

  FeasibilityReport report;
  Recorder inside(report.violations);
  for (const auto& probe : probes) check_inside(inst, s_grid, probe, inside);
  report.feasible_on_K = inside.count() == 0;

  std::vector<FeasibilityViolation> outside_list;
  Recorder outside(outside_list);
  for (const auto& probe : probes) check_outside(inst, K, probe, outside);
  report.needs_range_restriction = report.feasible_on_K && outside.count() > 0;
  for (auto& v : outside_list) {
    if (report.violations.size() >= kMaxViolations) break;
    report.violations.push_back(std::move(v));
  }
  return report;
}

FeasibilityReport check_feasibility(const PsoInstance& inst) {
  const auto grid = default_grid(inst.interval);
  const FeasibilityProbe probe{{0.0}, AuxInfo{}};
  return check_feasibility(inst, inst.interval, grid, std::span<const FeasibilityProbe>(&probe, 1));
}

}  // namespace pso
