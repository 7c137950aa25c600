#pragma once

#include "pso/types.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pso {

struct AuxInfo {
  double log_q = 0.0;  // log P_D at the point
  std::map<std::string, double> extra;
};

using MagnitudeFn = std::function<double(std::span<const double> x, double s, const AuxInfo& aux)>;
using ConvergenceFn = std::function<double(std::span<const double> x, double z, const AuxInfo& aux)>;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double s) const { return s > lo && s < hi; }
  bool lower_finite() const { return lo > -std::numeric_limits<double>::infinity(); }
  bool upper_finite() const { return hi < std::numeric_limits<double>::infinity(); }
};

// Antiderivatives in s of M^U and M^D; loss = -E_U Mt^U + E_D Mt^D.
struct Primitives {
  MagnitudeFn up;
  MagnitudeFn down;
};

struct PsoInstance {
  std::string name;
  MagnitudeFn mag_up;
  MagnitudeFn mag_down;
  std::optional<ConvergenceFn> convergence;  // T(X, z)
  Interval interval;                         // K
  std::optional<Primitives> primitives;

  double up(std::span<const double> x, double s, const AuxInfo& aux) const { return mag_up(x, s, aux); }
  double down(std::span<const double> x, double s, const AuxInfo& aux) const { return mag_down(x, s, aux); }
  double ratio(std::span<const double> x, double s, const AuxInfo& aux) const {
    return mag_down(x, s, aux) / mag_up(x, s, aux);
  }
};

using InstanceParams = std::map<std::string, double>;

PsoInstance make_pso_lde(double alpha);
PsoInstance make_pso_max();
PsoInstance make_deeppdf();
// Throws RegistryError for unknown names or bad parameters.
PsoInstance make_named(const std::string& name, const InstanceParams& params = {});
std::vector<std::string> registry_names();

enum class Side { above, below };
enum class Force { up, down };

PsoInstance wrap_bounded(const PsoInstance& inst);
PsoInstance wrap_cut_at(const PsoInstance& inst, double threshold, Side side, Force force);
PsoInstance wrap_reverse_at(const PsoInstance& inst, double threshold, Side side, Force force);

struct FeasibilityViolation {
  std::string condition;
  double s = 0.0;
  std::vector<double> x;
};

struct FeasibilityReport {
  bool feasible_on_K = false;
  bool needs_range_restriction = false;
  std::vector<FeasibilityViolation> violations;
};

struct FeasibilityProbe {
  std::vector<double> x;
  AuxInfo aux;
};

// Sorted grid of `count` points strictly inside K, using `margin` at finite endpoints.
std::vector<double> default_grid(const Interval& K, int count = 401, double margin = 1e-9);

FeasibilityReport check_feasibility(const PsoInstance& inst, const Interval& K, std::span<const double> s_grid,
                                    std::span<const FeasibilityProbe> probes);

// Grid from default_grid and one probe at log_q = 0.
FeasibilityReport check_feasibility(const PsoInstance& inst);

}  // namespace pso
