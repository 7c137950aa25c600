#include "pso/pso_instances.hpp"

#include <cmath>
#include <numbers>

namespace pso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Most magnitudes depend only on (s, log_q).
template <class F>
MagnitudeFn mag(F f) {
  return [f](std::span<const double>, double s, const AuxInfo& aux) { return f(s, aux.log_q); };
}

template <class F>
ConvergenceFn conv(F f) {
  return [f](std::span<const double>, double z, const AuxInfo& aux) { return f(z, aux.log_q); };
}

PsoInstance base(std::string name, MagnitudeFn up, MagnitudeFn down, Interval K) {
  PsoInstance p;
  p.name = std::move(name);
  p.mag_up = std::move(up);
  p.mag_down = std::move(down);
  p.interval = K;
  return p;
}

void with_primitives(PsoInstance& p, MagnitudeFn up, MagnitudeFn down) {
  p.primitives = Primitives{std::move(up), std::move(down)};
}

const Interval kReal{-kInf, kInf};
const Interval kPositive{0.0, kInf};
const Interval kNegative{-kInf, 0.0};
const Interval kUnit{0.0, 1.0};
const Interval kSymmetricUnit{-1.0, 1.0};

ConvergenceFn log_density_target() {
  return conv([](double z, double lq) { return lq + std::log(z); });
}

ConvergenceFn identity_target() {
  return conv([](double z, double) { return z; });
}

double param(const InstanceParams& params, const std::string& key, double fallback, const std::string& name) {
  auto it = params.find(key);
  if (it == params.end()) {
    if (std::isnan(fallback)) throw RegistryError(name + " requires parameter '" + key + "'");
    return fallback;
  }
  if (!std::isfinite(it->second)) throw RegistryError(name + " parameter '" + key + "' must be finite");
  return it->second;
}

PsoInstance make_is() {
  auto p = base("is", mag([](double, double) { return 1.0; }), mag([](double s, double lq) { return std::exp(s - lq); }),
                kReal);
  p.convergence = log_density_target();
  with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double lq) { return std::exp(s - lq); }));
  return p;
}

PsoInstance make_gan_critic() {
  auto p = base("gan_critic", mag([](double s, double) { return 1.0 / s; }),
                mag([](double s, double) { return 1.0 / (1.0 - s); }), kUnit);
  p.convergence = conv([](double z, double) { return z / (z + 1.0); });
  with_primitives(p, mag([](double s, double) { return std::log(s); }),
                  mag([](double s, double) { return -std::log(1.0 - s); }));
  return p;
}

PsoInstance make_logistic() {
  auto p = base("logistic", mag([](double s, double) { return 1.0 / (std::exp(s) + 1.0); }),
                mag([](double s, double) { return 1.0 / (std::exp(-s) + 1.0); }), kReal);
  p.convergence = conv([](double z, double) { return std::log(z); });
  with_primitives(p, mag([](double s, double) { return -softplus(-s); }), mag([](double s, double) { return softplus(s); }));
  return p;
}

PsoInstance renamed(PsoInstance p, std::string name) {
  p.name = std::move(name);
  return p;
}

}  // namespace

PsoInstance make_pso_lde(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw RegistryError("pso_lde requires alpha > 0");
  auto p = base(
      "pso_lde", mag([alpha](double s, double lq) { return std::exp(-softplus(alpha * (s - lq)) / alpha); }),
      mag([alpha](double s, double lq) { return std::exp(-softplus(-alpha * (s - lq)) / alpha); }), kReal);
  p.convergence = log_density_target();
  if (alpha == 1.0) {
    // NCE loss: E_U log((e^f + P_D)/e^f) + E_D log((e^f + P_D)/P_D)
    with_primitives(p, mag([](double s, double lq) { return -softplus(lq - s); }),
                    mag([](double s, double lq) { return softplus(s - lq); }));
  }
  return p;
}

PsoInstance make_pso_max() {
  auto p = base("pso_max", mag([](double s, double lq) { return std::exp(-std::max(s - lq, 0.0)); }),
                mag([](double s, double lq) { return std::exp(std::min(s - lq, 0.0)); }), kReal);
  p.convergence = log_density_target();
  return p;
}

PsoInstance make_deeppdf() {
  auto p = base("deeppdf", mag([](double, double lq) { return std::exp(lq); }), mag([](double s, double) { return s; }),
                kPositive);
  p.convergence = conv([](double z, double lq) { return std::exp(lq) * z; });
  with_primitives(p, mag([](double s, double lq) { return std::exp(lq) * s; }),
                  mag([](double s, double) { return 0.5 * s * s; }));
  return p;
}

std::vector<std::string> registry_names() {
  return {"pso_lde",        "pso_max",         "deeppdf",       "is",
          "polynomial",     "inverse_polynomial", "inverse_is", "root_density",
          "log_variant_1",  "log_variant_2",   "log_variant_3", "log_variant_4",
          "log_variant_5",  "unit",            "ulsif",         "kliep",
          "gan_critic",     "gan_critic_log",  "ndmr",          "ndmlr",
          "power_div",      "reversed_kl",     "balanced_ratio", "log_density_ratio",
          "square",         "logistic",        "exponential",   "lsgan",
          "kl_div",         "reverse_kl_div",  "lipschitz",     "ldar",
          "ldtr",           "ebgan",           "cond_density",  "cond_log_density",
          "cond_nce",       "cond_pso_lde",    "cond_gan_critic", "cond_logistic"};
}

PsoInstance make_named(const std::string& name, const InstanceParams& params) {
  constexpr double kRequired = std::numeric_limits<double>::quiet_NaN();

  if (name == "pso_lde") return make_pso_lde(param(params, "alpha", kRequired, name));
  if (name == "pso_max") return make_pso_max();
  if (name == "deeppdf") return make_deeppdf();
  if (name == "is") return make_is();

  if (name == "polynomial") {
    auto p = base(name, mag([](double s, double lq) { return std::exp(s - lq); }),
                  mag([](double s, double lq) { return std::exp(2.0 * (s - lq)); }), kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return std::exp(s - lq); }),
                    mag([](double s, double lq) { return 0.5 * std::exp(2.0 * (s - lq)); }));
    return p;
  }
  if (name == "inverse_polynomial") {
    auto p = base(name, mag([](double s, double lq) { return std::exp(-2.0 * (s - lq)); }),
                  mag([](double s, double lq) { return std::exp(-(s - lq)); }), kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return -0.5 * std::exp(-2.0 * (s - lq)); }),
                    mag([](double s, double lq) { return -std::exp(-(s - lq)); }));
    return p;
  }
  if (name == "inverse_is" || name == "log_variant_3") {
    auto p = base(name, mag([](double s, double lq) { return std::exp(lq - s); }), mag([](double, double) { return 1.0; }),
                  kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return -std::exp(lq - s); }), mag([](double s, double) { return s; }));
    return p;
  }
  if (name == "root_density") {
    const double d = param(params, "d", kRequired, name);
    if (!(d > 0.0)) throw RegistryError("root_density requires d > 0");
    auto p = base(name, mag([](double, double lq) { return std::exp(lq); }),
                  mag([d](double s, double) { return std::copysign(std::pow(std::abs(s), d), s); }), kPositive);
    p.convergence = conv([d](double z, double lq) { return std::pow(std::exp(lq) * z, 1.0 / d); });
    with_primitives(p, mag([](double s, double lq) { return std::exp(lq) * s; }),
                    mag([d](double s, double) { return std::pow(std::abs(s), d + 1.0) / (d + 1.0); }));
    return p;
  }
  if (name == "log_variant_1") {
    auto p = base(name, mag([](double, double lq) { return std::exp(lq); }), mag([](double s, double) { return std::exp(s); }),
                  kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return std::exp(lq) * s; }),
                    mag([](double s, double) { return std::exp(s); }));
    return p;
  }
  if (name == "log_variant_2") return renamed(make_is(), name);
  if (name == "log_variant_4") {
    auto p = base(name, mag([](double s, double lq) { return std::exp(0.5 * (lq - s)); }),
                  mag([](double s, double lq) { return std::exp(0.5 * (s - lq)); }), kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return -2.0 * std::exp(0.5 * (lq - s)); }),
                    mag([](double s, double lq) { return 2.0 * std::exp(0.5 * (s - lq)); }));
    return p;
  }
  if (name == "log_variant_5") {
    auto p = base(name, mag([](double s, double lq) { return std::exp(lq + s); }),
                  mag([](double s, double) { return std::exp(2.0 * s); }), kReal);
    p.convergence = log_density_target();
    with_primitives(p, mag([](double s, double lq) { return std::exp(lq + s); }),
                    mag([](double s, double) { return 0.5 * std::exp(2.0 * s); }));
    return p;
  }

  if (name == "unit") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double, double) { return 1.0; }), kReal);
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return s; }));
    return p;
  }
  if (name == "ulsif") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return s; }), kPositive);
    p.convergence = identity_target();
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return 0.5 * s * s; }));
    return p;
  }
  if (name == "kliep") {
    auto p = base(name, mag([](double s, double) { return 1.0 / s; }), mag([](double, double) { return 1.0; }), kPositive);
    p.convergence = identity_target();
    with_primitives(p, mag([](double s, double) { return std::log(s); }), mag([](double s, double) { return s - 1.0; }));
    return p;
  }
  if (name == "gan_critic" || name == "cond_gan_critic") return renamed(make_gan_critic(), name);
  if (name == "gan_critic_log") {
    // The tabulated loss does not differentiate to these magnitudes, so no primitives are attached.
    auto p = base(name, mag([](double s, double) { return std::exp(-s); }),
                  mag([](double s, double) { return 1.0 / (1.0 - std::exp(s)); }), kNegative);
    p.convergence = conv([](double z, double) { return std::log(z / (1.0 + z)); });
    return p;
  }
  if (name == "ndmr") {
    // Down samples come from the mixture (P_U + P_D)/2; z is the ratio against that mixture.
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return 2.0 * s; }), kUnit);
    p.convergence = conv([](double z, double) { return 0.5 * z; });
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return s * s; }));
    return p;
  }
  if (name == "ndmlr") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return 2.0 * std::exp(s); }),
                  kNegative);
    p.convergence = conv([](double z, double) { return std::log(0.5 * z); });
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return 2.0 * std::exp(s); }));
    return p;
  }
  if (name == "power_div") {
    const double a = param(params, "alpha", kRequired, name);
    if (a == 0.0 || a == -1.0) throw RegistryError("power_div alpha must differ from 0 and -1");
    auto p = base(name, mag([a](double s, double) { return std::pow(s, a - 1.0); }),
                  mag([a](double s, double) { return std::pow(s, a); }), kPositive);
    p.convergence = identity_target();
    with_primitives(p, mag([a](double s, double) { return std::pow(s, a) / a; }),
                    mag([a](double s, double) { return std::pow(s, a + 1.0) / (a + 1.0); }));
    return p;
  }
  if (name == "reversed_kl") {
    auto p = base(name, mag([](double s, double) { return 1.0 / (s * s); }), mag([](double s, double) { return 1.0 / s; }),
                  kPositive);
    p.convergence = identity_target();
    with_primitives(p, mag([](double s, double) { return -1.0 / s; }), mag([](double s, double) { return std::log(s); }));
    return p;
  }
  if (name == "balanced_ratio") {
    auto p = base(name, mag([](double s, double) { return 1.0 / (s + 1.0); }),
                  mag([](double s, double) { return s / (s + 1.0); }), kPositive);
    p.convergence = identity_target();
    with_primitives(p, mag([](double s, double) { return std::log(s + 1.0); }),
                    mag([](double s, double) { return s - std::log(s + 1.0); }));
    return p;
  }
  if (name == "log_density_ratio") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return std::exp(s); }), kReal);
    p.convergence = conv([](double z, double) { return std::log(z); });
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return std::exp(s); }));
    return p;
  }
  if (name == "square") {
    auto p = base(name, mag([](double s, double) { return 1.0 - s; }), mag([](double s, double) { return 1.0 + s; }),
                  kSymmetricUnit);
    p.convergence = conv([](double z, double) { return (z - 1.0) / (z + 1.0); });
    with_primitives(p, mag([](double s, double) { return -0.5 * (1.0 - s) * (1.0 - s); }),
                    mag([](double s, double) { return 0.5 * (1.0 + s) * (1.0 + s); }));
    return p;
  }
  if (name == "logistic" || name == "cond_logistic") return renamed(make_logistic(), name);
  if (name == "exponential") {
    auto p = base(name, mag([](double s, double) { return std::exp(-s); }), mag([](double s, double) { return std::exp(s); }),
                  kReal);
    p.convergence = conv([](double z, double) { return 0.5 * std::log(z); });
    with_primitives(p, mag([](double s, double) { return -std::exp(-s); }), mag([](double s, double) { return std::exp(s); }));
    return p;
  }
  if (name == "lsgan") {
    const double a = param(params, "a", 0.0, name);
    const double b = param(params, "b", 1.0, name);
    if (a == b) throw RegistryError("lsgan requires a != b");
    auto p = base(name, mag([b](double s, double) { return b - s; }), mag([a](double s, double) { return s - a; }),
                  Interval{std::min(a, b), std::max(a, b)});
    p.convergence = conv([a, b](double z, double) { return (b * z + a) / (z + 1.0); });
    with_primitives(p, mag([b](double s, double) { return -0.5 * (s - b) * (s - b); }),
                    mag([a](double s, double) { return 0.5 * (s - a) * (s - a); }));
    return p;
  }
  if (name == "kl_div") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return std::exp(s - 1.0); }),
                  kReal);
    p.convergence = conv([](double z, double) { return 1.0 + std::log(z); });
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return std::exp(s - 1.0); }));
    return p;
  }
  if (name == "reverse_kl_div") {
    auto p = base(name, mag([](double, double) { return 1.0; }), mag([](double s, double) { return -1.0 / s; }),
                  kNegative);
    p.convergence = conv([](double z, double) { return -1.0 / z; });
    with_primitives(p, mag([](double s, double) { return s; }), mag([](double s, double) { return -1.0 - std::log(-s); }));
    return p;
  }
  if (name == "lipschitz") {
    auto p = base(name, mag([](double s, double) { return 1.0 - s / std::sqrt(s * s + 1.0); }),
                  mag([](double s, double) { return 1.0 + s / std::sqrt(s * s + 1.0); }), kReal);
    p.convergence = conv([](double z, double) { return 0.5 * (z - 1.0) / std::sqrt(z); });
    with_primitives(p, mag([](double s, double) { return s - std::sqrt(s * s + 1.0); }),
                    mag([](double s, double) { return s + std::sqrt(s * s + 1.0); }));
    return p;
  }
  if (name == "ldar") {
    const double h = std::numbers::pi / 2.0;
    auto p = base(name, mag([](double s, double) { return 1.0 / (std::exp(std::tan(s)) + 1.0); }),
                  mag([](double s, double) { return 1.0 / (std::exp(-std::tan(s)) + 1.0); }), Interval{-h, h});
    p.convergence = conv([](double z, double) { return std::atan(std::log(z)); });
    return p;
  }
  if (name == "ldtr") {
    auto p = base(name, mag([](double s, double) { return std::sqrt(1.0 - s); }),
                  mag([](double s, double) { return std::sqrt(1.0 + s); }), kSymmetricUnit);
    p.convergence = conv([](double z, double) { return std::tanh(std::log(z)); });
    with_primitives(p, mag([](double s, double) { return -2.0 / 3.0 * std::pow(1.0 - s, 1.5); }),
                    mag([](double s, double) { return 2.0 / 3.0 * std::pow(1.0 + s, 1.5); }));
    return p;
  }
  if (name == "ebgan") {
    const double m = param(params, "m", kRequired, name);
    auto p = base(name, mag([](double, double) { return -1.0; }), mag([m](double s, double) { return s > m ? 0.0 : -1.0; }),
                  kReal);
    with_primitives(p, mag([](double s, double) { return -s; }), mag([m](double s, double) { return std::max(m - s, 0.0); }));
    return p;
  }

  if (name == "cond_density") return renamed(make_deeppdf(), name);
  if (name == "cond_log_density") return renamed(make_is(), name);
  if (name == "cond_nce") return renamed(make_pso_lde(1.0), name);
  if (name == "cond_pso_lde") return renamed(make_pso_lde(param(params, "alpha", kRequired, name)), name);

  throw RegistryError("unknown PSO instance '" + name + "'");
}

PsoInstance wrap_bounded(const PsoInstance& inst) {
  PsoInstance p = inst;
  p.name = "bounded(" + inst.name + ")";
  auto up = inst.mag_up;
  auto down = inst.mag_down;
  auto norm = [](double a, double b) {
    const double d = std::abs(a) + std::abs(b);
    return d > 0.0 ? d : 1.0;
  };
  p.mag_up = [up, down, norm](std::span<const double> x, double s, const AuxInfo& aux) {
    const double a = up(x, s, aux);
    return a / norm(a, down(x, s, aux));
  };
  p.mag_down = [up, down, norm](std::span<const double> x, double s, const AuxInfo& aux) {
    const double b = down(x, s, aux);
    return b / norm(up(x, s, aux), b);
  };
  p.primitives.reset();
  return p;
}

namespace {

PsoInstance wrap_threshold(const PsoInstance& inst, double threshold, Side side, Force force, double factor,
                           const char* label) {
  if (!std::isfinite(threshold)) throw RegistryError("threshold must be finite");
  PsoInstance p = inst;
  p.name = std::string(label) + "(" + inst.name + ")";
  MagnitudeFn& target = force == Force::up ? p.mag_up : p.mag_down;
  MagnitudeFn original = target;
  target = [original, threshold, side, factor](std::span<const double> x, double s, const AuxInfo& aux) {
    const bool crossed = side == Side::above ? s > threshold : s < threshold;
    if (crossed && factor == 0.0) return 0.0;
    const double m = original(x, s, aux);
    return crossed ? factor * m : m;
  };
  p.primitives.reset();
  return p;
}

}  // namespace

PsoInstance wrap_cut_at(const PsoInstance& inst, double threshold, Side side, Force force) {
  return wrap_threshold(inst, threshold, side, force, 0.0, "cut_at");
}

PsoInstance wrap_reverse_at(const PsoInstance& inst, double threshold, Side side, Force force) {
  return wrap_threshold(inst, threshold, side, force, -1.0, "reverse_at");
}

}  // namespace pso
