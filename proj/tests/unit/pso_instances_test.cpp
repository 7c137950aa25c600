#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pso;

namespace {

const std::vector<double> kX{0.3};

AuxInfo aux_q(double log_q) {
  AuxInfo a;
  a.log_q = log_q;
  return a;
}

InstanceParams params_for(const std::string& name) {
  if (name == "pso_lde" || name == "cond_pso_lde") return {{"alpha", 0.5}};
  if (name == "power_div") return {{"alpha", 2.0}};
  if (name == "root_density") return {{"d", 2.0}};
  if (name == "ebgan") return {{"m", 1.0}};
  return {};
}

// Points strictly inside K, spread over a few orders of magnitude.
std::vector<double> interior_points(const Interval& K) {
  std::vector<double> out;
  for (double s : default_grid(K, 41, 1e-3)) out.push_back(s);
  return out;
}

}  // namespace

TEST(PsoLde, AlphaOneAtZeroIsOneHalf) {
  const auto p = make_pso_lde(1.0);
  EXPECT_DOUBLE_EQ(p.up(kX, 0.0, aux_q(0.0)), 0.5);
  EXPECT_DOUBLE_EQ(p.down(kX, 0.0, aux_q(0.0)), 0.5);
}

TEST(PsoLde, QuarterAlphaAtBalanceIsTwoToMinusFour) {
  const auto p = make_pso_lde(0.25);
  EXPECT_NEAR(p.up(kX, -1.3, aux_q(-1.3)), 0.0625, 1e-15);
  EXPECT_NEAR(p.down(kX, 2.0, aux_q(2.0)), 0.0625, 1e-15);
}

TEST(PsoLde, LargeLogDifferenceMatchesExtendedPrecision) {
  const auto p = make_pso_lde(0.25);
  // Closed forms (e^{a d} + 1)^{-1/a} and (e^{-a d} + 1)^{-1/a} in long double.
  const long double a = 0.25L;
  const long double d = 40.0L;
  const long double up = std::pow(std::exp(a * d) + 1.0L, -1.0L / a);
  const long double down = std::pow(std::exp(-a * d) + 1.0L, -1.0L / a);
  const double mu = p.up(kX, 40.0, aux_q(0.0));
  const double md = p.down(kX, 40.0, aux_q(0.0));
  EXPECT_NEAR(mu / static_cast<double>(up), 1.0, 1e-12);
  EXPECT_NEAR(md, static_cast<double>(down), 1e-15);
  EXPECT_NEAR(mu, 4.25e-18, 0.01e-18);
  // 1 - (1 + e^{-10})^{-4} = 4 e^{-10} + O(e^{-20})
  EXPECT_NEAR(1.0 - md, 4.0 * std::exp(-10.0), 1e-7);
}

TEST(PsoLde, StaysFiniteAndBoundedAtExtremes) {
  for (double alpha : {1e-3, 0.25, 1.0, 50.0}) {
    const auto p = make_pso_lde(alpha);
    for (double d : {-1e6, -700.0, -1.0, 0.0, 1.0, 700.0, 1e6}) {
      const double u = p.up(kX, d, aux_q(0.0));
      const double w = p.down(kX, d, aux_q(0.0));
      EXPECT_TRUE(std::isfinite(u) && std::isfinite(w)) << alpha << " " << d;
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
    EXPECT_NEAR(p.up(kX, 0.0, aux_q(0.0)), std::pow(2.0, -1.0 / alpha), 1e-15);
  }
}

TEST(PsoLde, RejectsNonPositiveAlpha) {
  EXPECT_THROW(make_pso_lde(0.0), RegistryError);
  EXPECT_THROW(make_pso_lde(-1.0), RegistryError);
  EXPECT_THROW(make_named("pso_lde", {}), RegistryError);
}

TEST(PsoMax, ValuesAndRatio) {
  const auto p = make_pso_max();
  EXPECT_EQ(p.up(kX, 0.0, aux_q(0.0)), 1.0);
  EXPECT_EQ(p.down(kX, 0.0, aux_q(0.0)), 1.0);
  EXPECT_NEAR(p.up(kX, 2.0, aux_q(0.0)), 0.1353352832366127, 1e-15);
  EXPECT_EQ(p.down(kX, 2.0, aux_q(0.0)), 1.0);
  for (double d : {-5.0, -0.3, 0.0, 0.7, 9.0}) EXPECT_NEAR(p.ratio(kX, d + 1.0, aux_q(1.0)) / std::exp(d), 1.0, 1e-13);
}

TEST(DeepPdf, MagnitudesAndTarget) {
  const auto p = make_deeppdf();
  EXPECT_NEAR(p.up(kX, 0.3, aux_q(std::log(0.5))), 0.5, 1e-15);
  EXPECT_NEAR(p.down(kX, 0.3, aux_q(std::log(0.5))), 0.3, 1e-15);
  EXPECT_NEAR((*p.convergence)(kX, 4.0, aux_q(std::log(0.5))), 2.0, 1e-14);
}

TEST(Registry, TabulatedValues) {
  const auto ulsif = make_named("ulsif");
  EXPECT_EQ(ulsif.up(kX, 2.0, aux_q(0.0)), 1.0);
  EXPECT_EQ(ulsif.down(kX, 2.0, aux_q(0.0)), 2.0);
  const auto logistic = make_named("logistic");
  EXPECT_DOUBLE_EQ(logistic.up(kX, 0.0, aux_q(0.0)), 0.5);
  EXPECT_DOUBLE_EQ(logistic.down(kX, 0.0, aux_q(0.0)), 0.5);
  const auto is = make_named("is");
  EXPECT_EQ(is.up(kX, -2.0, aux_q(-2.0)), 1.0);
  EXPECT_EQ(is.down(kX, -2.0, aux_q(-2.0)), 1.0);
}

TEST(Registry, EveryNameConstructs) {
  for (const auto& name : registry_names()) {
    EXPECT_NO_THROW(make_named(name, params_for(name))) << name;
  }
}

TEST(Registry, UnknownNameAndBadParameters) {
  EXPECT_THROW(make_named("no_such_instance"), RegistryError);
  EXPECT_THROW(make_named("power_div", {{"alpha", -1.0}}), RegistryError);
  EXPECT_THROW(make_named("root_density", {{"d", 0.0}}), RegistryError);
  EXPECT_THROW(make_named("lsgan", {{"a", 1.0}, {"b", 1.0}}), RegistryError);
  EXPECT_THROW(make_named("ebgan"), RegistryError);
}

TEST(Registry, RatioInvertsConvergenceMap) {
  const double log_q = -0.7;
  for (const auto& name : registry_names()) {
    const auto p = make_named(name, params_for(name));
    if (!p.convergence) continue;
    for (int k = 0; k <= 40; ++k) {
      const double z = std::pow(10.0, -2.0 + 4.0 * k / 40.0);
      const double s = (*p.convergence)(kX, z, aux_q(log_q));
      if (!p.interval.contains(s)) continue;
      const double r = p.ratio(kX, s, aux_q(log_q));
      EXPECT_NEAR(r / z, 1.0, 1e-8) << name << " z=" << z;
    }
  }
}

TEST(Registry, PrimitivesDifferentiateToMagnitudes) {
  const double log_q = 0.4;
  for (const auto& name : registry_names()) {
    const auto p = make_named(name, params_for(name));
    if (!p.primitives) continue;
    for (double s : interior_points(p.interval)) {
      if (name == "ebgan" && std::abs(s - 1.0) < 1e-3) continue;  // kink at m
      double h = 1e-6 * std::max(1.0, std::abs(s));
      if (s != 0.0) h = std::min(h, 1e-3 * std::abs(s));
      if (!p.interval.contains(s - h) || !p.interval.contains(s + h)) continue;
      const auto& P = *p.primitives;
      const double du = (P.up(kX, s + h, aux_q(log_q)) - P.up(kX, s - h, aux_q(log_q))) / (2 * h);
      const double dd = (P.down(kX, s + h, aux_q(log_q)) - P.down(kX, s - h, aux_q(log_q))) / (2 * h);
      const double mu = p.up(kX, s, aux_q(log_q));
      const double md = p.down(kX, s, aux_q(log_q));
      if (!std::isfinite(mu) || !std::isfinite(md) || std::abs(mu) > 1e8 || std::abs(md) > 1e8) continue;
      EXPECT_NEAR(du, mu, 1e-5 * std::max(1.0, std::abs(mu))) << name << " s=" << s;
      EXPECT_NEAR(dd, md, 1e-5 * std::max(1.0, std::abs(md))) << name << " s=" << s;
    }
  }
}

TEST(WrapBounded, Values) {
  const auto b = wrap_bounded(make_named("ulsif"));
  EXPECT_DOUBLE_EQ(b.up(kX, 2.0, aux_q(0.0)), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.down(kX, 2.0, aux_q(0.0)), 2.0 / 3.0);
  const auto l = wrap_bounded(make_named("log_density_ratio"));
  EXPECT_DOUBLE_EQ(l.up(kX, 0.0, aux_q(0.0)), 0.5);
  EXPECT_DOUBLE_EQ(l.down(kX, 0.0, aux_q(0.0)), 0.5);
}

TEST(WrapBounded, PreservesRatioSignAndZeros) {
  CounterRng rng(4);
  for (const char* name : {"is", "polynomial", "square", "kliep", "ebgan"}) {
    const auto p = make_named(name, params_for(name));
    const auto b = wrap_bounded(p);
    for (int i = 0; i < 20; ++i) {
      const auto pts = interior_points(p.interval);
      const double s = pts[rng() % pts.size()];
      const AuxInfo a = aux_q(rng.normal());
      const double u = p.up(kX, s, a), d = p.down(kX, s, a);
      const double bu = b.up(kX, s, a), bd = b.down(kX, s, a);
      EXPECT_LE(std::abs(bu), 1.0);
      EXPECT_LE(std::abs(bd), 1.0);
      EXPECT_EQ(std::signbit(u), std::signbit(bu));
      EXPECT_EQ(std::signbit(d), std::signbit(bd));
      EXPECT_EQ(u == 0.0, bu == 0.0);
      if (u != 0.0) {
        EXPECT_NEAR(bd / bu, d / u, 1e-12 * std::max(1.0, std::abs(d / u)));
      }
    }
  }
}

TEST(WrapThreshold, CutAndReverse) {
  const auto base = make_named("is");
  const auto cut = wrap_cut_at(base, 1.0, Side::above, Force::down);
  EXPECT_EQ(cut.down(kX, 0.5, aux_q(0.0)), base.down(kX, 0.5, aux_q(0.0)));
  EXPECT_EQ(cut.down(kX, 1.5, aux_q(0.0)), 0.0);
  EXPECT_EQ(cut.up(kX, 1.5, aux_q(0.0)), base.up(kX, 1.5, aux_q(0.0)));

  const auto rev = wrap_reverse_at(base, -2.0, Side::below, Force::up);
  EXPECT_EQ(rev.up(kX, -3.0, aux_q(0.0)), -base.up(kX, -3.0, aux_q(0.0)));
  EXPECT_EQ(rev.up(kX, -1.0, aux_q(0.0)), base.up(kX, -1.0, aux_q(0.0)));

  // Wrapping twice leaves the unaffected region alone.
  const auto twice = wrap_cut_at(cut, 1.0, Side::above, Force::down);
  EXPECT_EQ(twice.down(kX, 0.2, aux_q(0.0)), base.down(kX, 0.2, aux_q(0.0)));
  EXPECT_EQ(twice.down(kX, 3.0, aux_q(0.0)), 0.0);
  EXPECT_THROW(wrap_cut_at(base, std::nan(""), Side::above, Force::up), RegistryError);
}

TEST(Feasibility, Classification) {
  for (const auto& inst : {make_pso_lde(0.25), make_pso_lde(1.0), make_pso_max(), make_named("square"),
                           make_named("logistic"), make_named("ulsif")}) {
    const auto r = check_feasibility(inst);
    EXPECT_TRUE(r.feasible_on_K) << inst.name << (r.violations.empty() ? "" : " " + r.violations[0].condition);
    EXPECT_FALSE(r.needs_range_restriction) << inst.name;
  }
  const auto gan = check_feasibility(make_named("gan_critic"));
  EXPECT_TRUE(gan.feasible_on_K);
  EXPECT_TRUE(gan.needs_range_restriction);
  EXPECT_FALSE(gan.violations.empty());

  const auto unit = check_feasibility(make_named("unit"));
  EXPECT_FALSE(unit.feasible_on_K);
  EXPECT_FALSE(unit.violations.empty());
}

TEST(Feasibility, EvaluationFailureIsAViolation) {
  PsoInstance bad = make_named("ulsif");
  bad.mag_down = [](std::span<const double>, double s, const AuxInfo&) -> double {
    if (s > 5.0) throw std::runtime_error("boom");
    return s;
  };
  const auto r = check_feasibility(bad);
  EXPECT_FALSE(r.feasible_on_K);
}

TEST(Feasibility, DefaultGridStaysInsideK) {
  for (const Interval& K : {Interval{}, Interval{0.0, 1.0}, Interval{-1.0, 1.0}, Interval{0.0},
                            Interval{-std::numeric_limits<double>::infinity(), 0.0}}) {
    const auto g = default_grid(K);
    ASSERT_GE(g.size(), 100u);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_TRUE(K.contains(g[i]));
      if (i) EXPECT_LT(g[i - 1], g[i]);
    }
  }
}
