#pragma once

#include "pso/distributions.hpp"
#include "pso/rng.hpp"
#include "pso/surface_model.hpp"

#include <functional>
#include <optional>
#include <string>

namespace pso {

using HeightFn = std::function<Vector(const Matrix&)>;

HeightFn height_fn(const Model& model);

double psqr(const Vector& heights, const Vector& true_log);
double psqr(const HeightFn& model, const LogDensityFn& true_log_pdf, const Matrix& test_points);

double lsqr(const Vector& heights, const Vector& true_log);
double lsqr(const HeightFn& model, const LogDensityFn& true_log_pdf, const Matrix& test_points);

// -mean f(X^U) + mean exp(f(X^D) - log P_D(X^D))
double is_error(const Vector& up_heights, const Vector& down_heights, const Vector& down_log_q);
double is_error(const HeightFn& model, const Matrix& up_test, const Matrix& down_test, const LogDensityFn& down_log_pdf);

struct TotalIntegral {
  double value = 0.0;
  double std_error = 0.0;
};

// (1/N) sum exp(f - log P_D) over N fresh down samples, processed in chunks.
TotalIntegral total_integral(const HeightFn& model, const Distribution& down, long n, CounterRng& rng);

// 0 where f < 0 or P_D = 0, f elsewhere.
LogDensityFn pdf_proxy(const HeightFn& model, const LogDensityFn& down_log_pdf);

struct UncertaintyMetrics {
  Vector c1;
  std::optional<Vector> c2;
  std::string c2_error;
};

UncertaintyMetrics uncertainty_metrics(const Eigen::MatrixXd& G);

double mi_estimate(const HeightFn& log_ratio_model, const Matrix& joint_pairs);

struct EvalReport {
  double psqr = 0.0;
  double lsqr = 0.0;
  double is_err = 0.0;
  double total_integral = 0.0;
  long n_test = 0;
};

}  // namespace pso
