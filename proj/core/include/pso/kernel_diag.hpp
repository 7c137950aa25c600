#pragma once

#include "pso/pso_instances.hpp"
#include "pso/surface_model.hpp"
#include "pso/trainer.hpp"

#include <vector>

namespace pso {

enum class KernelKind { raw, relative, cosine };

struct KernelPair {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double distance = 0.0;
  double similarity = 0.0;
};

struct KernelScan {
  KernelKind kind = KernelKind::raw;
  std::vector<KernelPair> pairs;
};

// g(X, X') = grad f(X) . grad f(X')
double grad_similarity(const Model& model, std::span<const double> x, std::span<const double> x2);
Eigen::MatrixXd gramian(const Model& model, const Matrix& points);
// g(X, X') / g(X, X)
double relative_kernel(const Model& model, std::span<const double> x, std::span<const double> x2);
double cosine_similarity(const Model& model, std::span<const double> x, std::span<const double> x2);

// Same quantities from a precomputed Gramian.
double relative_from_gramian(const Eigen::MatrixXd& G, Eigen::Index i, Eigen::Index j);
double cosine_from_gramian(const Eigen::MatrixXd& G, Eigen::Index i, Eigen::Index j);

// All unordered pairs (i <= j), self pairs included, ordered by (i, j).
KernelScan pair_scan(const Model& model, const Matrix& points, KernelKind kind);

struct DifferentialRecord {
  Eigen::Index probe = 0;
  double delta = 0.0;
  double df_real = 0.0;
  double df_approx = 0.0;
  double ratio = 0.0;
  bool degenerate = false;
};

// One plain gradient step theta - delta * dtheta per delta.
std::vector<DifferentialRecord> differential_check(const Model& model, const PsoInstance& inst, const Matrix& up,
                                                   const Matrix& down, const AuxEvaluator& aux, const Matrix& probes,
                                                   const std::vector<double>& deltas);

// -delta * [ -(1/N^U) sum M^U g(X, X^U_i) + (1/N^D) sum M^D g(X, X^D_i) ] for every probe.
Vector differential_via_kernel(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                               const AuxEvaluator& aux, const Matrix& probes, double delta);

std::string to_string(KernelKind k);

}  // namespace pso
