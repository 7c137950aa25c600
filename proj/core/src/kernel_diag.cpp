#include "pso/kernel_diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pso {

namespace {

Matrix one_row(std::span<const double> x) {
  return Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
}

Vector grad_at(const Model& model, std::span<const double> x) { return model.gradient(one_row(x), Vector::Ones(1)); }

}  // namespace

double grad_similarity(const Model& model, std::span<const double> x, std::span<const double> x2) {
  return grad_at(model, x).dot(grad_at(model, x2));
}

Eigen::MatrixXd gramian(const Model& model, const Matrix& points) {
  const Matrix G = model.per_sample(points);
  Eigen::MatrixXd K = G * G.transpose();
  // Exact symmetry regardless of the GEMM summation order.
  K = 0.5 * (K + K.transpose()).eval();
  return K;
}

double relative_kernel(const Model& model, std::span<const double> x, std::span<const double> x2) {
  const Vector g = grad_at(model, x);
  const double self = g.squaredNorm();
  if (!(self > 0.0)) throw std::domain_error("relative kernel undefined where the gradient vanishes");
  return g.dot(grad_at(model, x2)) / self;
}

double cosine_similarity(const Model& model, std::span<const double> x, std::span<const double> x2) {
  const Vector a = grad_at(model, x);
  const Vector b = grad_at(model, x2);
  const double denom = a.norm() * b.norm();
  if (!(denom > 0.0)) throw std::domain_error("cosine similarity undefined for a zero gradient");
  return std::clamp(a.dot(b) / denom, -1.0, 1.0);
}

double relative_from_gramian(const Eigen::MatrixXd& G, Eigen::Index i, Eigen::Index j) {
  if (i == j) return 1.0;
  return G(i, j) / G(i, i);
}

double cosine_from_gramian(const Eigen::MatrixXd& G, Eigen::Index i, Eigen::Index j) {
  if (i == j) return 1.0;
  return std::clamp(G(i, j) / std::sqrt(G(i, i) * G(j, j)), -1.0, 1.0);
}

KernelScan pair_scan(const Model& model, const Matrix& points, KernelKind kind) {
  if (points.rows() < 2) throw std::invalid_argument("pair scan needs at least two points");
  const Eigen::MatrixXd G = gramian(model, points);
  KernelScan scan;
  scan.kind = kind;
  const Eigen::Index m = points.rows();
  scan.pairs.reserve(static_cast<std::size_t>(m * (m + 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      KernelPair p;
      p.i = i;
      p.j = j;
      p.distance = (points.row(i) - points.row(j)).norm();
      switch (kind) {
        case KernelKind::raw:
          p.similarity = G(i, j);
          break;
        case KernelKind::relative:
          p.similarity = relative_from_gramian(G, i, j);
          break;
        case KernelKind::cosine:
          p.similarity = cosine_from_gramian(G, i, j);
          break;
      }
      scan.pairs.push_back(p);
    }
  }
  return scan;
}

std::vector<DifferentialRecord> differential_check(const Model& model, const PsoInstance& inst, const Matrix& up,
                                                   const Matrix& down, const AuxEvaluator& aux, const Matrix& probes,
                                                   const std::vector<double>& deltas) {
  for (double d : deltas)
    if (!(d > 0.0)) throw std::invalid_argument("differential deltas must be positive");
  const Vector dtheta = pso_update_direction(model, inst, up, down, aux);
  const Vector f0 = model.heights(probes);
  const Matrix G = model.per_sample(probes);
  const Vector directional = G * dtheta;

  std::vector<DifferentialRecord> out;
  out.reserve(static_cast<std::size_t>(probes.rows()) * deltas.size());
  for (double delta : deltas) {
    Model stepped = model;
    stepped.theta.values -= delta * dtheta;
    const Vector f1 = stepped.heights(probes);
    for (Eigen::Index p = 0; p < probes.rows(); ++p) {
      DifferentialRecord r;
      r.probe = p;
      r.delta = delta;
      r.df_real = f1[p] - f0[p];
      r.df_approx = -delta * directional[p];
      r.degenerate = std::abs(r.df_real) < 1e-14;
      r.ratio = r.degenerate ? std::numeric_limits<double>::quiet_NaN()
                             : std::abs(r.df_real - r.df_approx) / std::abs(r.df_real);
      out.push_back(r);
    }
  }
  return out;
}

Vector differential_via_kernel(const Model& model, const PsoInstance& inst, const Matrix& up, const Matrix& down,
                               const AuxEvaluator& aux, const Matrix& probes, double delta) {
  const Vector fu = model.heights(up);
  const Vector fd = model.heights(down);
  Vector cu(up.rows());
  Vector cd(down.rows());
  for (Eigen::Index i = 0; i < up.rows(); ++i) {
    std::span<const double> x(up.row(i).data(), static_cast<std::size_t>(up.cols()));
    cu[i] = -inst.up(x, fu[i], aux(x)) / static_cast<double>(up.rows());
  }
  for (Eigen::Index i = 0; i < down.rows(); ++i) {
    std::span<const double> x(down.row(i).data(), static_cast<std::size_t>(down.cols()));
    cd[i] = inst.down(x, fd[i], aux(x)) / static_cast<double>(down.rows());
  }
  const Matrix Gp = model.per_sample(probes);
  const Matrix Gu = model.per_sample(up);
  const Matrix Gd = model.per_sample(down);
  const Vector sum = (Gp * Gu.transpose()) * cu + (Gp * Gd.transpose()) * cd;
  return -delta * sum;
}

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::raw:
      return "raw";
    case KernelKind::relative:
      return "relative";
    case KernelKind::cosine:
      return "cosine";
  }
  return "?";
}

}  // namespace pso
