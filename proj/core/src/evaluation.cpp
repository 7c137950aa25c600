#include "pso/evaluation.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pso {

namespace {

Vector evaluate_log(const LogDensityFn& fn, const Matrix& X) {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out[i] = fn(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())));
  return out;
}

void same_size(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0) throw std::invalid_argument("metric inputs must be nonempty and equal length");
}

}  // namespace

HeightFn height_fn(const Model& model) {
  return [&model](const Matrix& X) { return model.heights(X); };
}

double psqr(const Vector& heights, const Vector& true_log) {
  same_size(heights, true_log);
  return (true_log.array().exp() - heights.array().exp()).square().mean();
}

double psqr(const HeightFn& model, const LogDensityFn& true_log_pdf, const Matrix& test_points) {
  return psqr(model(test_points), evaluate_log(true_log_pdf, test_points));
}

double lsqr(const Vector& heights, const Vector& true_log) {
  same_size(heights, true_log);
  return (true_log - heights).array().square().mean();
}

double lsqr(const HeightFn& model, const LogDensityFn& true_log_pdf, const Matrix& test_points) {
  return lsqr(model(test_points), evaluate_log(true_log_pdf, test_points));
}

double is_error(const Vector& up_heights, const Vector& down_heights, const Vector& down_log_q) {
  same_size(down_heights, down_log_q);
  if (up_heights.size() == 0) throw std::invalid_argument("is_error needs up points");
  return -up_heights.mean() + (down_heights - down_log_q).array().exp().mean();
}

double is_error(const HeightFn& model, const Matrix& up_test, const Matrix& down_test, const LogDensityFn& down_log_pdf) {
  return is_error(model(up_test), model(down_test), evaluate_log(down_log_pdf, down_test));
}

TotalIntegral total_integral(const HeightFn& model, const Distribution& down, long n, CounterRng& rng) {
  if (n < 1) throw std::invalid_argument("total_integral needs at least one sample");
  constexpr long kChunk = 8192;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long done = 0; done < n;) {
    const long c = std::min(kChunk, n - done);
    const Matrix X = down.sample(rng, c);
    const Vector f = model(X);
    const Vector lq = down.log_pdf(X);
    for (Eigen::Index i = 0; i < c; ++i) {
      const double w = std::exp(f[i] - lq[i]);
      sum += w;
      sum_sq += w * w;
    }
    done += c;
  }
  const double N = static_cast<double>(n);
  TotalIntegral t;
  t.value = sum / N;
  const double var = n > 1 ? std::max(0.0, (sum_sq - N * t.value * t.value) / (N - 1.0)) : 0.0;
  t.std_error = std::sqrt(var / N);
  return t;
}

LogDensityFn pdf_proxy(const HeightFn& model, const LogDensityFn& down_log_pdf) {
  return [model, down_log_pdf](std::span<const double> x) {
    if (down_log_pdf(x) == -std::numeric_limits<double>::infinity()) return 0.0;
    const Matrix X = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
    const double f = model(X)[0];
    return f < 0.0 ? 0.0 : f;
  };
}

UncertaintyMetrics uncertainty_metrics(const Eigen::MatrixXd& G) {
  if (G.rows() != G.cols() || G.rows() == 0) throw std::invalid_argument("gramian must be square and nonempty");
  UncertaintyMetrics out;
  out.c1 = G.diagonal().cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    out.c2_error = "gramian is not positive definite";
    return out;
  }
  const Vector ldiag = Eigen::MatrixXd(llt.matrixL()).diagonal();
  if (ldiag.minCoeff() * ldiag.minCoeff() < 1e-14 * G.diagonal().maxCoeff()) {
    out.c2_error = "gramian is numerically singular";
    return out;
  }
  const Eigen::Index m = G.rows();
  Vector c2(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector x = llt.solve(Vector::Unit(m, i));
    c2[i] = x[i];
  }
  if (!all_finite(c2)) {
    out.c2_error = "gramian solve produced non-finite values";
    return out;
  }
  out.c2 = std::move(c2);
  return out;
}

double mi_estimate(const HeightFn& log_ratio_model, const Matrix& joint_pairs) {
  if (joint_pairs.rows() == 0) throw std::invalid_argument("mi_estimate needs pairs");
  return log_ratio_model(joint_pairs).mean();
}

}  // namespace pso
