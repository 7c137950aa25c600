#pragma once

#include "pso/rng.hpp"
#include "pso/surface_model.hpp"
#include "pso/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pso {

struct MixtureComponent {
  enum class Kind { uniform, gaussian };
  Kind kind = Kind::gaussian;
  double a = 0.0;  // uniform lower bound, or gaussian mean
  double b = 1.0;  // uniform upper bound, or gaussian std
  double weight = 1.0;

  static MixtureComponent uniform(double lo, double hi, double w) { return {Kind::uniform, lo, hi, w}; }
  static MixtureComponent gaussian(double mean, double sd, double w) { return {Kind::gaussian, mean, sd, w}; }
};

class Mixture1D {
 public:
  explicit Mixture1D(std::vector<MixtureComponent> components);

  double log_pdf(double x) const;
  double cdf(double x) const;
  double sample(CounterRng& rng) const;
  double mean() const;
  double variance() const;
  const std::vector<MixtureComponent>& components() const { return components_; }

 private:
  std::vector<MixtureComponent> components_;
  std::vector<double> log_weights_;
  std::vector<double> cumulative_;
};

Mixture1D columns_mixture();

// Everything needed to rebuild a distribution, for checkpoints.
struct DistributionDescriptor {
  enum class Kind : std::uint32_t { product_mixture = 1, transformed = 2, uniform_box = 3, diag_gaussian = 4 };
  Kind kind = Kind::uniform_box;
  std::uint32_t dim = 0;
  std::vector<double> params;
};

struct TransformSpec {
  Matrix A;
  Matrix A_inv;
  double log_abs_det = 0.0;
  double det = 0.0;
  double condition = 0.0;

  // Throws std::invalid_argument if |det A - 1| >= 1e-6.
  static TransformSpec from_matrix(const Matrix& A);
};

class Distribution {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual int dim() const = 0;
    virtual Matrix sample(CounterRng& rng, Eigen::Index count) const = 0;
    virtual double log_pdf(std::span<const double> x) const = 0;
    virtual bool exact() const { return true; }
    virtual DistributionDescriptor descriptor() const = 0;
    virtual std::string name() const = 0;
  };

  Distribution() = default;
  explicit Distribution(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  int dim() const { return impl_->dim(); }
  Matrix sample(CounterRng& rng, Eigen::Index count) const { return impl_->sample(rng, count); }
  double log_pdf(std::span<const double> x) const { return impl_->log_pdf(x); }
  Vector log_pdf(const Matrix& X) const;
  bool exact() const { return impl_->exact(); }
  DistributionDescriptor descriptor() const { return impl_->descriptor(); }
  std::string name() const { return impl_->name(); }
  bool valid() const { return static_cast<bool>(impl_); }

  // log_pdf, except that a uniform box continues its in-box constant outside the box,
  // so a model biased by it stays finite on stray test points.
  HeightBias height_bias() const;

 private:
  std::shared_ptr<const Impl> impl_;
};

Distribution product_mixture(const Mixture1D& m, int dim);
Distribution columns(int dim);
Distribution transformed(const Distribution& base, TransformSpec spec);
// 20-dim Columns rotated by the embedded matrix.
Distribution transformed_columns();
Distribution transformed_columns(const TransformSpec& spec);
Distribution uniform_box(const Vector& lo, const Vector& hi);
Distribution uniform_box_fit(const Matrix& data);
Distribution diag_gaussian(const Vector& mean, const Vector& sd);
Distribution diag_gaussian_fit(const Matrix& data);
Distribution from_descriptor(const DistributionDescriptor& d);

// The embedded 20x20 matrix (row-major) and its CSV export.
const Matrix& embedded_transform();
std::string embedded_transform_csv();
// Orthogonal part of the leading k x k block of the embedded matrix, sign-fixed to det +1.
Matrix leading_rotation(int k);
// Leading k x k block of the embedded matrix scaled to det +1; keeps its correlations and spread.
Matrix leading_block(int k);

Matrix augment_additive_noise(const Matrix& batch, double sigma, CounterRng& rng);

// Y ~ N(0, sy^2), X = slope*Y + N(0, noise^2); the conditional X|Y is known in closed form.
struct LinearGaussianPairs {
  double slope = 1.0;
  double y_sd = 1.0;
  double noise_sd = 0.5;

  Matrix sample(CounterRng& rng, Eigen::Index count) const;  // columns (x, y)
  double conditional_log_pdf(double x, double y) const;
  double marginal_x_sd() const;
};

}  // namespace pso
