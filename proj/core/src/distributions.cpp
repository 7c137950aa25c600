#include "pso/distributions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pso {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<double> as_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

class ProductMixture final : public Distribution::Impl {
 public:
  ProductMixture(Mixture1D m, int dim) : m_(std::move(m)), dim_(dim) {
    if (dim < 1) throw std::invalid_argument("distribution dimension must be positive");
  }
  int dim() const override { return dim_; }
  Matrix sample(CounterRng& rng, Eigen::Index count) const override {
    Matrix X(count, dim_);
    for (Eigen::Index i = 0; i < count; ++i)
      for (int d = 0; d < dim_; ++d) X(i, d) = m_.sample(rng);
    return X;
  }
  double log_pdf(std::span<const double> x) const override {
    double acc = 0.0;
    for (int d = 0; d < dim_; ++d) acc += m_.log_pdf(x[static_cast<std::size_t>(d)]);
    return acc;
  }
  DistributionDescriptor descriptor() const override {
    DistributionDescriptor desc{DistributionDescriptor::Kind::product_mixture, static_cast<std::uint32_t>(dim_), {}};
    for (const auto& c : m_.components()) {
      desc.params.push_back(c.kind == MixtureComponent::Kind::uniform ? 0.0 : 1.0);
      desc.params.push_back(c.a);
      desc.params.push_back(c.b);
      desc.params.push_back(c.weight);
    }
    return desc;
  }
  std::string name() const override { return "product_mixture"; }

 private:
  Mixture1D m_;
  int dim_;
};

class Transformed final : public Distribution::Impl {
 public:
  Transformed(Distribution base, TransformSpec spec) : base_(std::move(base)), spec_(std::move(spec)) {
    if (spec_.A.rows() != base_.dim()) throw std::invalid_argument("transform dimension mismatch");
  }
  int dim() const override { return base_.dim(); }
  Matrix sample(CounterRng& rng, Eigen::Index count) const override {
    const Matrix x = base_.sample(rng, count);
    return x * spec_.A.transpose();
  }
  double log_pdf(std::span<const double> X) const override {
    const Eigen::Map<const Vector> v(X.data(), dim());
    const Vector x = spec_.A_inv * v;
    return base_.log_pdf(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))) - spec_.log_abs_det;
  }
  DistributionDescriptor descriptor() const override {
    const DistributionDescriptor inner = base_.descriptor();
    DistributionDescriptor desc{DistributionDescriptor::Kind::transformed, static_cast<std::uint32_t>(dim()), {}};
    // [inner kind, inner param count, inner params..., A row-major]
    desc.params.push_back(static_cast<double>(inner.kind));
    desc.params.push_back(static_cast<double>(inner.params.size()));
    desc.params.insert(desc.params.end(), inner.params.begin(), inner.params.end());
    desc.params.insert(desc.params.end(), spec_.A.data(), spec_.A.data() + spec_.A.size());
    return desc;
  }
  std::string name() const override { return "transformed(" + base_.name() + ")"; }

 private:
  Distribution base_;
  TransformSpec spec_;
};

class UniformBox final : public Distribution::Impl {
 public:
  UniformBox(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.size() < 1) throw std::invalid_argument("uniform box bounds mismatch");
    log_density_ = 0.0;
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (!(hi_[i] > lo_[i])) throw std::invalid_argument("uniform box requires hi > lo");
      log_density_ -= std::log(hi_[i] - lo_[i]);
    }
  }
  int dim() const override { return static_cast<int>(lo_.size()); }
  Matrix sample(CounterRng& rng, Eigen::Index count) const override {
    Matrix X(count, dim());
    for (Eigen::Index i = 0; i < count; ++i)
      for (int d = 0; d < dim(); ++d) X(i, d) = lo_[d] + (hi_[d] - lo_[d]) * rng.uniform();
    return X;
  }
  double log_pdf(std::span<const double> x) const override {
    for (int d = 0; d < dim(); ++d) {
      const double v = x[static_cast<std::size_t>(d)];
      if (v < lo_[d] || v > hi_[d]) return kNegInf;
    }
    return log_density_;
  }
  DistributionDescriptor descriptor() const override {
    DistributionDescriptor desc{DistributionDescriptor::Kind::uniform_box, static_cast<std::uint32_t>(dim()), as_vector(lo_)};
    desc.params.insert(desc.params.end(), hi_.data(), hi_.data() + hi_.size());
    return desc;
  }
  std::string name() const override { return "uniform_box"; }
  double inside_log_density() const { return log_density_; }

 private:
  Vector lo_;
  Vector hi_;
  double log_density_ = 0.0;
};

class DiagGaussian final : public Distribution::Impl {
 public:
  DiagGaussian(Vector mean, Vector sd) : mean_(std::move(mean)), sd_(std::move(sd)) {
    if (mean_.size() != sd_.size() || mean_.size() < 1) throw std::invalid_argument("gaussian shape mismatch");
    norm_ = 0.0;
    for (Eigen::Index i = 0; i < sd_.size(); ++i) {
      if (!(sd_[i] > 0.0)) throw std::invalid_argument("gaussian std must be positive");
      norm_ -= std::log(sd_[i]) + kLogSqrt2Pi;
    }
  }
  int dim() const override { return static_cast<int>(mean_.size()); }
  Matrix sample(CounterRng& rng, Eigen::Index count) const override {
    Matrix X(count, dim());
    for (Eigen::Index i = 0; i < count; ++i)
      for (int d = 0; d < dim(); ++d) X(i, d) = mean_[d] + sd_[d] * rng.normal();
    return X;
  }
  double log_pdf(std::span<const double> x) const override {
    double q = 0.0;
    for (int d = 0; d < dim(); ++d) {
      const double z = (x[static_cast<std::size_t>(d)] - mean_[d]) / sd_[d];
      q += z * z;
    }
    return norm_ - 0.5 * q;
  }
  DistributionDescriptor descriptor() const override {
    DistributionDescriptor desc{DistributionDescriptor::Kind::diag_gaussian, static_cast<std::uint32_t>(dim()), as_vector(mean_)};
    desc.params.insert(desc.params.end(), sd_.data(), sd_.data() + sd_.size());
    return desc;
  }
  std::string name() const override { return "diag_gaussian"; }

 private:
  Vector mean_;
  Vector sd_;
  double norm_ = 0.0;
};

}  // namespace

Mixture1D::Mixture1D(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    if (c.kind == MixtureComponent::Kind::uniform && !(c.a < c.b)) throw std::invalid_argument("uniform needs a < b");
    if (c.kind == MixtureComponent::Kind::gaussian && !(c.b > 0.0)) throw std::invalid_argument("gaussian needs std > 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
  double acc = 0.0;
  for (const auto& c : components_) {
    log_weights_.push_back(std::log(c.weight));
    acc += c.weight;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;
}

double Mixture1D::log_pdf(double x) const {
  auto term = [&](std::size_t k) {
    const auto& c = components_[k];
    if (c.kind == MixtureComponent::Kind::uniform)
      return (x >= c.a && x <= c.b) ? log_weights_[k] - std::log(c.b - c.a) : kNegInf;
    const double z = (x - c.a) / c.b;
    return log_weights_[k] - std::log(c.b) - kLogSqrt2Pi - 0.5 * z * z;
  };
  double m = kNegInf;
  for (std::size_t k = 0; k < components_.size(); ++k) m = std::max(m, term(k));
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) acc += std::exp(term(k) - m);
  return m + std::log(acc);
}

double Mixture1D::cdf(double x) const {
  double acc = 0.0;
  for (const auto& c : components_) {
    double F = 0.0;
    if (c.kind == MixtureComponent::Kind::uniform) {
      F = std::clamp((x - c.a) / (c.b - c.a), 0.0, 1.0);
    } else {
      F = 0.5 * std::erfc(-(x - c.a) / (c.b * std::numbers::sqrt2));
    }
    acc += c.weight * F;
  }
  return acc;
}

double Mixture1D::sample(CounterRng& rng) const {
  const double u = rng.uniform();
  const auto k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  const auto& c = components_[std::min(k, components_.size() - 1)];
  if (c.kind == MixtureComponent::Kind::uniform) return c.a + (c.b - c.a) * rng.uniform();
  return c.a + c.b * rng.normal();
}

double Mixture1D::mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight * (c.kind == MixtureComponent::Kind::uniform ? 0.5 * (c.a + c.b) : c.a);
  return m;
}

double Mixture1D::variance() const {
  double second = 0.0;
  for (const auto& c : components_) {
    if (c.kind == MixtureComponent::Kind::uniform) {
      second += c.weight * (c.a * c.a + c.a * c.b + c.b * c.b) / 3.0;
    } else {
      second += c.weight * (c.a * c.a + c.b * c.b);
    }
  }
  const double m = mean();
  return second - m * m;
}

Mixture1D columns_mixture() {
  return Mixture1D({MixtureComponent::uniform(-2.3, -1.7, 0.2), MixtureComponent::gaussian(-1.0, 0.2, 0.2),
                    MixtureComponent::gaussian(0.0, 0.2, 0.2), MixtureComponent::gaussian(1.0, 0.2, 0.2),
                    MixtureComponent::uniform(1.7, 2.3, 0.2)});
}

Vector Distribution::log_pdf(const Matrix& X) const {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out[i] = impl_->log_pdf(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())));
  return out;
}

HeightBias Distribution::height_bias() const {
  if (auto box = std::dynamic_pointer_cast<const UniformBox>(impl_)) {
    const double c = box->inside_log_density();
    return [c](std::span<const double>) { return c; };
  }
  auto impl = impl_;
  return [impl](std::span<const double> x) { return impl->log_pdf(x); };
}

TransformSpec TransformSpec::from_matrix(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1) throw std::invalid_argument("transform must be square");
  TransformSpec t;
  t.A = A;
  const Eigen::MatrixXd dense = A;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
  t.det = lu.determinant();
  if (!(std::abs(t.det - 1.0) < 1e-6)) {
    std::ostringstream os;
    os << std::setprecision(12) << "transform determinant " << t.det << " is not 1 within 1e-6";
    throw std::invalid_argument(os.str());
  }
  t.A_inv = lu.inverse();
  t.log_abs_det = std::log(std::abs(t.det));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  t.condition = sv(0) / sv(sv.size() - 1);
  return t;
}

Distribution product_mixture(const Mixture1D& m, int dim) {
  return Distribution(std::make_shared<const ProductMixture>(m, dim));
}

Distribution columns(int dim) { return product_mixture(columns_mixture(), dim); }

Distribution transformed(const Distribution& base, TransformSpec spec) {
  return Distribution(std::make_shared<const Transformed>(base, std::move(spec)));
}

Distribution transformed_columns() {
  static const TransformSpec spec = TransformSpec::from_matrix(embedded_transform());
  return transformed(columns(20), spec);
}

Distribution transformed_columns(const TransformSpec& spec) {
  return transformed(columns(static_cast<int>(spec.A.rows())), spec);
}

Distribution uniform_box(const Vector& lo, const Vector& hi) {
  return Distribution(std::make_shared<const UniformBox>(lo, hi));
}

Distribution uniform_box_fit(const Matrix& data) {
  if (data.rows() < 1) throw std::invalid_argument("cannot fit a box to empty data");
  return uniform_box(data.colwise().minCoeff().transpose(), data.colwise().maxCoeff().transpose());
}

Distribution diag_gaussian(const Vector& mean, const Vector& sd) {
  return Distribution(std::make_shared<const DiagGaussian>(mean, sd));
}

Distribution diag_gaussian_fit(const Matrix& data) {
  if (data.rows() < 2) throw std::invalid_argument("gaussian fit needs at least two rows");
  const Vector mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - mean.transpose();
  const Vector var = (centered.array().square().colwise().sum() / static_cast<double>(data.rows() - 1)).transpose();
  for (Eigen::Index i = 0; i < var.size(); ++i)
    if (!(var[i] > 0.0)) throw std::invalid_argument("gaussian fit needs positive variance in every dimension");
  return diag_gaussian(mean, var.cwiseSqrt());
}

Distribution from_descriptor(const DistributionDescriptor& d) {
  const auto n = static_cast<Eigen::Index>(d.dim);
  const auto& p = d.params;
  auto need = [&](std::size_t count) {
    if (p.size() != count) throw std::invalid_argument("distribution descriptor has wrong parameter count");
  };
  switch (d.kind) {
    case DistributionDescriptor::Kind::uniform_box:
      need(2 * d.dim);
      return uniform_box(Eigen::Map<const Vector>(p.data(), n), Eigen::Map<const Vector>(p.data() + n, n));
    case DistributionDescriptor::Kind::diag_gaussian:
      need(2 * d.dim);
      return diag_gaussian(Eigen::Map<const Vector>(p.data(), n), Eigen::Map<const Vector>(p.data() + n, n));
    case DistributionDescriptor::Kind::product_mixture: {
      if (p.empty() || p.size() % 4 != 0) throw std::invalid_argument("bad mixture descriptor");
      std::vector<MixtureComponent> comps;
      for (std::size_t k = 0; k < p.size(); k += 4) {
        comps.push_back(p[k] == 0.0 ? MixtureComponent::uniform(p[k + 1], p[k + 2], p[k + 3])
                                    : MixtureComponent::gaussian(p[k + 1], p[k + 2], p[k + 3]));
      }
      return product_mixture(Mixture1D(std::move(comps)), static_cast<int>(d.dim));
    }
    case DistributionDescriptor::Kind::transformed: {
      if (p.size() < 2) throw std::invalid_argument("bad transform descriptor");
      const auto inner_count = static_cast<std::size_t>(p[1]);
      if (p.size() != 2 + inner_count + d.dim * d.dim) throw std::invalid_argument("bad transform descriptor");
      DistributionDescriptor inner{static_cast<DistributionDescriptor::Kind>(static_cast<std::uint32_t>(p[0])), d.dim,
                                   std::vector<double>(p.begin() + 2, p.begin() + 2 + static_cast<std::ptrdiff_t>(inner_count))};
      const Matrix A = Eigen::Map<const Matrix>(p.data() + 2 + inner_count, n, n);
      return transformed(from_descriptor(inner), TransformSpec::from_matrix(A));
    }
  }
  throw std::invalid_argument("unknown distribution kind");
}

std::string embedded_transform_csv() {
  const Matrix& A = embedded_transform();
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) os << (j ? "," : "") << A(i, j);
    os << '\n';
  }
  return os.str();
}

Matrix leading_block(int k) {
  const Matrix& A = embedded_transform();
  if (k < 1 || k > A.rows()) throw std::invalid_argument("leading_block size out of range");
  Eigen::MatrixXd B = A.topLeftCorner(k, k);
  const double det = Eigen::PartialPivLU<Eigen::MatrixXd>(B).determinant();
  if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("leading block is singular");
  if (det < 0.0) B.row(0) *= -1.0;
  B /= std::pow(std::abs(det), 1.0 / k);
  return Matrix(B);
}

Matrix leading_rotation(int k) {
  const Matrix& A = embedded_transform();
  if (k < 1 || k > A.rows()) throw std::invalid_argument("leading_rotation size out of range");
  const Eigen::MatrixXd block = A.topLeftCorner(k, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(block);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  // Unique Q with positive diagonal of R.
  for (int j = 0; j < k; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  if (Q.determinant() < 0.0) Q.col(0) *= -1.0;
  return Matrix(Q);
}

Matrix augment_additive_noise(const Matrix& batch, double sigma, CounterRng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("augmentation sigma must be non-negative");
  Matrix out = batch;
  if (sigma == 0.0) return out;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += sigma * rng.normal();
  return out;
}

Matrix LinearGaussianPairs::sample(CounterRng& rng, Eigen::Index count) const {
  Matrix P(count, 2);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double y = y_sd * rng.normal();
    P(i, 0) = slope * y + noise_sd * rng.normal();
    P(i, 1) = y;
  }
  return P;
}

double LinearGaussianPairs::conditional_log_pdf(double x, double y) const {
  const double z = (x - slope * y) / noise_sd;
  return -0.5 * z * z - std::log(noise_sd) - kLogSqrt2Pi;
}

double LinearGaussianPairs::marginal_x_sd() const { return std::sqrt(slope * slope * y_sd * y_sd + noise_sd * noise_sd); }

}  // namespace pso
