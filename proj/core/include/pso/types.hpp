#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pso {

// Batches are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// x * 0 is 0 for finite x and NaN otherwise, so the sum vectorizes where allFinite() does not.
template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return (m.derived().array() * 0.0).sum() == 0.0;
}

class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, int layer = -1, long index = -1)
      : std::runtime_error(what), layer_(layer), index_(index) {}
  int layer() const { return layer_; }
  long index() const { return index_; }

 private:
  int layer_;
  long index_;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RegistryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pso
