#pragma once

#include "pso/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pso {

enum class Topology { fully_connected, block_diagonal, linear };

enum class ActivationKind { relu, leaky_relu, tanh, identity };

struct Activation {
  ActivationKind kind = ActivationKind::leaky_relu;
  double slope = 0.01;  // leaky_relu only
};

struct OutputTransform {
  bool bounded = false;
  double h_min = 0.0;
  double h_max = 0.0;
};

enum class LayerKind { dense, block };

struct LayerLayout {
  LayerKind kind = LayerKind::dense;
  int in = 0;
  int out = 0;
  int num_blocks = 1;
  int block_size = 0;
  std::size_t w_offset = 0;
  std::size_t w_count = 0;
  std::size_t b_offset = 0;
  std::size_t b_count = 0;  // 0 for the bias-free linear toy
  bool activated = false;
  bool shortcut = false;
};

struct NetworkSpec {
  int input_dim = 1;
  Topology topology = Topology::block_diagonal;
  int width = 0;        // fully_connected
  int num_blocks = 0;   // block_diagonal
  int block_size = 0;   // block_diagonal
  int num_layers = 2;
  Activation activation{};
  bool shortcuts = false;
  OutputTransform output{};

  static NetworkSpec fully_connected(int n, int width, int layers);
  static NetworkSpec block_diagonal(int n, int blocks, int block_size, int layers);
  // f(x) = w^T x, one layer, no bias, no activation.
  static NetworkSpec linear(int n);

  void validate() const;  // throws SpecError
  int hidden_width() const;
  std::vector<LayerLayout> layers() const;
  std::size_t param_count() const;
};

bool operator==(const NetworkSpec& a, const NetworkSpec& b);

struct ParamVector {
  Vector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

using LogDensityFn = std::function<double(std::span<const double>)>;
using HeightBias = LogDensityFn;

struct Preconditioner {
  Vector mean;
  Vector std;
  HeightBias height_bias;  // empty means no bias

  static Preconditioner identity(int n);
  // Mean and per-dimension standard deviation of the rows of data.
  static Preconditioner from_data(const Matrix& data, HeightBias bias = {});

  Matrix normalize(const Matrix& X) const;
  Matrix denormalize(const Matrix& Xn) const;
  void validate(int n) const;
};

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed, bool zero_last_layer);

// Activations kept from a forward pass for the reverse pass.
struct ForwardTape {
  // Feature-major (features x batch).
  std::vector<Matrix> inputs;  // input to layer l (normalized X^T for l = 0)
  std::vector<Matrix> pre;     // pre-activation of layer l
  Vector h;                    // inner output plus height bias, before the output transform
  Vector out;
};

ForwardTape forward_tape(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                         const Matrix& X);

Vector forward(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta, const Matrix& X);

// sum_i coeffs_i * grad_theta f(X_i)
Vector backward(const NetworkSpec& spec, const ParamVector& theta, const ForwardTape& tape, const Vector& coeffs);

Vector param_gradient(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                      const Matrix& X, const Vector& coeffs);

Matrix per_sample_gradients(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                            const Matrix& X);

// W holds N_B blocks of S_B x S_B, W[j,k,m] at (j*S_B + k)*S_B + m; v is B x (N_B*S_B).
Matrix bd_layer_apply(std::span<const double> W, std::span<const double> b, const Matrix& v, int num_blocks,
                      int block_size, Activation activation);

double activate(double z, Activation a);
double activate_grad(double z, Activation a);

// Spec, preconditioner and parameters bundled for the higher-level modules.
struct Model {
  NetworkSpec spec;
  Preconditioner precond;
  ParamVector theta;

  Vector heights(const Matrix& X) const { return forward(spec, precond, theta, X); }
  Vector gradient(const Matrix& X, const Vector& coeffs) const {
    return param_gradient(spec, precond, theta, X, coeffs);
  }
  Matrix per_sample(const Matrix& X) const { return per_sample_gradients(spec, precond, theta, X); }
};

std::string to_string(Topology t);
std::string to_string(ActivationKind a);

}  // namespace pso
