#include "pso/surface_model.hpp"

#include "pso/rng.hpp"

#include <cmath>

namespace pso {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

double transform_value(const OutputTransform& t, double h) {
  if (!t.bounded) return h;
  return 0.5 * (t.h_max - t.h_min) * std::tanh(h) + 0.5 * (t.h_max + t.h_min);
}

double transform_grad(const OutputTransform& t, double h) {
  if (!t.bounded) return 1.0;
  const double th = std::tanh(h);
  return 0.5 * (t.h_max - t.h_min) * (1.0 - th * th);
}

void apply_activation(Matrix& z, Activation a) {
  switch (a.kind) {
    case ActivationKind::identity:
      return;
    case ActivationKind::relu:
      z = z.cwiseMax(0.0);
      return;
    case ActivationKind::leaky_relu:
      z = z.cwiseMax(a.slope * z);  // slope < 1
      return;
    case ActivationKind::tanh:
      z = z.array().tanh().matrix();
      return;
  }
}

// d * activation'(z), elementwise.
Matrix activation_backward(const Matrix& d, const Matrix& z, Activation a) {
  switch (a.kind) {
    case ActivationKind::identity:
      return d;
    case ActivationKind::relu:
      return (z.array() > 0.0).select(d, 0.0);
    case ActivationKind::leaky_relu:
      return (z.array() > 0.0).select(d, a.slope * d);
    case ActivationKind::tanh:
      return (d.array() * (1.0 - z.array().tanh().square())).matrix();
  }
  return d;
}

void check_finite(const Matrix& m, int layer, const char* what) {
  if (!all_finite(m)) {
    throw NumericFailure(std::string("non-finite ") + what + " at layer " + std::to_string(layer), layer);
  }
}

// Activations are stored feature-major (features x batch) so every block is a contiguous slab.
// z = W a + b for one layer.
Matrix affine(const LayerLayout& L, const double* p, const Matrix& a) {
  Matrix z(L.out, a.cols());
  if (L.kind == LayerKind::dense) {
    ConstMap W(p + L.w_offset, L.out, L.in);
    z.noalias() = W * a;
  } else {
    const int S = L.block_size;
    for (int j = 0; j < L.num_blocks; ++j) {
      ConstMap Wj(p + L.w_offset + static_cast<std::size_t>(j) * S * S, S, S);
      z.middleRows(j * S, S).noalias() = Wj * a.middleRows(j * S, S);
    }
  }
  if (L.b_count > 0) {
    Eigen::Map<const Vector> b(p + L.b_offset, L.out);
    z.colwise() += b;
  }
  return z;
}

// W^T dz, the gradient with respect to the layer input.
Matrix input_gradient(const LayerLayout& L, const double* p, const Matrix& dz) {
  Matrix da(L.in, dz.cols());
  if (L.kind == LayerKind::dense) {
    ConstMap W(p + L.w_offset, L.out, L.in);
    da.noalias() = W.transpose() * dz;
  } else {
    const int S = L.block_size;
    for (int j = 0; j < L.num_blocks; ++j) {
      ConstMap Wj(p + L.w_offset + static_cast<std::size_t>(j) * S * S, S, S);
      da.middleRows(j * S, S).noalias() = Wj.transpose() * dz.middleRows(j * S, S);
    }
  }
  return da;
}

// Accumulates the batch-summed weight and bias gradients of one layer into g.
void accumulate_param_gradient(const LayerLayout& L, const Matrix& a_in, const Matrix& dz, double* g) {
  if (L.kind == LayerKind::dense) {
    Eigen::Map<Matrix> gW(g + L.w_offset, L.out, L.in);
    gW.noalias() += dz * a_in.transpose();
  } else {
    const int S = L.block_size;
    for (int j = 0; j < L.num_blocks; ++j) {
      Eigen::Map<Matrix> gWj(g + L.w_offset + static_cast<std::size_t>(j) * S * S, S, S);
      gWj.noalias() += dz.middleRows(j * S, S) * a_in.middleRows(j * S, S).transpose();
    }
  }
  if (L.b_count > 0) Eigen::Map<Vector>(g + L.b_offset, L.out) += dz.rowwise().sum();
}

// Upstream gradients dz_l (out_l x batch) for every layer, weighted per sample by coeffs.
std::vector<Matrix> backward_rows(const NetworkSpec& spec, const std::vector<LayerLayout>& layers,
                                  const ParamVector& theta, const ForwardTape& tape, const Vector& coeffs) {
  const double* p = theta.values.data();
  const int nl = static_cast<int>(layers.size());
  std::vector<Matrix> dzs(nl);

  Matrix dz(1, tape.h.size());
  for (Eigen::Index i = 0; i < tape.h.size(); ++i) dz(0, i) = coeffs[i] * transform_grad(spec.output, tape.h[i]);

  // dout is the gradient with respect to the output of layer l; a shortcut passes it on to the layer input.
  Matrix dout;
  for (int l = nl - 1; l >= 0; --l) {
    dzs[l] = dz;
    if (l == 0) break;
    Matrix da = input_gradient(layers[l], p, dz);
    if (layers[l].shortcut) da += dout;
    dz = activation_backward(da, tape.pre[l - 1], spec.activation);
    dout = std::move(da);
  }
  return dzs;
}

}  // namespace

double activate(double z, Activation a) {
  switch (a.kind) {
    case ActivationKind::identity:
      return z;
    case ActivationKind::relu:
      return z > 0.0 ? z : 0.0;
    case ActivationKind::leaky_relu:
      return z > 0.0 ? z : a.slope * z;
    case ActivationKind::tanh:
      return std::tanh(z);
  }
  return z;
}

double activate_grad(double z, Activation a) {
  switch (a.kind) {
    case ActivationKind::identity:
      return 1.0;
    case ActivationKind::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu:
      return z > 0.0 ? 1.0 : a.slope;
    case ActivationKind::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

NetworkSpec NetworkSpec::fully_connected(int n, int width, int layers) {
  NetworkSpec s;
  s.input_dim = n;
  s.topology = Topology::fully_connected;
  s.width = width;
  s.num_layers = layers;
  return s;
}

NetworkSpec NetworkSpec::block_diagonal(int n, int blocks, int block_size, int layers) {
  NetworkSpec s;
  s.input_dim = n;
  s.topology = Topology::block_diagonal;
  s.num_blocks = blocks;
  s.block_size = block_size;
  s.num_layers = layers;
  return s;
}

NetworkSpec NetworkSpec::linear(int n) {
  NetworkSpec s;
  s.input_dim = n;
  s.topology = Topology::linear;
  s.num_layers = 1;
  s.activation.kind = ActivationKind::identity;
  return s;
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw SpecError("input_dim must be positive");
  if (activation.kind == ActivationKind::leaky_relu && !(activation.slope > 0.0 && activation.slope < 1.0))
    throw SpecError("leaky_relu slope must lie in (0,1)");
  if (output.bounded && !(output.h_min < output.h_max)) throw SpecError("bounded output requires h_min < h_max");
  switch (topology) {
    case Topology::linear:
      if (num_layers != 1) throw SpecError("linear topology has exactly one layer");
      if (shortcuts) throw SpecError("linear topology has no inner layers for shortcuts");
      return;
    case Topology::fully_connected:
      if (width < 1) throw SpecError("fully_connected width must be positive");
      break;
    case Topology::block_diagonal:
      if (num_blocks < 1 || block_size < 1) throw SpecError("block_diagonal needs positive num_blocks and block_size");
      break;
  }
  if (num_layers < 2) throw SpecError("num_layers must be at least 2");
  if (shortcuts && num_layers < 3) throw SpecError("shortcuts need an inner layer with matching widths");
}

int NetworkSpec::hidden_width() const {
  switch (topology) {
    case Topology::fully_connected:
      return width;
    case Topology::block_diagonal:
      return num_blocks * block_size;
    case Topology::linear:
      return 0;
  }
  return 0;
}

std::vector<LayerLayout> NetworkSpec::layers() const {
  validate();
  std::vector<LayerLayout> out;
  std::size_t off = 0;
  auto push = [&](LayerKind kind, int in, int o, bool bias, bool act, bool sc) {
    LayerLayout L;
    L.kind = kind;
    L.in = in;
    L.out = o;
    if (kind == LayerKind::block) {
      L.num_blocks = num_blocks;
      L.block_size = block_size;
      L.w_count = static_cast<std::size_t>(num_blocks) * block_size * block_size;
    } else {
      L.w_count = static_cast<std::size_t>(in) * o;
    }
    L.w_offset = off;
    off += L.w_count;
    L.b_offset = off;
    L.b_count = bias ? static_cast<std::size_t>(o) : 0;
    off += L.b_count;
    L.activated = act;
    L.shortcut = sc;
    out.push_back(L);
  };

  if (topology == Topology::linear) {
    push(LayerKind::dense, input_dim, 1, false, false, false);
    return out;
  }
  const int w = hidden_width();
  const LayerKind inner = topology == Topology::block_diagonal ? LayerKind::block : LayerKind::dense;
  push(LayerKind::dense, input_dim, w, true, true, false);
  for (int l = 1; l < num_layers - 1; ++l) push(inner, w, w, true, true, shortcuts);
  push(LayerKind::dense, w, 1, true, false, false);
  return out;
}

std::size_t NetworkSpec::param_count() const {
  const auto ls = layers();
  return ls.back().b_offset + ls.back().b_count;
}

bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
  return a.input_dim == b.input_dim && a.topology == b.topology && a.width == b.width &&
         a.num_blocks == b.num_blocks && a.block_size == b.block_size && a.num_layers == b.num_layers &&
         a.activation.kind == b.activation.kind && a.activation.slope == b.activation.slope &&
         a.shortcuts == b.shortcuts && a.output.bounded == b.output.bounded && a.output.h_min == b.output.h_min &&
         a.output.h_max == b.output.h_max;
}

Preconditioner Preconditioner::identity(int n) {
  Preconditioner p;
  p.mean = Vector::Zero(n);
  p.std = Vector::Ones(n);
  return p;
}

Preconditioner Preconditioner::from_data(const Matrix& data, HeightBias bias) {
  Preconditioner p;
  p.mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - p.mean.transpose();
  const double denom = data.rows() > 1 ? static_cast<double>(data.rows() - 1) : 1.0;
  p.std = (centered.array().square().colwise().sum() / denom).sqrt().transpose();
  for (Eigen::Index i = 0; i < p.std.size(); ++i)
    if (!(p.std[i] > 0.0)) p.std[i] = 1.0;
  p.height_bias = std::move(bias);
  return p;
}

Matrix Preconditioner::normalize(const Matrix& X) const {
  Matrix out = X.rowwise() - mean.transpose();
  out.array().rowwise() /= std.transpose().array();
  return out;
}

Matrix Preconditioner::denormalize(const Matrix& Xn) const {
  Matrix out = Xn;
  out.array().rowwise() *= std.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

void Preconditioner::validate(int n) const {
  if (mean.size() != n || std.size() != n) throw SpecError("preconditioner dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(std[i] > 0.0) || !std::isfinite(std[i])) throw SpecError("preconditioner std must be positive");
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed, bool zero_last_layer) {
  const auto layers = spec.layers();
  ParamVector theta;
  theta.values = Vector::Zero(static_cast<Eigen::Index>(spec.param_count()));
  CounterRng rng = CounterRng(mix64(seed)).split("init");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerLayout& L = layers[l];
    if (zero_last_layer && l + 1 == layers.size()) break;
    const double fan_in = L.kind == LayerKind::block ? L.block_size : L.in;
    const double fan_out = L.kind == LayerKind::block ? L.block_size : L.out;
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t k = 0; k < L.w_count; ++k) theta.values[static_cast<Eigen::Index>(L.w_offset + k)] = a * (2.0 * rng.uniform() - 1.0);
  }
  return theta;
}

ForwardTape forward_tape(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                         const Matrix& X) {
  const auto layers = spec.layers();
  if (X.cols() != spec.input_dim) throw SpecError("input batch has wrong dimension");
  if (theta.size() != spec.param_count()) throw SpecError("parameter vector length does not match spec");
  precond.validate(spec.input_dim);
  check_finite(X, 0, "input");

  ForwardTape tape;
  tape.inputs.reserve(layers.size());
  tape.pre.reserve(layers.size());
  const double* p = theta.values.data();

  Matrix a = precond.normalize(X).transpose();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerLayout& L = layers[l];
    Matrix z = affine(L, p, a);
    check_finite(z, static_cast<int>(l) + 1, "pre-activation");
    Matrix next = z;
    if (L.activated) {
      apply_activation(next, spec.activation);
      if (L.shortcut) next += a;
    }
    tape.inputs.push_back(std::move(a));
    tape.pre.push_back(std::move(z));
    a = std::move(next);
  }

  const Eigen::Index B = X.rows();
  tape.h = a.row(0).transpose();
  if (precond.height_bias) {
    for (Eigen::Index i = 0; i < B; ++i) {
      tape.h[i] += precond.height_bias(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())));
    }
  }
  tape.out.resize(B);
  for (Eigen::Index i = 0; i < B; ++i) tape.out[i] = transform_value(spec.output, tape.h[i]);
  const int out_layer = static_cast<int>(layers.size());
  for (Eigen::Index i = 0; i < B; ++i) {
    if (!std::isfinite(tape.out[i]))
      throw NumericFailure("non-finite surface height at output layer " + std::to_string(out_layer), out_layer, i);
  }
  return tape;
}

Vector forward(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta, const Matrix& X) {
  return forward_tape(spec, precond, theta, X).out;
}

Vector backward(const NetworkSpec& spec, const ParamVector& theta, const ForwardTape& tape, const Vector& coeffs) {
  const auto layers = spec.layers();
  if (coeffs.size() != tape.h.size()) throw SpecError("coefficient vector length does not match batch");
  Vector g = Vector::Zero(theta.values.size());
  const std::vector<Matrix> dzs = backward_rows(spec, layers, theta, tape, coeffs);
  for (std::size_t l = 0; l < layers.size(); ++l) accumulate_param_gradient(layers[l], tape.inputs[l], dzs[l], g.data());
  if (!all_finite(g)) throw NumericFailure("non-finite parameter gradient", 0);
  return g;
}

Vector param_gradient(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                      const Matrix& X, const Vector& coeffs) {
  return backward(spec, theta, forward_tape(spec, precond, theta, X), coeffs);
}

Matrix per_sample_gradients(const NetworkSpec& spec, const Preconditioner& precond, const ParamVector& theta,
                            const Matrix& X) {
  const ForwardTape tape = forward_tape(spec, precond, theta, X);
  const auto layers = spec.layers();
  const std::vector<Matrix> dzs = backward_rows(spec, layers, theta, tape, Vector::Ones(X.rows()));
  Matrix G = Matrix::Zero(X.rows(), static_cast<Eigen::Index>(theta.size()));

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerLayout& L = layers[l];
    const Matrix& a = tape.inputs[l];
    const Matrix& dz = dzs[l];
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double* row = G.row(i).data();
      if (L.kind == LayerKind::dense) {
        Eigen::Map<Matrix> gW(row + L.w_offset, L.out, L.in);
        gW.noalias() = dz.col(i) * a.col(i).transpose();
      } else {
        const int S = L.block_size;
        for (int j = 0; j < L.num_blocks; ++j) {
          Eigen::Map<Matrix> gWj(row + L.w_offset + static_cast<std::size_t>(j) * S * S, S, S);
          gWj.noalias() = dz.col(i).segment(j * S, S) * a.col(i).segment(j * S, S).transpose();
        }
      }
      if (L.b_count > 0) Eigen::Map<Vector>(row + L.b_offset, L.out) = dz.col(i);
    }
  }
  if (!all_finite(G)) throw NumericFailure("non-finite per-sample gradient", 0);
  return G;
}

Matrix bd_layer_apply(std::span<const double> W, std::span<const double> b, const Matrix& v, int num_blocks,
                      int block_size, Activation activation) {
  const std::size_t S = static_cast<std::size_t>(block_size);
  if (W.size() != static_cast<std::size_t>(num_blocks) * S * S || b.size() != static_cast<std::size_t>(num_blocks) * S ||
      v.cols() != static_cast<Eigen::Index>(num_blocks * S))
    throw SpecError("bd_layer_apply shape mismatch");
  Matrix u(v.rows(), v.cols());
  for (int j = 0; j < num_blocks; ++j) {
    ConstMap Wj(W.data() + j * S * S, block_size, block_size);
    u.middleCols(j * block_size, block_size).noalias() = v.middleCols(j * block_size, block_size) * Wj.transpose();
  }
  u.rowwise() += Eigen::Map<const RowVec>(b.data(), v.cols());
  apply_activation(u, activation);
  return u;
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::fully_connected:
      return "fully_connected";
    case Topology::block_diagonal:
      return "block_diagonal";
    case Topology::linear:
      return "linear";
  }
  return "?";
}

std::string to_string(ActivationKind a) {
  switch (a) {
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::leaky_relu:
      return "leaky_relu";
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::identity:
      return "identity";
  }
  return "?";
}

}  // namespace pso
