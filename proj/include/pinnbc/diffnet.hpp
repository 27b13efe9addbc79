#pragma once

// Fully-connected network evaluated on second-order input jets, with a reverse
// pass through the jet computation for parameter gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pinnbc/datagen.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/jet.hpp"

namespace pinnbc {

enum class Activation { gelu, linear };

inline std::string_view to_string(Activation a) { return a == Activation::gelu ? "gelu" : "linear"; }

inline Activation parse_activation(std::string_view s) {
  if (s == "gelu") return Activation::gelu;
  if (s == "linear") return Activation::linear;
  throw Error(ErrorKind::invalid_argument, "unknown activation '" + std::string(s) + "'");
}

// Exact (erf-based) GELU and its first three derivatives.
namespace gelu {

inline double cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }
inline double pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double value(double z) { return z * cdf(z); }
inline double d1(double z) { return cdf(z) + z * pdf(z); }
inline double d2(double z) { return pdf(z) * (2.0 - z * z); }
inline double d3(double z) { return pdf(z) * (z * z * z - 4.0 * z); }

}  // namespace gelu

inline Jet2 gelu_jet(const Jet2& u) {
  return compose(u, gelu::value(u.v), gelu::d1(u.v), gelu::d2(u.v));
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Activation activation = Activation::gelu;
};

struct MlpParams {
  std::vector<int> widths;
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

inline std::vector<int> default_widths() { return {2, 128, 128, 128, 128, 1}; }

inline std::vector<int> mlp_widths(int hidden_layers, int hidden_width) {
  std::vector<int> w{2};
  for (int i = 0; i < hidden_layers; ++i) w.push_back(hidden_width);
  w.push_back(1);
  return w;
}

/// Glorot-uniform weights, zero biases, GELU hidden layers and a linear output.
inline MlpParams init_params(const std::vector<int>& widths, std::uint64_t seed) {
  require(widths.size() >= 2 && widths.front() == 2 && widths.back() == 1,
          "init_params: widths must start with 2 and end with 1");
  for (int w : widths) require(w >= 1, "init_params: widths must be positive");
  MlpParams p;
  p.widths = widths;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) {
        const double u = static_cast<double>(rng() >> 11) * 0x1p-53;  // [0, 1)
        layer.weight(r, c) = bound * (2.0 * u - 1.0);
      }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.activation = l + 2 == widths.size() ? Activation::linear : Activation::gelu;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline void check_finite(double v, const char* where) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::evaluation_failure, std::string("non-finite value in ") + where);
}

inline double forward(const MlpParams& params, double x, double y) {
  Eigen::VectorXd a(2);
  a << x, y;
  for (const auto& layer : params.layers) {
    Eigen::VectorXd z = layer.weight * a + layer.bias;
    if (layer.activation == Activation::gelu) z = z.unaryExpr([](double t) { return gelu::value(t); });
    a = std::move(z);
  }
  check_finite(a(0), "network forward pass");
  return a(0);
}

/// Value, gradient and Hessian of the network output with respect to (x, y).
inline Jet2 forward_jet(const MlpParams& params, double x, double y) {
  std::vector<Jet2> a{Jet2::coord_x(x), Jet2::coord_y(y)};
  for (const auto& layer : params.layers) {
    std::vector<Jet2> z(static_cast<std::size_t>(layer.weight.rows()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      Jet2 s = Jet2::constant(layer.bias(r));
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) s += layer.weight(r, c) * a[c];
      z[r] = layer.activation == Activation::gelu ? gelu_jet(s) : s;
    }
    a = std::move(z);
  }
  if (!a[0].finite()) throw Error(ErrorKind::evaluation_failure, "non-finite network jet");
  return a[0];
}

struct LossGradient {
  double value = 0.0;
  std::vector<DenseLayer> grads;  // shape-congruent with MlpParams::layers
};

inline std::vector<DenseLayer> zeros_like(const MlpParams& params) {
  std::vector<DenseLayer> g;
  g.reserve(params.layers.size());
  for (const auto& l : params.layers)
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                 Eigen::VectorXd::Zero(l.bias.size()), l.activation});
  return g;
}

/// Per-point loss term: given the point index and the network output jet,
/// returns the term's value and writes d(term)/d(jet component) to `adjoint`.
using PointLoss = std::function<double(std::size_t index, const Jet2& out, Jet2& adjoint)>;

namespace detail {

// Jet batches are stored as (width x 6B) matrices with column blocks
// [v | gx | gy | hxx | hxy | hyy], each B columns wide.
enum Block : Eigen::Index { kV = 0, kX, kY, kXX, kXY, kYY, kBlocks };

inline void gelu_forward(const Eigen::MatrixXd& Z, Eigen::MatrixXd& A, Eigen::Index B) {
  A.resize(Z.rows(), Z.cols());
  for (Eigen::Index c = 0; c < B; ++c) {
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      const double z = Z(r, c);
      const double s1 = gelu::d1(z);
      const double s2 = gelu::d2(z);
      const double zx = Z(r, kX * B + c), zy = Z(r, kY * B + c);
      A(r, c) = gelu::value(z);
      A(r, kX * B + c) = s1 * zx;
      A(r, kY * B + c) = s1 * zy;
      A(r, kXX * B + c) = s2 * zx * zx + s1 * Z(r, kXX * B + c);
      A(r, kXY * B + c) = s2 * zx * zy + s1 * Z(r, kXY * B + c);
      A(r, kYY * B + c) = s2 * zy * zy + s1 * Z(r, kYY * B + c);
    }
  }
}

// In-place: on entry `G` holds adjoints of the activation output, on exit
// adjoints of the pre-activation jet.
inline void gelu_backward(const Eigen::MatrixXd& Z, Eigen::MatrixXd& G, Eigen::Index B) {
  for (Eigen::Index c = 0; c < B; ++c) {
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      const double z = Z(r, c);
      const double s1 = gelu::d1(z), s2 = gelu::d2(z), s3 = gelu::d3(z);
      const double zx = Z(r, kX * B + c), zy = Z(r, kY * B + c);
      const double zxx = Z(r, kXX * B + c), zxy = Z(r, kXY * B + c), zyy = Z(r, kYY * B + c);
      const double av = G(r, c), ax = G(r, kX * B + c), ay = G(r, kY * B + c);
      const double axx = G(r, kXX * B + c), axy = G(r, kXY * B + c), ayy = G(r, kYY * B + c);
      G(r, c) = av * s1 + ax * s2 * zx + ay * s2 * zy + axx * (s3 * zx * zx + s2 * zxx) +
                axy * (s3 * zx * zy + s2 * zxy) + ayy * (s3 * zy * zy + s2 * zyy);
      G(r, kX * B + c) = ax * s1 + 2.0 * axx * s2 * zx + axy * s2 * zy;
      G(r, kY * B + c) = ay * s1 + 2.0 * ayy * s2 * zy + axy * s2 * zx;
      G(r, kXX * B + c) = axx * s1;
      G(r, kXY * B + c) = axy * s1;
      G(r, kYY * B + c) = ayy * s1;
    }
  }
}

inline Eigen::MatrixXd input_jets(std::span<const Point2> pts) {
  const auto B = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, kBlocks * B);
  for (Eigen::Index c = 0; c < B; ++c) {
    A(0, c) = pts[c].x;
    A(1, c) = pts[c].y;
    A(0, kX * B + c) = 1.0;
    A(1, kY * B + c) = 1.0;
  }
  return A;
}

inline Jet2 column_jet(const Eigen::MatrixXd& A, Eigen::Index c, Eigen::Index B) {
  return {A(0, c), A(0, kX * B + c), A(0, kY * B + c), A(0, kXX * B + c), A(0, kXY * B + c), A(0, kYY * B + c)};
}

struct ForwardTape {
  std::vector<Eigen::MatrixXd> inputs;  // per layer input jets
  std::vector<Eigen::MatrixXd> pre;     // per layer pre-activation jets
  Eigen::MatrixXd output;
};

inline void forward_batch(const MlpParams& params, std::span<const Point2> pts, ForwardTape& tape) {
  const auto B = static_cast<Eigen::Index>(pts.size());
  tape.inputs.resize(params.layers.size());
  tape.pre.resize(params.layers.size());
  Eigen::MatrixXd A = input_jets(pts);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd Z = layer.weight * A;
    Z.leftCols(B).colwise() += layer.bias;
    tape.inputs[l] = std::move(A);
    if (layer.activation == Activation::gelu) {
      gelu_forward(Z, A, B);
    } else {
      A = Z;
    }
    tape.pre[l] = std::move(Z);
  }
  tape.output = std::move(A);
}

}  // namespace detail

/// Points per chunk of a batched evaluation. Chunks are visited in order so
/// gradient accumulation is deterministic.
inline constexpr std::size_t kBatchChunk = 512;

/// Network jets at many points.
inline std::vector<Jet2> forward_jet_batch(const MlpParams& params, std::span<const Point2> pts) {
  std::vector<Jet2> out(pts.size());
  detail::ForwardTape tape;
  for (std::size_t start = 0; start < pts.size(); start += kBatchChunk) {
    const auto chunk = pts.subspan(start, std::min(kBatchChunk, pts.size() - start));
    detail::forward_batch(params, chunk, tape);
    const auto B = static_cast<Eigen::Index>(chunk.size());
    for (Eigen::Index c = 0; c < B; ++c) out[start + c] = detail::column_jet(tape.output, c, B);
  }
  for (const auto& j : out)
    if (!j.finite()) throw Error(ErrorKind::evaluation_failure, "non-finite network jet");
  return out;
}

/// Network values only, at many points.
inline std::vector<double> forward_batch(const MlpParams& params, std::span<const Point2> pts) {
  std::vector<double> out(pts.size());
  for (std::size_t start = 0; start < pts.size(); start += kBatchChunk) {
    const auto B = static_cast<Eigen::Index>(std::min(kBatchChunk, pts.size() - start));
    Eigen::MatrixXd A(2, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      A(0, c) = pts[start + c].x;
      A(1, c) = pts[start + c].y;
    }
    for (const auto& layer : params.layers) {
      Eigen::MatrixXd Z = layer.weight * A;
      Z.colwise() += layer.bias;
      if (layer.activation == Activation::gelu) Z = Z.unaryExpr([](double t) { return gelu::value(t); });
      A = std::move(Z);
    }
    for (Eigen::Index c = 0; c < B; ++c) {
      check_finite(A(0, c), "network forward pass");
      out[start + c] = A(0, c);
    }
  }
  return out;
}

/// Gradient of loss = sum_i term(i, N-jet at pts[i]) with respect to every
/// weight and bias, differentiating through the second-order input jets.
inline LossGradient loss_gradient(const MlpParams& params, std::span<const Point2> pts, const PointLoss& term) {
  LossGradient result;
  result.grads = zeros_like(params);
  detail::ForwardTape tape;
  Eigen::MatrixXd G;
  for (std::size_t start = 0; start < pts.size(); start += kBatchChunk) {
    const auto chunk = pts.subspan(start, std::min(kBatchChunk, pts.size() - start));
    const auto B = static_cast<Eigen::Index>(chunk.size());
    detail::forward_batch(params, chunk, tape);

    G.setZero(1, detail::kBlocks * B);
    for (Eigen::Index c = 0; c < B; ++c) {
      Jet2 adj;
      result.value += term(start + static_cast<std::size_t>(c), detail::column_jet(tape.output, c, B), adj);
      G(0, c) = adj.v;
      G(0, detail::kX * B + c) = adj.gx;
      G(0, detail::kY * B + c) = adj.gy;
      G(0, detail::kXX * B + c) = adj.hxx;
      G(0, detail::kXY * B + c) = adj.hxy;
      G(0, detail::kYY * B + c) = adj.hyy;
    }
    for (std::size_t l = params.layers.size(); l-- > 0;) {
      const auto& layer = params.layers[l];
      if (layer.activation == Activation::gelu) detail::gelu_backward(tape.pre[l], G, B);
      result.grads[l].weight.noalias() += G * tape.inputs[l].transpose();
      result.grads[l].bias += G.leftCols(B).rowwise().sum();
      if (l > 0) G = layer.weight.transpose() * G;
    }
  }
  if (!std::isfinite(result.value))
    throw Error(ErrorKind::evaluation_failure, "non-finite loss value");
  for (const auto& g : result.grads)
    if (!g.weight.allFinite() || !g.bias.allFinite())
      throw Error(ErrorKind::evaluation_failure, "non-finite loss gradient");
  return result;
}

}  // namespace pinnbc
