#pragma once

// Random smooth problem instances: quasi-random knot values interpolated by
// a Gaussian-process mean (squared-exponential kernel, constant mean).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pinnbc/error.hpp"
#include "pinnbc/jet.hpp"

namespace pinnbc {

inline constexpr double kPerimeter = 4.0;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint32_t reverse_bits(std::uint32_t v) {
  v = ((v >> 1) & 0x55555555u) | ((v & 0x55555555u) << 1);
  v = ((v >> 2) & 0x33333333u) | ((v & 0x33333333u) << 2);
  v = ((v >> 4) & 0x0F0F0F0Fu) | ((v & 0x0F0F0F0Fu) << 4);
  v = ((v >> 8) & 0x00FF00FFu) | ((v & 0x00FF00FFu) << 8);
  return (v >> 16) | (v << 16);
}

/// One-dimensional Sobol stream: the base-2 radical inverse of the index,
/// digit-scrambled by XOR with the seed, mapped affinely onto [lo, hi].
struct SobolStream {
  std::uint32_t index = 1;
  double lo = 0.0;
  double hi = 1.0;
  std::uint32_t seed = 0;

  static double radical_inverse(std::uint32_t i, std::uint32_t scramble = 0) {
    return static_cast<double>(reverse_bits(i) ^ scramble) * 0x1p-32;
  }
};

/// Returns the next value and advances the stream.
inline double sobol_next(SobolStream& stream) {
  require(stream.index >= 1, "sobol stream index must be >= 1");
  const double r = SobolStream::radical_inverse(stream.index, stream.seed);
  ++stream.index;
  return stream.lo + (stream.hi - stream.lo) * r;
}

enum class FieldVariable : std::uint32_t { a = 1, f = 2, g = 3 };

/// Scramble key of the independent substream feeding one variable of one dataset.
inline std::uint32_t substream_key(std::uint64_t seed, int dataset_id, FieldVariable var) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(dataset_id)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(var));
  return static_cast<std::uint32_t>(h >> 32);
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct KnotSet2D {
  int n = 0;
  std::vector<Point2> coords;  // lattice order: index j * n + i
  std::vector<double> values;
};

/// n x n lattice over the closed unit square, spacing 1 / (n - 1).
inline KnotSet2D place_knots(int n) {
  require(n >= 2, "place_knots: n must be >= 2");
  KnotSet2D knots;
  knots.n = n;
  knots.coords.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Integer ratios keep the end points exactly 0 and 1.
      knots.coords.push_back({static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1)});
    }
  }
  return knots;
}

/// Diagnostics of a kernel solve.
struct FitReport {
  bool jitter_applied = false;
  double condition_estimate = 1.0;
};

namespace detail {

inline constexpr double kJitter = 1e-10;

/// Solves K w = rhs for symmetric positive-definite K, retrying once with
/// diagonal jitter. Throws fit-failure with a condition estimate.
inline Eigen::VectorXd solve_kernel(Eigen::MatrixXd K, const Eigen::VectorXd& rhs, FitReport& report) {
  const auto condition_of = [](const Eigen::MatrixXd& L) {
    const auto d = L.diagonal().cwiseAbs();
    const double ratio = d.maxCoeff() / d.minCoeff();
    return ratio * ratio;
  };
  if (!K.allFinite() || !rhs.allFinite())
    throw Error(ErrorKind::fit_failure, "kernel system has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    K.diagonal().array() += kJitter;
    report.jitter_applied = true;
    llt.compute(K);
  }
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
    const auto ev = eig.eigenvalues().cwiseAbs();
    throw Error(ErrorKind::fit_failure,
                "kernel matrix is singular (condition estimate " +
                    std::to_string(ev.maxCoeff() / std::max(ev.minCoeff(), 1e-300)) + ")");
  }
  report.condition_estimate = condition_of(llt.matrixL());
  Eigen::VectorXd w = llt.solve(rhs);
  if (!w.allFinite()) throw Error(ErrorKind::fit_failure, "kernel solve produced non-finite weights");
  return w;
}

inline double mean_of(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

}  // namespace detail

/// Noise-free GP posterior mean over the unit square:
///   u(x) = mean + sum_i w_i exp(-|x - c_i|^2 / (2 l^2)).
class FieldInterpolant {
 public:
  FieldInterpolant() = default;

  const KnotSet2D& knots() const { return knots_; }
  const std::vector<double>& weights() const { return weights_; }
  double mean() const { return mean_; }
  double lengthscale() const { return lengthscale_; }
  const FitReport& report() const { return report_; }

  double operator()(double x, double y) const {
    const double inv = 1.0 / (2.0 * lengthscale_ * lengthscale_);
    double s = mean_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double dx = x - knots_.coords[i].x;
      const double dy = y - knots_.coords[i].y;
      s += weights_[i] * std::exp(-(dx * dx + dy * dy) * inv);
    }
    return s;
  }

  Jet2 jet(double x, double y) const {
    const double l2 = lengthscale_ * lengthscale_;
    const double inv_l2 = 1.0 / l2;
    Jet2 out = Jet2::constant(mean_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double dx = x - knots_.coords[i].x;
      const double dy = y - knots_.coords[i].y;
      const double k = weights_[i] * std::exp(-(dx * dx + dy * dy) * 0.5 * inv_l2);
      out.v += k;
      out.gx -= dx * inv_l2 * k;
      out.gy -= dy * inv_l2 * k;
      out.hxx += (dx * dx * inv_l2 - 1.0) * inv_l2 * k;
      out.hxy += dx * dy * inv_l2 * inv_l2 * k;
      out.hyy += (dy * dy * inv_l2 - 1.0) * inv_l2 * k;
    }
    return out;
  }

  friend FieldInterpolant fit_field(const KnotSet2D& knots, double lengthscale);

 private:
  KnotSet2D knots_;
  std::vector<double> weights_;
  double mean_ = 0.0;
  double lengthscale_ = 1.0;
  FitReport report_;
};

inline double default_field_lengthscale(int n_knots) { return 1.5 / (n_knots - 1); }

inline FieldInterpolant fit_field(const KnotSet2D& knots, double lengthscale) {
  require(lengthscale > 0.0, "fit_field: lengthscale must be positive");
  require(!knots.coords.empty() && knots.coords.size() == knots.values.size(),
          "fit_field: knot coordinates and values differ in length");
  const auto m = static_cast<Eigen::Index>(knots.coords.size());
  const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const double dx = knots.coords[r].x - knots.coords[c].x;
      const double dy = knots.coords[r].y - knots.coords[c].y;
      K(r, c) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  FieldInterpolant field;
  field.knots_ = knots;
  field.lengthscale_ = lengthscale;
  field.mean_ = detail::mean_of(knots.values);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) rhs(r) = knots.values[r] - field.mean_;
  const Eigen::VectorXd w = detail::solve_kernel(std::move(K), rhs, field.report_);
  field.weights_.assign(w.data(), w.data() + m);
  return field;
}

/// Maps a perimeter position to the square boundary, walking counterclockwise
/// from (0,0): bottom, right, top, left. Arcs outside [0, 4) are wrapped.
inline Point2 boundary_to_xy(double arc) {
  arc = std::fmod(arc, kPerimeter);
  if (arc < 0.0) arc += kPerimeter;
  if (arc >= kPerimeter) arc = 0.0;
  if (arc < 1.0) return {arc, 0.0};
  if (arc < 2.0) return {1.0, arc - 1.0};
  if (arc < 3.0) return {1.0 - (arc - 2.0), 1.0};
  return {0.0, 1.0 - (arc - 3.0)};
}

/// Inverse of boundary_to_xy for points on the boundary (nearest side wins).
inline double xy_to_arc(double x, double y) {
  const std::array<double, 4> dist{y, 1.0 - x, 1.0 - y, x};
  int side = 0;
  for (int s = 1; s < 4; ++s)
    if (dist[s] < dist[side]) side = s;
  switch (side) {
    case 0: return x;
    case 1: return 1.0 + y;
    case 2: return 2.0 + (1.0 - x);
    default: return x == 0.0 && y == 0.0 ? 0.0 : 3.0 + (1.0 - y);
  }
}

/// Periodic interpolant of perimeter arc length. The kernel is squared
/// exponential in the chordal distance of the perimeter circle.
class BoundaryInterpolant {
 public:
  BoundaryInterpolant() = default;

  const std::vector<double>& positions() const { return positions_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  double mean() const { return mean_; }
  double lengthscale() const { return lengthscale_; }
  const FitReport& report() const { return report_; }

  // Squared chord between two arc positions on a circle of circumference 4.
  static double chord2(double ds) {
    const double s = std::sin(std::numbers::pi * ds / kPerimeter);
    const double radius = kPerimeter / (2.0 * std::numbers::pi);
    return 4.0 * radius * radius * s * s;
  }

  double operator()(double arc) const {
    double s = mean_;
    const double inv = 1.0 / (2.0 * lengthscale_ * lengthscale_);
    for (std::size_t i = 0; i < weights_.size(); ++i)
      s += weights_[i] * std::exp(-chord2(arc - positions_[i]) * inv);
    return s;
  }

  double derivative(double arc) const {
    const double inv = 1.0 / (2.0 * lengthscale_ * lengthscale_);
    // d(chord^2)/ds = (4 / pi) sin(pi ds / 2) for a circumference of 4.
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const double ds = arc - positions_[i];
      const double dchord2 = (kPerimeter / std::numbers::pi) *
                             std::sin(2.0 * std::numbers::pi * ds / kPerimeter);
      s -= weights_[i] * std::exp(-chord2(ds) * inv) * inv * dchord2;
    }
    return s;
  }

  double at_xy(double x, double y) const { return (*this)(xy_to_arc(x, y)); }

  friend BoundaryInterpolant fit_boundary(const std::vector<double>& positions,
                                          const std::vector<double>& values, double lengthscale);

 private:
  std::vector<double> positions_;
  std::vector<double> values_;
  std::vector<double> weights_;
  double mean_ = 0.0;
  double lengthscale_ = 1.0;
  FitReport report_;
};

inline double default_boundary_lengthscale(int n_knots) { return 1.5 * kPerimeter / n_knots; }

inline BoundaryInterpolant fit_boundary(const std::vector<double>& positions,
                                        const std::vector<double>& values, double lengthscale) {
  require(lengthscale > 0.0, "fit_boundary: lengthscale must be positive");
  require(positions.size() >= 2, "fit_boundary: need at least two knots");
  require(positions.size() == values.size(), "fit_boundary: positions and values differ in length");
  for (double p : positions)
    require(p >= 0.0 && p < kPerimeter, "fit_boundary: knot position outside [0, 4)");
  const auto m = static_cast<Eigen::Index>(positions.size());
  const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c)
      K(r, c) = std::exp(-BoundaryInterpolant::chord2(positions[r] - positions[c]) * inv);

  BoundaryInterpolant g;
  g.positions_ = positions;
  g.values_ = values;
  g.lengthscale_ = lengthscale;
  g.mean_ = detail::mean_of(values);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) rhs(r) = values[r] - g.mean_;
  const Eigen::VectorXd w = detail::solve_kernel(std::move(K), rhs, g.report_);
  g.weights_.assign(w.data(), w.data() + m);
  return g;
}

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

struct DatasetRanges {
  ValueRange a{-1.0, 1.0};
  ValueRange f{-10.0, 10.0};
  ValueRange g{-1.0, 1.0};

  bool valid() const { return a.min < a.max && f.min < f.max && g.min < g.max; }
  friend bool operator==(const DatasetRanges&, const DatasetRanges&) = default;
};

/// Knot ranges of the four reference datasets; dataset 2 has a normalized RHS.
inline DatasetRanges reference_ranges(int dataset_id) {
  DatasetRanges r;
  if (dataset_id == 2) r.f = {-1.0, 1.0};
  return r;
}

struct GenerationOptions {
  int n_knots = 4;
  int n_boundary_knots = 8;
  int resolution = 128;
  double field_lengthscale = 0.0;     // 0 selects the default
  double boundary_lengthscale = 0.0;  // 0 selects the default
};

struct DatasetInstance {
  int id = 0;
  std::uint64_t seed = 0;
  DatasetRanges ranges;
  int resolution = 128;
  FieldInterpolant a;
  FieldInterpolant f;
  BoundaryInterpolant g;
};

inline std::vector<double> draw_values(SobolStream stream, std::size_t count) {
  std::vector<double> v(count);
  for (auto& x : v) x = sobol_next(stream);
  return v;
}

inline DatasetInstance generate_instance(int id, const DatasetRanges& ranges, std::uint64_t seed,
                                         const GenerationOptions& options = {}) {
  require(ranges.valid(), "generate_instance: every range needs min < max");
  require(options.n_boundary_knots >= 2, "generate_instance: need >= 2 boundary knots");
  require(options.resolution >= 3, "generate_instance: resolution must be >= 3");
  const int n = options.n_knots;
  const double field_ls =
      options.field_lengthscale > 0.0 ? options.field_lengthscale : default_field_lengthscale(n);
  const double boundary_ls = options.boundary_lengthscale > 0.0
                                 ? options.boundary_lengthscale
                                 : default_boundary_lengthscale(options.n_boundary_knots);

  DatasetInstance inst;
  inst.id = id;
  inst.seed = seed;
  inst.ranges = ranges;
  inst.resolution = options.resolution;

  KnotSet2D ka = place_knots(n);
  ka.values = draw_values({1, ranges.a.min, ranges.a.max, substream_key(seed, id, FieldVariable::a)},
                          ka.coords.size());
  KnotSet2D kf = place_knots(n);
  kf.values = draw_values({1, ranges.f.min, ranges.f.max, substream_key(seed, id, FieldVariable::f)},
                          kf.coords.size());
  inst.a = fit_field(ka, field_ls);
  inst.f = fit_field(kf, field_ls);

  const int m = options.n_boundary_knots;
  std::vector<double> arcs(m);
  for (int k = 0; k < m; ++k) arcs[k] = kPerimeter * k / m;
  const auto gv = draw_values({1, ranges.g.min, ranges.g.max, substream_key(seed, id, FieldVariable::g)},
                              static_cast<std::size_t>(m));
  inst.g = fit_boundary(arcs, gv, boundary_ls);
  return inst;
}

}  // namespace pinnbc
