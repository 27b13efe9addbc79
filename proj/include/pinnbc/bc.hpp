#pragma once

// Boundary-condition imposition: point sampling for soft (loss-based) BCs and
// the G + phi * N composition for exact BCs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "pinnbc/datagen.hpp"
#include "pinnbc/diffnet.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/jet.hpp"

namespace pinnbc {

enum class PointRole { collocation, boundary };

struct PointSet {
  PointRole role = PointRole::collocation;
  std::vector<Point2> points;
  std::vector<double> labels;  // boundary targets; empty for collocation
};

inline double boundary_distance(const Point2& p) {
  return std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y});
}

namespace detail {
// Uniform on the open interval (0, 1).
inline double open_unit(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}
}  // namespace detail

/// i.i.d. uniform points in the open unit square.
inline PointSet sample_collocation(int count, std::uint64_t seed) {
  require(count >= 1, "sample_collocation: count must be >= 1");
  std::mt19937_64 rng(splitmix64(seed ^ 0xC011u));
  PointSet set;
  set.points.resize(static_cast<std::size_t>(count));
  for (auto& p : set.points) {
    p.x = detail::open_unit(rng);
    p.y = detail::open_unit(rng);
  }
  return set;
}

/// count_total / 4 evenly spaced points on each side, exactly on the boundary,
/// labelled with g. The seed draws one phase offset per side.
inline PointSet sample_boundary(int count_total, const BoundaryInterpolant& g, std::uint64_t seed) {
  require(count_total >= 4 && count_total % 4 == 0, "sample_boundary: count must be a positive multiple of 4");
  const int per_side = count_total / 4;
  std::mt19937_64 rng(splitmix64(seed ^ 0xB0DAu));
  PointSet set;
  set.role = PointRole::boundary;
  set.points.reserve(static_cast<std::size_t>(count_total));
  set.labels.reserve(static_cast<std::size_t>(count_total));
  for (int side = 0; side < 4; ++side) {
    const double phase = static_cast<double>(rng() >> 11) * 0x1p-53;
    for (int k = 0; k < per_side; ++k) {
      const double arc = side + (k + phase) / per_side;
      set.points.push_back(boundary_to_xy(arc));
      set.labels.push_back(g(arc));
    }
  }
  return set;
}

/// Boundary points with known values, interpolated into the interior by IDW.
struct BcAnchorSet {
  std::vector<Point2> points;
  std::vector<double> values;
  double epsilon = 1e-12;
};

/// per_side anchors on each side at the centers of equal sub-segments, so no
/// corner is shared between sides.
inline BcAnchorSet build_anchors(int per_side, const BoundaryInterpolant& g, double epsilon = 1e-12) {
  require(per_side >= 1, "build_anchors: per_side must be >= 1");
  require(epsilon > 0.0, "build_anchors: epsilon must be positive");
  BcAnchorSet set;
  set.epsilon = epsilon;
  for (int side = 0; side < 4; ++side) {
    for (int k = 0; k < per_side; ++k) {
      const double arc = side + (k + 0.5) / per_side;
      set.points.push_back(boundary_to_xy(arc));
      set.values.push_back(g(arc));
    }
  }
  return set;
}

/// G(x) = sum_i w_i z_i / sum_i w_i with w_i = 1 / (|x - x_i| + eps).
inline Jet2 idw_jet(const BcAnchorSet& anchors, double x, double y) {
  require(!anchors.points.empty(), "idw_jet: anchor set is empty");
  Jet2 weights, weighted;
  double zmin = anchors.values.front(), zmax = zmin;
  for (std::size_t i = 0; i < anchors.points.size(); ++i) {
    const double dx = x - anchors.points[i].x;
    const double dy = y - anchors.points[i].y;
    const double d = std::hypot(dx, dy);
    const double inv = 1.0 / (d + anchors.epsilon);
    Jet2 w = Jet2::constant(inv);
    if (d > 0.0) {
      // w = u(d): u' = -inv^2, u'' = 2 inv^3; derivatives of d are those of the Euclidean norm.
      const double u1 = -inv * inv, u2 = 2.0 * inv * inv * inv;
      const double nx = dx / d, ny = dy / d, d3 = d * d * d;
      w.gx = u1 * nx;
      w.gy = u1 * ny;
      w.hxx = u2 * nx * nx + u1 * dy * dy / d3;
      w.hxy = u2 * nx * ny - u1 * dx * dy / d3;
      w.hyy = u2 * ny * ny + u1 * dx * dx / d3;
    }
    weights += w;
    weighted += anchors.values[i] * w;
    zmin = std::min(zmin, anchors.values[i]);
    zmax = std::max(zmax, anchors.values[i]);
  }
  Jet2 G = weighted / weights;
  // G is a convex combination; keep rounding from leaving the hull.
  G.v = std::clamp(G.v, zmin, zmax);
  return G;
}

/// phi(x, y) = x (1 - x) y (1 - y), zero on the whole boundary.
inline Jet2 filter_phi_jet(double x, double y) {
  const double px = x * (1.0 - x), py = y * (1.0 - y);
  const double dpx = 1.0 - 2.0 * x, dpy = 1.0 - 2.0 * y;
  return {px * py, dpx * py, px * dpy, -2.0 * py, dpx * dpy, -2.0 * px};
}

/// Jet of G + phi * N from component jets.
inline Jet2 compose_exact(const Jet2& G, const Jet2& phi, const Jet2& N) { return G + phi * N; }

/// Adjoint of compose_exact with respect to N: maps d(loss)/d(prediction jet)
/// to d(loss)/d(network jet).
inline Jet2 compose_exact_adjoint(const Jet2& phi, const Jet2& pbar) {
  return {pbar.v * phi.v + pbar.gx * phi.gx + pbar.gy * phi.gy + pbar.hxx * phi.hxx + pbar.hxy * phi.hxy +
              pbar.hyy * phi.hyy,
          pbar.gx * phi.v + 2.0 * pbar.hxx * phi.gx + pbar.hxy * phi.gy,
          pbar.gy * phi.v + 2.0 * pbar.hyy * phi.gy + pbar.hxy * phi.gx,
          pbar.hxx * phi.v,
          pbar.hxy * phi.v,
          pbar.hyy * phi.v};
}

struct SoftPredictor {
  MlpParams network;
};

struct ExactPredictor {
  MlpParams network;
  BcAnchorSet anchors;
};

using Predictor = std::variant<SoftPredictor, ExactPredictor>;

inline const MlpParams& network_of(const Predictor& p) {
  return std::visit([](const auto& v) -> const MlpParams& { return v.network; }, p);
}
inline MlpParams& network_of(Predictor& p) {
  return std::visit([](auto& v) -> MlpParams& { return v.network; }, p);
}

inline Jet2 exact_predict_jet(const ExactPredictor& pred, double x, double y) {
  return compose_exact(idw_jet(pred.anchors, x, y), filter_phi_jet(x, y), forward_jet(pred.network, x, y));
}

inline Jet2 predict_jet(const Predictor& pred, double x, double y) {
  if (const auto* e = std::get_if<ExactPredictor>(&pred)) return exact_predict_jet(*e, x, y);
  return forward_jet(std::get<SoftPredictor>(pred).network, x, y);
}

inline double predict(const Predictor& pred, double x, double y) {
  if (const auto* e = std::get_if<ExactPredictor>(&pred)) {
    const double phi = filter_phi_jet(x, y).v;
    const double G = idw_jet(e->anchors, x, y).v;
    // phi vanishes on the boundary; the network term then contributes nothing.
    return phi == 0.0 ? G : G + phi * forward(e->network, x, y);
  }
  return forward(std::get<SoftPredictor>(pred).network, x, y);
}

inline std::vector<double> predict_batch(const Predictor& pred, std::span<const Point2> pts) {
  std::vector<double> out = forward_batch(network_of(pred), pts);
  if (const auto* e = std::get_if<ExactPredictor>(&pred)) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double phi = filter_phi_jet(pts[k].x, pts[k].y).v;
      out[k] = idw_jet(e->anchors, pts[k].x, pts[k].y).v + (phi == 0.0 ? 0.0 : phi * out[k]);
    }
  }
  return out;
}

}  // namespace pinnbc
