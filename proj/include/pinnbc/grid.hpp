#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "pinnbc/error.hpp"

namespace pinnbc {

/// Node-sampled field over the unit square. Node (i, j) sits at (i h, j h)
/// and is stored at values[j * n + i].
struct GridField {
  int n = 0;
  std::vector<double> values;

  GridField() = default;
  explicit GridField(int nodes, double fill = 0.0)
      : n(nodes), values(static_cast<std::size_t>(nodes) * nodes, fill) {
    require(nodes >= 2, "GridField: need at least 2 nodes per side");
  }

  double h() const { return 1.0 / (n - 1); }
  double x(int i) const { return static_cast<double>(i) / (n - 1); }
  double y(int j) const { return static_cast<double>(j) / (n - 1); }

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(j) * n + i]; }
  double operator()(int i, int j) const { return values[static_cast<std::size_t>(j) * n + i]; }

  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == n - 1 || j == n - 1; }

  template <class Fn>
  static GridField sample(int nodes, Fn&& fn) {
    GridField g(nodes);
    for (int j = 0; j < nodes; ++j)
      for (int i = 0; i < nodes; ++i) g(i, j) = fn(g.x(i), g.y(j));
    return g;
  }
};

enum class EquationVariant { poisson, laplace, poisson_zero_bc };

inline std::string_view to_string(EquationVariant v) {
  switch (v) {
    case EquationVariant::poisson: return "poisson";
    case EquationVariant::laplace: return "laplace";
    case EquationVariant::poisson_zero_bc: return "poisson0";
  }
  return "poisson";
}

inline EquationVariant parse_variant(std::string_view s) {
  if (s == "poisson") return EquationVariant::poisson;
  if (s == "laplace") return EquationVariant::laplace;
  if (s == "poisson0") return EquationVariant::poisson_zero_bc;
  throw Error(ErrorKind::invalid_argument, "unknown variant '" + std::string(s) + "'");
}

inline bool uses_rhs(EquationVariant v) { return v != EquationVariant::laplace; }
inline bool uses_boundary(EquationVariant v) { return v != EquationVariant::poisson_zero_bc; }

}  // namespace pinnbc
