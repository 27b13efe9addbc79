#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pinnbc/datagen.hpp"

using namespace pinnbc;

namespace {

KnotSet2D sobol_knots(int n, double lo, double hi, std::uint32_t key) {
  KnotSet2D k = place_knots(n);
  SobolStream s{1, lo, hi, key};
  for (std::size_t i = 0; i < k.coords.size(); ++i) k.values.push_back(sobol_next(s));
  return k;
}

}  // namespace

TEST(Sobol, RadicalInverseOfFirstIndices) {
  SobolStream s{1, 0.0, 1.0, 0};
  EXPECT_DOUBLE_EQ(sobol_next(s), 0.5);
  EXPECT_DOUBLE_EQ(sobol_next(s), 0.25);
  EXPECT_DOUBLE_EQ(sobol_next(s), 0.75);
  EXPECT_DOUBLE_EQ(sobol_next(s), 0.125);
  EXPECT_EQ(s.index, 5u);
}

TEST(Sobol, AffineMapOntoRange) {
  SobolStream mid{1, -10.0, 10.0, 0};
  EXPECT_DOUBLE_EQ(sobol_next(mid), 0.0);
  SobolStream second{2, -1.0, 1.0, 0};
  EXPECT_DOUBLE_EQ(sobol_next(second), -0.5);
}

TEST(Sobol, ScrambledValuesStayInRangeAndAreDeterministic) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t key = rng();
    SobolStream a{1, -3.0, 2.0, key}, b{1, -3.0, 2.0, key};
    for (int i = 0; i < 200; ++i) {
      const double va = sobol_next(a);
      EXPECT_GE(va, -3.0);
      EXPECT_LE(va, 2.0);
      EXPECT_EQ(va, sobol_next(b));
    }
  }
}

TEST(Sobol, ZeroIndexRejected) {
  SobolStream s{0, 0.0, 1.0, 0};
  EXPECT_THROW(sobol_next(s), Error);
}

TEST(Sobol, SubstreamsDifferPerVariableAndDataset) {
  EXPECT_NE(substream_key(0, 0, FieldVariable::a), substream_key(0, 0, FieldVariable::f));
  EXPECT_NE(substream_key(0, 0, FieldVariable::a), substream_key(0, 1, FieldVariable::a));
  EXPECT_NE(substream_key(0, 0, FieldVariable::g), substream_key(1, 0, FieldVariable::g));
}

TEST(Knots, CornerLattice) {
  const auto k = place_knots(2);
  ASSERT_EQ(k.coords.size(), 4u);
  EXPECT_EQ(k.coords[0], (Point2{0, 0}));
  EXPECT_EQ(k.coords[1], (Point2{1, 0}));
  EXPECT_EQ(k.coords[2], (Point2{0, 1}));
  EXPECT_EQ(k.coords[3], (Point2{1, 1}));
}

TEST(Knots, FourByFourSpacing) {
  const auto k = place_knots(4);
  ASSERT_EQ(k.coords.size(), 16u);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(k.coords[j * 4 + i + 1].x - k.coords[j * 4 + i].x, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(k.coords.back(), (Point2{1, 1}));
}

TEST(Knots, ThreeLatticeHasCenter) {
  const auto k = place_knots(3);
  EXPECT_NE(std::find(k.coords.begin(), k.coords.end(), Point2{0.5, 0.5}), k.coords.end());
}

TEST(Knots, TooFewRejected) { EXPECT_THROW(place_knots(1), Error); }

TEST(FieldInterpolant, ConstantReproduction) {
  KnotSet2D k = place_knots(4);
  k.values.assign(16, 2.75);
  const auto field = fit_field(k, default_field_lengthscale(4));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) EXPECT_NEAR(field(u(rng), u(rng)), 2.75, 1e-6);
  const auto j = field.jet(0.3, 0.6);
  EXPECT_NEAR(j.v, 2.75, 1e-6);
  EXPECT_EQ(j.gx, 0.0);
  EXPECT_EQ(j.gy, 0.0);
  EXPECT_EQ(j.hxx, 0.0);
  EXPECT_EQ(j.hxy, 0.0);
  EXPECT_EQ(j.hyy, 0.0);
}

TEST(FieldInterpolant, ReproducesKnotValues) {
  for (int n : {2, 3, 4, 6}) {
    const auto k = sobol_knots(n, -10.0, 10.0, 0xABCDu + n);
    const auto field = fit_field(k, default_field_lengthscale(n));
    for (std::size_t i = 0; i < k.coords.size(); ++i)
      EXPECT_NEAR(field(k.coords[i].x, k.coords[i].y), k.values[i], 1e-8) << "n=" << n << " knot " << i;
  }
}

TEST(FieldInterpolant, ExtremaNearKnotRange) {
  const auto k = sobol_knots(4, -10.0, 10.0, 0x1234u);
  const auto field = fit_field(k, default_field_lengthscale(4));
  const double kmin = *std::min_element(k.values.begin(), k.values.end());
  const double kmax = *std::max_element(k.values.begin(), k.values.end());
  const double slack = 0.2 * (kmax - kmin);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int j = 0; j < 128; ++j)
    for (int i = 0; i < 128; ++i) {
      const double v = field(i / 127.0, j / 127.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  EXPECT_GE(lo, kmin - slack);
  EXPECT_LE(hi, kmax + slack);
}

TEST(FieldInterpolant, JetMatchesFiniteDifferences) {
  const auto k = sobol_knots(4, -10.0, 10.0, 0x77u);
  const auto field = fit_field(k, default_field_lengthscale(4));
  const double h = 1e-5;
  const auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1.0); };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int t = 0; t < 100; ++t) {
    const double x = u(rng), y = u(rng);
    const auto j = field.jet(x, y);
    EXPECT_NEAR(j.v, field(x, y), 1e-12);
    const double fdx = (field(x + h, y) - field(x - h, y)) / (2 * h);
    const double fdy = (field(x, y + h) - field(x, y - h)) / (2 * h);
    EXPECT_LT(rel(j.gx, fdx), 1e-5);
    EXPECT_LT(rel(j.gy, fdy), 1e-5);
    const auto jxp = field.jet(x + h, y), jxm = field.jet(x - h, y);
    const auto jyp = field.jet(x, y + h), jym = field.jet(x, y - h);
    EXPECT_LT(rel(j.hxx, (jxp.gx - jxm.gx) / (2 * h)), 1e-5);
    EXPECT_LT(rel(j.hyy, (jyp.gy - jym.gy) / (2 * h)), 1e-5);
    EXPECT_LT(rel(j.hxy, (jyp.gx - jym.gx) / (2 * h)), 1e-5);
    EXPECT_LT(rel(j.hxy, (jxp.gy - jxm.gy) / (2 * h)), 1e-5);
  }
}

TEST(FieldInterpolant, DuplicateKnotsNeedJitter) {
  KnotSet2D k;
  k.n = 2;
  k.coords = {{0.2, 0.2}, {0.2, 0.2}, {0.8, 0.8}};
  k.values = {1.0, 1.0, 0.0};
  const auto field = fit_field(k, 0.3);
  EXPECT_TRUE(field.report().jitter_applied);
}

TEST(FieldInterpolant, NonFiniteKernelIsFitFailure) {
  KnotSet2D k;
  k.n = 2;
  k.coords = {{0.0, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 1.0}};
  k.values = {1.0, 2.0};
  try {
    fit_field(k, 0.5);
    FAIL() << "expected fit failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::fit_failure);
  }
}

TEST(FieldInterpolant, RejectsBadLengthscale) {
  KnotSet2D k = place_knots(2);
  k.values = {0, 1, 2, 3};
  EXPECT_THROW(fit_field(k, 0.0), Error);
}

TEST(BoundaryToXy, WalksCounterclockwise) {
  EXPECT_EQ(boundary_to_xy(0.5), (Point2{0.5, 0.0}));
  EXPECT_EQ(boundary_to_xy(1.5), (Point2{1.0, 0.5}));
  EXPECT_EQ(boundary_to_xy(3.25), (Point2{0.0, 0.75}));
  EXPECT_EQ(boundary_to_xy(2.5), (Point2{0.5, 1.0}));
  EXPECT_EQ(boundary_to_xy(0.0), (Point2{0.0, 0.0}));
}

TEST(BoundaryToXy, WrapsOutOfRangeArcs) {
  EXPECT_EQ(boundary_to_xy(4.5), (Point2{0.5, 0.0}));
  EXPECT_EQ(boundary_to_xy(-0.5), (Point2{0.0, 0.5}));
  EXPECT_EQ(boundary_to_xy(8.0), (Point2{0.0, 0.0}));
}

TEST(BoundaryToXy, ArcRoundTrip) {
  for (int k = 0; k < 400; ++k) {
    const double arc = k / 100.0;
    const auto p = boundary_to_xy(arc);
    EXPECT_NEAR(xy_to_arc(p.x, p.y), arc, 1e-12) << arc;
  }
}

TEST(BoundaryInterpolant, ConstantAndKnotReproduction) {
  const auto flat = fit_boundary({0.0, 1.0, 2.0, 3.0}, {-0.4, -0.4, -0.4, -0.4}, 0.75);
  for (double s = 0.0; s < 4.0; s += 0.13) EXPECT_NEAR(flat(s), -0.4, 1e-12);

  std::vector<double> pos, val;
  SobolStream st{1, -1.0, 1.0, 99};
  for (int k = 0; k < 8; ++k) {
    pos.push_back(0.5 * k);
    val.push_back(sobol_next(st));
  }
  const auto g = fit_boundary(pos, val, default_boundary_lengthscale(8));
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(g(pos[k]), val[k], 1e-8);
}

TEST(BoundaryInterpolant, PeriodicSeam) {
  const auto g = fit_boundary({0.3, 1.1, 2.0, 2.9, 3.7}, {0.2, -0.9, 0.5, 0.1, -0.3}, 0.75);
  EXPECT_NEAR(g(0.0), g(4.0 - 1e-12), 1e-9);
  EXPECT_NEAR(g(0.0), g(4.0), 1e-12);
  EXPECT_NEAR(g.derivative(0.0), g.derivative(4.0), 1e-8);
  const double h = 1e-6;
  EXPECT_NEAR(g.derivative(1.3), (g(1.3 + h) - g(1.3 - h)) / (2 * h), 1e-6);
}

TEST(BoundaryInterpolant, RejectsBadKnots) {
  EXPECT_THROW(fit_boundary({0.5}, {1.0}, 0.5), Error);
  EXPECT_THROW(fit_boundary({0.5, 4.0}, {1.0, 2.0}, 0.5), Error);
}

TEST(GenerateInstance, ReferenceRanges) {
  const auto r0 = reference_ranges(0);
  EXPECT_EQ(r0.a, (ValueRange{-1, 1}));
  EXPECT_EQ(r0.f, (ValueRange{-10, 10}));
  EXPECT_EQ(r0.g, (ValueRange{-1, 1}));
  EXPECT_EQ(reference_ranges(2).f, (ValueRange{-1, 1}));
  EXPECT_EQ(reference_ranges(1), r0);
  EXPECT_EQ(reference_ranges(3), r0);
}

TEST(GenerateInstance, KnotsInsideDeclaredRanges) {
  for (int id = 0; id < 4; ++id) {
    const auto inst = generate_instance(id, reference_ranges(id), 42);
    const auto inside = [](const std::vector<double>& v, ValueRange r) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x >= r.min && x <= r.max; });
    };
    EXPECT_TRUE(inside(inst.a.knots().values, inst.ranges.a));
    EXPECT_TRUE(inside(inst.f.knots().values, inst.ranges.f));
    EXPECT_TRUE(inside(inst.g.values(), inst.ranges.g));
    EXPECT_EQ(inst.g.values().size(), 8u);
    EXPECT_EQ(inst.resolution, 128);
  }
}

TEST(GenerateInstance, DeterministicAndIndependent) {
  const auto a = generate_instance(1, reference_ranges(1), 5);
  const auto b = generate_instance(1, reference_ranges(1), 5);
  EXPECT_EQ(a.a.knots().values, b.a.knots().values);
  EXPECT_EQ(a.f.weights(), b.f.weights());
  EXPECT_EQ(a.g.values(), b.g.values());
  // a and f come from different substreams: their normalized knot values differ.
  std::vector<double> fa = a.f.knots().values;
  for (auto& v : fa) v /= 10.0;
  EXPECT_NE(a.a.knots().values, fa);
}

TEST(GenerateInstance, InvalidRangeRejected) {
  DatasetRanges r;
  r.f = {1.0, 1.0};
  EXPECT_THROW(generate_instance(0, r, 0), Error);
}
