#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pinnbc/eval.hpp"

using namespace pinnbc;

namespace {

GridField grid_of(int n, std::vector<double> v) {
  GridField g(n);
  g.values = std::move(v);
  return g;
}

GridField random_grid(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  GridField g(n);
  for (auto& v : g.values) v = d(rng);
  return g;
}

MetricsRecord record(int id, BcKind k, double mae, double rmse, double mape, double secs) {
  MetricsRecord r;
  r.dataset_id = id;
  r.kind = k;
  r.metrics = {mae, rmse, mape};
  r.avg_epoch_seconds = secs;
  return r;
}

}  // namespace

TEST(Metrics, HandExample) {
  const auto truth = grid_of(2, {1.0, -2.0, 4.0, 0.0});
  const auto pred = grid_of(2, {1.5, -2.0, 3.0, 0.25});
  const auto m = metrics(pred, truth);
  EXPECT_DOUBLE_EQ(m.mae, (0.5 + 0.0 + 1.0 + 0.25) / 4);
  EXPECT_DOUBLE_EQ(m.rmse, std::sqrt((0.25 + 0.0 + 1.0 + 0.0625) / 4));
  // The zero truth node is excluded from MAPE.
  EXPECT_DOUBLE_EQ(m.mape_percent, 100.0 * (0.5 + 0.0 + 0.25) / 3);
}

TEST(Metrics, PerfectPredictionAndAllZeroTruth) {
  const auto g = random_grid(9, 1);
  const auto m = metrics(g, g);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mape_percent, 0.0);
  const auto z = metrics(random_grid(5, 2), GridField(5));
  EXPECT_EQ(z.mape_percent, 0.0);
  EXPECT_GT(z.mae, 0.0);
}

TEST(Metrics, Properties) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = random_grid(11, 10 + s), b = random_grid(11, 100 + s);
    const auto ab = metrics(a, b), ba = metrics(b, a);
    EXPECT_LE(ab.mae, ab.rmse + 1e-15);
    EXPECT_NEAR(ab.mae, ba.mae, 1e-15);
    EXPECT_NEAR(ab.rmse, ba.rmse, 1e-15);
    GridField a2 = a, b2 = b;
    for (auto& v : a2.values) v *= 3.0;
    for (auto& v : b2.values) v *= 3.0;
    const auto scaled = metrics(a2, b2);
    EXPECT_NEAR(scaled.mae, 3.0 * ab.mae, 1e-12);
    EXPECT_NEAR(scaled.rmse, 3.0 * ab.rmse, 1e-12);
    EXPECT_NEAR(scaled.mape_percent, ab.mape_percent, 1e-9);
  }
  EXPECT_THROW(metrics(GridField(3), GridField(4)), Error);
}

TEST(BoundaryMae, OnlyBoundaryNodes) {
  GridField truth(4), pred(4);
  pred(1, 1) = 10.0;  // interior: ignored
  pred(0, 2) = 1.2;   // one of 12 boundary nodes
  EXPECT_DOUBLE_EQ(boundary_mae(pred, truth), 0.1);
}

TEST(Evaluate, ZeroPredictorAgainstZeroBoundaryTruth) {
  const auto inst = generate_instance(2, reference_ranges(2), 1);
  const auto truth = reference_solution(inst, EquationVariant::poisson_zero_bc, 33);
  MlpParams zero = init_params({2, 4, 1}, 0);
  for (auto& l : zero.layers) l.weight.setZero();
  const auto ev = evaluate_against(SoftPredictor{zero}, truth.field, 2, EquationVariant::poisson_zero_bc, 1.5);
  double mae = 0.0, sq = 0.0;
  for (double v : truth.field.values) {
    mae += std::abs(v);
    sq += v * v;
  }
  const double n = static_cast<double>(truth.field.values.size());
  EXPECT_NEAR(ev.record.metrics.mae, mae / n, 1e-14);
  EXPECT_NEAR(ev.record.metrics.rmse, std::sqrt(sq / n), 1e-14);
  EXPECT_NEAR(ev.record.metrics.mape_percent, 100.0, 1e-9);
  EXPECT_EQ(ev.boundary_mae, 0.0);
  EXPECT_EQ(ev.record.kind, BcKind::soft);
  EXPECT_EQ(ev.record.dataset_id, 2);
  EXPECT_EQ(ev.record.avg_epoch_seconds, 1.5);
  for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(ev.error.values[k], std::abs(truth.field.values[k]));
}

TEST(Evaluate, PredictGridSamplesNodes) {
  const auto net = init_params({2, 8, 1}, 4);
  const auto g = predict_grid(SoftPredictor{net}, 5);
  EXPECT_NEAR(g(1, 3), forward(net, 0.25, 0.75), 1e-12);
  EXPECT_NEAR(g(4, 0), forward(net, 1.0, 0.0), 1e-12);
}

TEST(Compare, OrdersSoftFirstAndTakesExactMinusSoft) {
  const auto soft = record(0, BcKind::soft, 4.97e-2, 7.01e-2, 114.55, 1.78);
  const auto exact = record(0, BcKind::exact, 4.29e-2, 6.46e-2, 116.48, 1.86);
  for (const auto& row : {compare(soft, exact), compare(exact, soft)}) {
    EXPECT_EQ(row.soft.kind, BcKind::soft);
    EXPECT_EQ(row.exact.kind, BcKind::exact);
    EXPECT_NEAR(row.delta.mae, 4.29e-2 - 4.97e-2, 1e-15);
    EXPECT_NEAR(row.delta.rmse, 6.46e-2 - 7.01e-2, 1e-15);
    EXPECT_NEAR(row.delta.mape_percent, 116.48 - 114.55, 1e-12);
  }
  EXPECT_THROW(compare(soft, soft), Error);
  EXPECT_THROW(compare(soft, record(1, BcKind::exact, 0, 0, 0, 0)), Error);
}

TEST(Format, TableCells) {
  EXPECT_EQ(format_sci(0.04968), "4.97e-2");
  EXPECT_EQ(format_sci(0.0701), "7.01e-2");
  EXPECT_EQ(format_sci(0.00219), "2.19e-3");
  EXPECT_EQ(format_sci(12.5), "1.25e1");
  EXPECT_EQ(format_sci(0.0), "0.00e0");
  EXPECT_EQ(format_percent(114.554), "114.55%");
  EXPECT_EQ(format_fixed(1.777, 2), "1.78");
}

TEST(Format, TableLayout) {
  const auto row = compare(record(0, BcKind::soft, 4.97e-2, 7.01e-2, 114.55, 1.78),
                           record(0, BcKind::exact, 4.29e-2, 6.46e-2, 116.48, 1.86));
  const auto t = render_table({row});
  std::istringstream is(t);
  std::string header, soft, exact;
  std::getline(is, header);
  std::getline(is, soft);
  std::getline(is, exact);
  EXPECT_EQ(header.rfind("Dataset #", 0), 0u);
  EXPECT_NE(header.find("Avg. time / epoch (sec)"), std::string::npos);
  EXPECT_EQ(soft.rfind("0", 0), 0u);
  EXPECT_NE(soft.find("Soft"), std::string::npos);
  EXPECT_NE(soft.find("4.97e-2"), std::string::npos);
  EXPECT_NE(soft.find("114.55%"), std::string::npos);
  EXPECT_NE(exact.find("Exact"), std::string::npos);
  EXPECT_NE(exact.find("1.86"), std::string::npos);
  // Columns line up.
  EXPECT_EQ(soft.find("Soft"), exact.find("Exact"));
  EXPECT_EQ(header.find("MAE"), soft.find("4.97e-2"));

  const auto csv = render_csv({row});
  EXPECT_NE(csv.find("0,poisson,soft,4.97e-2,7.01e-2,114.55,1.78"), std::string::npos);
  EXPECT_NE(csv.find("0,poisson,exact,4.29e-2,6.46e-2,116.48,1.86"), std::string::npos);
}
