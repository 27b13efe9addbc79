#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pinnbc/bc.hpp"
#include "pinnbc/error.hpp"
#include "pinnbc/grid.hpp"
#include "pinnbc/refsolver.hpp"
#include "pinnbc/train.hpp"

namespace pinnbc {

/// Nodes with |truth| at or below this are left out of the MAPE mean.
inline constexpr double kMapeThreshold = 1e-8;

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape_percent = 0.0;
};

inline Metrics metrics(const GridField& pred, const GridField& truth) {
  require(pred.n == truth.n && pred.values.size() == truth.values.size(), "metrics: grid shapes differ");
  require(!truth.values.empty(), "metrics: empty grid");
  Metrics m;
  double ape = 0.0;
  std::size_t ape_count = 0;
  for (std::size_t k = 0; k < truth.values.size(); ++k) {
    const double e = pred.values[k] - truth.values[k];
    m.mae += std::abs(e);
    m.rmse += e * e;
    if (std::abs(truth.values[k]) > kMapeThreshold) {
      ape += std::abs(e) / std::abs(truth.values[k]);
      ++ape_count;
    }
  }
  const auto n = static_cast<double>(truth.values.size());
  m.mae /= n;
  m.rmse = std::sqrt(m.rmse / n);
  m.mape_percent = ape_count ? 100.0 * ape / static_cast<double>(ape_count) : 0.0;
  return m;
}

/// Mean absolute error over boundary nodes only.
inline double boundary_mae(const GridField& pred, const GridField& truth) {
  require(pred.n == truth.n, "boundary_mae: grid shapes differ");
  double s = 0.0;
  int count = 0;
  for (int j = 0; j < truth.n; ++j)
    for (int i = 0; i < truth.n; ++i)
      if (truth.on_boundary(i, j)) {
        s += std::abs(pred(i, j) - truth(i, j));
        ++count;
      }
  return s / count;
}

inline GridField predict_grid(const Predictor& pred, int n) {
  GridField out(n);
  std::vector<Point2> pts;
  pts.reserve(out.values.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pts.push_back({out.x(i), out.y(j)});
  out.values = predict_batch(pred, pts);
  return out;
}

struct MetricsRecord {
  Metrics metrics;
  double avg_epoch_seconds = 0.0;
  int dataset_id = 0;
  BcKind kind = BcKind::soft;
  EquationVariant variant = EquationVariant::poisson;
};

struct Evaluation {
  MetricsRecord record;
  GridField prediction;
  GridField error;  // |prediction - truth|
  double boundary_mae = 0.0;
};

inline Evaluation evaluate_against(const Predictor& pred, const GridField& truth, int dataset_id,
                                   EquationVariant variant, double avg_epoch_seconds = 0.0) {
  Evaluation ev;
  ev.prediction = predict_grid(pred, truth.n);
  ev.error = GridField(truth.n);
  for (std::size_t k = 0; k < truth.values.size(); ++k)
    ev.error.values[k] = std::abs(ev.prediction.values[k] - truth.values[k]);
  ev.record.metrics = metrics(ev.prediction, truth);
  ev.record.avg_epoch_seconds = avg_epoch_seconds;
  ev.record.dataset_id = dataset_id;
  ev.record.kind = std::holds_alternative<ExactPredictor>(pred) ? BcKind::exact : BcKind::soft;
  ev.record.variant = variant;
  ev.boundary_mae = boundary_mae(ev.prediction, truth);
  return ev;
}

/// Samples the predictor on the grid and scores it against the finite-difference
/// ground truth of the chosen variant.
inline Evaluation evaluate_model(const Predictor& pred, const DatasetInstance& inst, EquationVariant variant,
                                 int resolution, double avg_epoch_seconds = 0.0) {
  const auto truth = reference_solution(inst, variant, resolution);
  return evaluate_against(pred, truth.field, inst.id, variant, avg_epoch_seconds);
}

struct ComparisonRow {
  MetricsRecord soft;
  MetricsRecord exact;
  Metrics delta;  // exact - soft
};

inline ComparisonRow compare(MetricsRecord first, MetricsRecord second) {
  require(first.dataset_id == second.dataset_id, "compare: dataset ids differ");
  require(first.variant == second.variant, "compare: variants differ");
  require(first.kind != second.kind, "compare: need one soft and one exact record");
  if (first.kind == BcKind::exact) std::swap(first, second);
  return {first, second,
          {second.metrics.mae - first.metrics.mae, second.metrics.rmse - first.metrics.rmse,
           second.metrics.mape_percent - first.metrics.mape_percent}};
}

/// Three significant figures with a bare exponent, e.g. 4.97e-2.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;  // inf / nan
  const int exponent = std::stoi(s.substr(e + 1));
  return s.substr(0, e + 1) + std::to_string(exponent);
}

inline std::string format_fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

inline std::string format_percent(double v) { return format_fixed(v, 2) + "%"; }

inline std::string kind_label(BcKind k) { return k == BcKind::soft ? "Soft" : "Exact"; }

/// Aligned plain-text table, one Soft and one Exact row per comparison.
inline std::string render_table(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"Dataset #", "BC Type", "MAE", "RMSE", "MAPE", "Avg. time / epoch (sec)"}};
  for (const auto& row : rows) {
    for (const auto* rec : {&row.soft, &row.exact}) {
      cells.push_back({rec == &row.soft ? std::to_string(rec->dataset_id) : "", kind_label(rec->kind),
                       format_sci(rec->metrics.mae), format_sci(rec->metrics.rmse),
                       format_percent(rec->metrics.mape_percent), format_fixed(rec->avg_epoch_seconds, 2)});
    }
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& r : cells)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  for (const auto& r : cells) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c + 1 < r.size())
        os << std::left << std::setw(static_cast<int>(width[c])) << r[c] << "  ";
      else
        os << r[c] << "\n";
    }
  }
  return os.str();
}

inline std::string render_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "dataset,variant,bc_type,mae,rmse,mape_percent,avg_epoch_seconds\n";
  for (const auto& row : rows) {
    for (const auto* rec : {&row.soft, &row.exact}) {
      os << rec->dataset_id << ',' << to_string(rec->variant) << ',' << to_string(rec->kind) << ','
         << format_sci(rec->metrics.mae) << ',' << format_sci(rec->metrics.rmse) << ','
         << format_fixed(rec->metrics.mape_percent, 2) << ',' << format_fixed(rec->avg_epoch_seconds, 2) << '\n';
    }
  }
  return os.str();
}

}  // namespace pinnbc
