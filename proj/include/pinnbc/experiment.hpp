#pragma once

// Experiment orchestration behind the command-line tool. Output layout:
//   <out>/<dataset>/dataset.json, a.f64, f.f64, g.f64
//   <out>/<dataset>/solve.json
//   <out>/<dataset>/<variant>/truth.json, truth.f64, panels/
//   <out>/<dataset>/<variant>/<kind>/model.json, model.bin, log.csv, metrics.json, prediction.f64, panels/
//   <out>/report/table.txt, table.csv, report.json
//   <out>/index.json

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinnbc/datagen.hpp"
#include "pinnbc/eval.hpp"
#include "pinnbc/io.hpp"
#include "pinnbc/png.hpp"
#include "pinnbc/refsolver.hpp"
#include "pinnbc/train.hpp"

namespace pinnbc {

using nlohmann::json;
namespace fs = std::filesystem;

struct ExperimentConfig {
  std::vector<int> datasets{0, 1, 2, 3};
  std::map<int, DatasetRanges> ranges;  // ids missing here use reference_ranges
  std::vector<EquationVariant> variants{EquationVariant::poisson, EquationVariant::laplace,
                                        EquationVariant::poisson_zero_bc};
  std::vector<BcKind> kinds{BcKind::soft, BcKind::exact};
  GenerationOptions generation;
  TrainConfig train;
  double solver_tol = 1e-10;
  int solver_max_iter = 20000;
  fs::path out = "out";
  std::uint64_t seed = 0;

  DatasetRanges ranges_for(int id) const {
    const auto it = ranges.find(id);
    return it != ranges.end() ? it->second : reference_ranges(id);
  }

  void validate() const {
    require(!datasets.empty(), "config: no datasets selected");
    for (int id : datasets) require(ranges_for(id).valid(), "config: dataset " + std::to_string(id) + " has min >= max");
    require(generation.resolution >= 3, "config: resolution must be >= 3");
    require(solver_tol > 0.0, "config: solver tolerance must be positive");
    train.validate();
  }
};

inline json train_config_json(const TrainConfig& t) {
  return {{"alpha", t.alpha},
          {"lr0", t.lr0},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"plateau_factor", t.plateau_factor},
          {"patience", t.patience},
          {"min_delta", t.min_delta},
          {"max_epochs", t.max_epochs},
          {"lr_floor", t.lr_floor},
          {"collocation_count", t.collocation_count},
          {"boundary_count", t.boundary_count},
          {"anchors_per_side", t.anchors_per_side},
          {"idw_epsilon", t.idw_epsilon},
          {"widths", t.widths},
          {"seed", t.seed},
          {"record_timing", t.record_timing}};
}

inline void train_config_from(const json& j, TrainConfig& t) {
  t.alpha = j.value("alpha", t.alpha);
  t.lr0 = j.value("lr0", t.lr0);
  t.beta1 = j.value("beta1", t.beta1);
  t.beta2 = j.value("beta2", t.beta2);
  t.adam_eps = j.value("adam_eps", t.adam_eps);
  t.plateau_factor = j.value("plateau_factor", t.plateau_factor);
  t.patience = j.value("patience", t.patience);
  t.min_delta = j.value("min_delta", t.min_delta);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.lr_floor = j.value("lr_floor", t.lr_floor);
  t.collocation_count = j.value("collocation_count", t.collocation_count);
  t.boundary_count = j.value("boundary_count", t.boundary_count);
  t.anchors_per_side = j.value("anchors_per_side", t.anchors_per_side);
  t.idw_epsilon = j.value("idw_epsilon", t.idw_epsilon);
  t.widths = j.value("widths", t.widths);
  t.seed = j.value("seed", t.seed);
  t.record_timing = j.value("record_timing", t.record_timing);
}

inline json config_json(const ExperimentConfig& c) {
  json ranges = json::object();
  for (int id : c.datasets) {
    const auto r = c.ranges_for(id);
    ranges[std::to_string(id)] = {{"a", io::range_json(r.a)}, {"f", io::range_json(r.f)}, {"g", io::range_json(r.g)}};
  }
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(to_string(v));
  json kinds = json::array();
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  return {{"datasets", c.datasets},
          {"ranges", ranges},
          {"variants", variants},
          {"kinds", kinds},
          {"generation",
           {{"n_knots", c.generation.n_knots},
            {"n_boundary_knots", c.generation.n_boundary_knots},
            {"resolution", c.generation.resolution},
            {"field_lengthscale", c.generation.field_lengthscale},
            {"boundary_lengthscale", c.generation.boundary_lengthscale}}},
          {"train", train_config_json(c.train)},
          {"solver", {{"tol", c.solver_tol}, {"max_iter", c.solver_max_iter}}},
          {"out", c.out.string()},
          {"seed", c.seed}};
}

/// Values present in `j` override the defaults already held by `c`.
inline void apply_config_json(const json& j, ExperimentConfig& c) {
  try {
    if (j.contains("datasets")) c.datasets = j.at("datasets").get<std::vector<int>>();
    if (j.contains("ranges")) {
      for (const auto& [key, r] : j.at("ranges").items()) {
        DatasetRanges dr = reference_ranges(std::stoi(key));
        if (r.contains("a")) dr.a = io::range_from(r.at("a"));
        if (r.contains("f")) dr.f = io::range_from(r.at("f"));
        if (r.contains("g")) dr.g = io::range_from(r.at("g"));
        c.ranges[std::stoi(key)] = dr;
      }
    }
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (j.contains("kinds")) {
      c.kinds.clear();
      for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_kind(k.get<std::string>()));
    }
    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      c.generation.n_knots = g.value("n_knots", c.generation.n_knots);
      c.generation.n_boundary_knots = g.value("n_boundary_knots", c.generation.n_boundary_knots);
      c.generation.resolution = g.value("resolution", c.generation.resolution);
      c.generation.field_lengthscale = g.value("field_lengthscale", c.generation.field_lengthscale);
      c.generation.boundary_lengthscale = g.value("boundary_lengthscale", c.generation.boundary_lengthscale);
    }
    if (j.contains("train")) train_config_from(j.at("train"), c.train);
    if (j.contains("solver")) {
      c.solver_tol = j.at("solver").value("tol", c.solver_tol);
      c.solver_max_iter = j.at("solver").value("max_iter", c.solver_max_iter);
    }
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_argument, std::string("bad config value: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Paths

inline fs::path dataset_dir(const ExperimentConfig& c, int id) { return c.out / std::to_string(id); }
inline fs::path variant_dir(const ExperimentConfig& c, int id, EquationVariant v) {
  return dataset_dir(c, id) / std::string(to_string(v));
}
inline fs::path run_dir(const ExperimentConfig& c, int id, EquationVariant v, BcKind k) {
  return variant_dir(c, id, v) / std::string(to_string(k));
}

inline DatasetInstance load_instance(const ExperimentConfig& c, int id) {
  const fs::path p = dataset_dir(c, id) / "dataset.json";
  if (!fs::exists(p)) throw Error(ErrorKind::io_failure, "dataset " + std::to_string(id) + " not generated: " + p.string());
  return io::instance_from_manifest(io::read_json(p));
}

inline GridField load_truth(const ExperimentConfig& c, int id, EquationVariant v) {
  const fs::path dir = variant_dir(c, id, v);
  const json meta = io::read_json(dir / "truth.json");
  if (meta.value("status", "") != "ok")
    throw Error(ErrorKind::solver_failure, "no ground truth for " + dir.string());
  return io::read_raw_grid(dir / "truth.f64", meta.at("resolution").get<int>());
}

// ---------------------------------------------------------------------------
// Commands

/// Generates every configured dataset. All ranges are validated before any
/// file is written.
inline std::vector<fs::path> cmd_gen(const ExperimentConfig& c) {
  c.validate();
  std::vector<fs::path> written;
  for (int id : c.datasets) {
    const DatasetInstance inst = generate_instance(id, c.ranges_for(id), c.seed, c.generation);
    const fs::path dir = dataset_dir(c, id);
    const int n = inst.resolution;
    json manifest = io::manifest_json(inst);
    const GridField a = GridField::sample(n, [&](double x, double y) { return inst.a(x, y); });
    const GridField f = GridField::sample(n, [&](double x, double y) { return inst.f(x, y); });
    std::vector<double> g(static_cast<std::size_t>(4 * (n - 1)));
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = inst.g(static_cast<double>(k) / (n - 1));
    io::write_raw_grid(dir / "a.f64", a);
    io::write_raw_grid(dir / "f.f64", f);
    const auto gb = io::encode_f64le(g);
    io::write_bytes(dir / "g.f64", gb.data(), gb.size());
    manifest["grids"] = {{"a", io::grid_descriptor("a.f64", n)},
                         {"f", io::grid_descriptor("f.f64", n)},
                         {"g",
                          {{"file", "g.f64"},
                           {"shape", {g.size()}},
                           {"dtype", "float64"},
                           {"byte_order", "little"},
                           {"arc_spacing", 1.0 / (n - 1)}}}};
    io::write_json(dir / "dataset.json", manifest);
    written.push_back(dir / "dataset.json");
  }
  return written;
}

struct SolveSummary {
  int dataset = 0;
  EquationVariant variant = EquationVariant::poisson;
  bool ok = false;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  std::string error;
};

/// Ground truth for every (dataset, variant). A solver failure is recorded in
/// the sidecar and the run moves on.
inline std::vector<SolveSummary> cmd_solve(const ExperimentConfig& c) {
  c.validate();
  std::vector<SolveSummary> out;
  for (int id : c.datasets) {
    const DatasetInstance inst = load_instance(c, id);
    std::map<EquationVariant, GridField> fields;
    for (auto v : c.variants) {
      SolveSummary s{id, v};
      json meta{{"dataset", id}, {"variant", to_string(v)}, {"resolution", inst.resolution}, {"tol", c.solver_tol}};
      const fs::path dir = variant_dir(c, id, v);
      try {
        const auto ref = reference_solution(inst, v, inst.resolution, c.solver_tol, c.solver_max_iter);
        io::write_raw_grid(dir / "truth.f64", ref.field);
        fields[v] = ref.field;
        s.ok = true;
        s.residual = ref.residual;
        s.iterations = ref.iterations;
        s.method = ref.method;
        meta["status"] = "ok";
      } catch (const SolverFailure& e) {
        s.residual = e.best().residual;
        s.iterations = e.best().iterations;
        s.method = e.best().method;
        s.error = e.what();
        meta["status"] = "solver-failure";
        meta["error"] = e.what();
      }
      meta["residual"] = s.residual;
      meta["iterations"] = s.iterations;
      meta["method"] = s.method;
      meta["grid"] = io::grid_descriptor("truth.f64", inst.resolution);
      io::write_json(dir / "truth.json", meta);
      out.push_back(s);
    }
    json solve{{"dataset", id}};
    if (fields.size() == 3) {
      const auto& full = fields.at(EquationVariant::poisson);
      const auto& lap = fields.at(EquationVariant::laplace);
      const auto& zero = fields.at(EquationVariant::poisson_zero_bc);
      double worst = 0.0;
      for (std::size_t k = 0; k < full.values.size(); ++k)
        worst = std::max(worst, std::abs(lap.values[k] + zero.values[k] - full.values[k]));
      solve["superposition_max_abs"] = worst;
      solve["superposition_bound"] = 10.0 * c.solver_tol;
      solve["superposition_ok"] = worst <= 10.0 * c.solver_tol;
    }
    io::write_json(dataset_dir(c, id) / "solve.json", solve);
  }
  return out;
}

inline std::string config_hash(const TrainConfig& t) { return io::sha256_hex(train_config_json(t).dump()); }

/// Trains one model and persists weights, log and run metadata. On a training
/// failure the partial log is written before the error propagates.
inline TrainResult cmd_train(const ExperimentConfig& c, BcKind kind, int dataset, EquationVariant variant,
                             std::ostream* progress = nullptr) {
  c.validate();
  const DatasetInstance inst = load_instance(c, dataset);
  const fs::path dir = run_dir(c, dataset, variant, kind);
  const auto report = [&](const EpochRecord& e) {
    if (progress && (e.epoch == 1 || e.epoch % 50 == 0))
      *progress << "[" << dataset << "/" << to_string(variant) << "/" << to_string(kind) << "] epoch " << e.epoch
                << " L_total " << e.l_total << " lr " << e.lr << "\n";
  };
  try {
    TrainResult res = train_model(kind, inst, variant, c.train, report);
    json meta{{"dataset", dataset},
              {"variant", to_string(variant)},
              {"config_hash", config_hash(c.train)},
              {"seed", c.train.seed},
              {"train_config", train_config_json(c.train)},
              {"epochs_run", res.log.epochs.size()},
              {"avg_epoch_seconds", res.log.average_epoch_seconds()}};
    if (kind == BcKind::soft) meta["boundary_samples"] = io::point_set_json(res.data.boundary);
    io::save_predictor(dir / "model", res.predictor, meta);
    io::write_text(dir / "log.csv", io::train_log_csv(res.log));
    return res;
  } catch (const TrainingFailure& e) {
    io::write_text(dir / "log.csv", io::train_log_csv(e.log()));
    io::write_json(dir / "failure.json", {{"error", to_string(e.kind())}, {"message", e.what()}});
    throw;
  }
}

/// Scores one trained model against the stored ground truth.
inline Evaluation cmd_eval_one(const ExperimentConfig& c, BcKind kind, int dataset, EquationVariant variant) {
  const fs::path dir = run_dir(c, dataset, variant, kind);
  const Predictor pred = io::load_predictor(dir / "model");
  const GridField truth = load_truth(c, dataset, variant);
  const json meta = io::read_json(dir / "model.json");
  Evaluation ev = evaluate_against(pred, truth, dataset, variant, meta.value("avg_epoch_seconds", 0.0));
  const auto& m = ev.record.metrics;
  io::write_json(dir / "metrics.json", {{"dataset", dataset},
                                        {"variant", to_string(variant)},
                                        {"bc_kind", to_string(kind)},
                                        {"mae", m.mae},
                                        {"rmse", m.rmse},
                                        {"mape_percent", m.mape_percent},
                                        {"boundary_mae", ev.boundary_mae},
                                        {"avg_epoch_seconds", ev.record.avg_epoch_seconds}});
  io::write_raw_grid(dir / "prediction.f64", ev.prediction);
  return ev;
}

inline std::vector<Evaluation> cmd_eval(const ExperimentConfig& c) {
  std::vector<Evaluation> out;
  for (int id : c.datasets)
    for (auto v : c.variants)
      for (auto k : c.kinds) out.push_back(cmd_eval_one(c, k, id, v));
  return out;
}

inline MetricsRecord read_metrics(const fs::path& p) {
  const json j = io::read_json(p);
  MetricsRecord r;
  r.metrics = {j.at("mae").get<double>(), j.at("rmse").get<double>(), j.at("mape_percent").get<double>()};
  r.avg_epoch_seconds = j.at("avg_epoch_seconds").get<double>();
  r.dataset_id = j.at("dataset").get<int>();
  r.kind = parse_kind(j.at("bc_kind").get<std::string>());
  r.variant = parse_variant(j.at("variant").get<std::string>());
  return r;
}

/// Writes <out>/index.json listing every file under <out> with its SHA-256.
inline void write_index(const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "index.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json list = json::array();
  for (const auto& f : files)
    list.push_back({{"path", fs::relative(f, out).generic_string()}, {"sha256", io::sha256_file(f)},
                    {"bytes", fs::file_size(f)}});
  io::write_json(out / "index.json", {{"files", list}});
}

struct ReportSummary {
  std::vector<ComparisonRow> rows;
  std::vector<std::string> missing;
  int panels_written = 0;
};

/// Heatmap panels and comparison tables for every (dataset, variant). Missing
/// artifacts are listed and the rest of the report is still produced.
inline ReportSummary cmd_report(const ExperimentConfig& c) {
  ReportSummary s;
  for (int id : c.datasets) {
    for (auto v : c.variants) {
      const fs::path vdir = variant_dir(c, id, v);
      std::optional<GridField> truth;
      try {
        truth = load_truth(c, id, v);
      } catch (const Error&) {
        s.missing.push_back((vdir / "truth.f64").string());
      }
      std::map<BcKind, MetricsRecord> recs;
      std::map<BcKind, GridField> preds;
      for (auto k : {BcKind::soft, BcKind::exact}) {
        const fs::path rdir = run_dir(c, id, v, k);
        if (!fs::exists(rdir / "metrics.json") || !fs::exists(rdir / "prediction.f64")) {
          s.missing.push_back((rdir / "metrics.json").string());
          continue;
        }
        recs[k] = read_metrics(rdir / "metrics.json");
        if (truth) preds[k] = io::read_raw_grid(rdir / "prediction.f64", truth->n);
      }
      if (recs.size() == 2) s.rows.push_back(compare(recs.at(BcKind::soft), recs.at(BcKind::exact)));
      if (!truth) continue;

      // One value scale per row shared by truth and predictions; errors anchored at 0.
      double lo = *std::min_element(truth->values.begin(), truth->values.end());
      double hi = *std::max_element(truth->values.begin(), truth->values.end());
      for (const auto& [k, p] : preds) {
        lo = std::min(lo, *std::min_element(p.values.begin(), p.values.end()));
        hi = std::max(hi, *std::max_element(p.values.begin(), p.values.end()));
      }
      std::map<BcKind, GridField> errs;
      double emax = 0.0;
      for (const auto& [k, p] : preds) {
        GridField e(truth->n);
        for (std::size_t i = 0; i < e.values.size(); ++i) e.values[i] = std::abs(p.values[i] - truth->values[i]);
        emax = std::max(emax, *std::max_element(e.values.begin(), e.values.end()));
        errs[k] = std::move(e);
      }
      png::write_heatmap(vdir / "panels" / "truth.png", *truth, lo, hi, png::Colormap::diverging);
      png::write_colorbar(vdir / "panels" / "colorbar_value.png", png::Colormap::diverging);
      png::write_colorbar(vdir / "panels" / "colorbar_error.png", png::Colormap::sequential);
      io::write_json(vdir / "panels" / "scales.json", {{"value", {lo, hi}}, {"error", {0.0, emax}}});
      s.panels_written += 3;
      for (const auto& [k, p] : preds) {
        const fs::path pdir = run_dir(c, id, v, k) / "panels";
        png::write_heatmap(pdir / "prediction.png", p, lo, hi, png::Colormap::diverging);
        png::write_heatmap(pdir / "error.png", errs.at(k), 0.0, emax, png::Colormap::sequential);
        s.panels_written += 2;
      }
    }
  }
  std::sort(s.rows.begin(), s.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return std::pair(a.soft.variant, a.soft.dataset_id) < std::pair(b.soft.variant, b.soft.dataset_id);
  });
  std::string text;
  for (auto v : c.variants) {
    std::vector<ComparisonRow> rows;
    for (const auto& r : s.rows)
      if (r.soft.variant == v) rows.push_back(r);
    if (rows.empty()) continue;
    text += "Variant: " + std::string(to_string(v)) + "\n" + render_table(rows) + "\n";
  }
  const fs::path rdir = c.out / "report";
  io::write_text(rdir / "table.txt", text);
  io::write_text(rdir / "table.csv", render_csv(s.rows));
  json deltas = json::array();
  for (const auto& r : s.rows)
    deltas.push_back({{"dataset", r.soft.dataset_id}, {"variant", to_string(r.soft.variant)},
                      {"delta_mae", r.delta.mae}, {"delta_rmse", r.delta.rmse},
                      {"delta_mape_percent", r.delta.mape_percent}});
  io::write_json(rdir / "report.json", {{"comparisons", deltas}, {"missing", s.missing}});
  write_index(c.out);
  return s;
}

/// gen, solve, train every (dataset, variant, kind), eval, report.
inline ReportSummary cmd_all(const ExperimentConfig& c, std::ostream* progress = nullptr) {
  cmd_gen(c);
  cmd_solve(c);
  for (int id : c.datasets)
    for (auto v : c.variants) {
      bool have_truth = true;
      try {
        load_truth(c, id, v);
      } catch (const Error&) {
        have_truth = false;
      }
      for (auto k : c.kinds) {
        try {
          cmd_train(c, k, id, v, progress);
          if (have_truth) cmd_eval_one(c, k, id, v);
        } catch (const TrainingFailure& e) {
          if (progress) *progress << "training failed: " << e.what() << "\n";
        }
      }
    }
  return cmd_report(c);
}

}  // namespace pinnbc
