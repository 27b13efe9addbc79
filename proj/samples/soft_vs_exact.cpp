// Trains a small soft-BC and exact-BC model on one generated instance and
// prints their grid errors against the finite-difference ground truth.
//
//   soft_vs_exact [epochs] [seed]

#include <cstdlib>
#include <iostream>

#include "pinnbc/eval.hpp"
#include "pinnbc/train.hpp"

int main(int argc, char** argv) {
  using namespace pinnbc;
  const int epochs = argc > 1 ? std::atoi(argv[1]) : 200;
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;

  GenerationOptions gen;
  gen.resolution = 64;
  const DatasetInstance inst = generate_instance(0, reference_ranges(0), seed, gen);
  const auto truth = reference_solution(inst, EquationVariant::poisson);

  TrainConfig cfg;
  cfg.widths = mlp_widths(2, 64);
  cfg.collocation_count = 2000;
  cfg.boundary_count = 200;
  cfg.anchors_per_side = 12;
  cfg.max_epochs = epochs;
  cfg.seed = seed;

  std::vector<ComparisonRow> rows;
  MetricsRecord recs[2];
  for (auto kind : {BcKind::soft, BcKind::exact}) {
    const auto res = train_model(kind, inst, EquationVariant::poisson, cfg);
    const auto ev = evaluate_against(res.predictor, truth.field, inst.id, EquationVariant::poisson,
                                     res.log.average_epoch_seconds());
    recs[kind == BcKind::soft ? 0 : 1] = ev.record;
    std::cout << to_string(kind) << ": " << res.log.epochs.size() << " epochs, L_total "
              << res.log.epochs.front().l_total << " -> " << res.log.epochs.back().l_total << ", boundary MAE "
              << format_sci(ev.boundary_mae) << "\n";
  }
  rows.push_back(compare(recs[0], recs[1]));
  std::cout << render_table(rows);
}
