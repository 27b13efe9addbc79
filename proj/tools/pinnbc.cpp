// Command-line driver: gen, solve, train, eval, report, all.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinnbc/experiment.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> dataset;
  std::optional<std::string> variant;
  std::optional<std::string> kind;
  std::optional<int> resolution;
  std::optional<std::string> out;
};

pinnbc::ExperimentConfig resolve(const Flags& f) {
  pinnbc::ExperimentConfig c;
  if (!f.config.empty()) pinnbc::apply_config_json(pinnbc::io::read_json(f.config), c);
  if (f.seed) {
    c.seed = *f.seed;
    c.train.seed = *f.seed;
  }
  if (f.dataset) c.datasets = {*f.dataset};
  if (f.variant) c.variants = {pinnbc::parse_variant(*f.variant)};
  if (f.kind) c.kinds = {pinnbc::parse_kind(*f.kind)};
  if (f.resolution) c.generation.resolution = *f.resolution;
  if (f.out) c.out = *f.out;
  return c;
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pinnbc: datasets, reference solves, training and evaluation of soft and exact BC models"};
  app.require_subcommand(0, 1);
  Flags flags;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Global seed (datasets and training)");
    sub->add_option("--dataset", flags.dataset, "Restrict to one dataset id");
    sub->add_option("--variant", flags.variant, "poisson | laplace | poisson0")
        ->check(CLI::IsMember({"poisson", "laplace", "poisson0"}));
    sub->add_option("--kind", flags.kind, "soft | exact")->check(CLI::IsMember({"soft", "exact"}));
    sub->add_option("--resolution", flags.resolution, "Grid nodes per side");
    sub->add_option("--out", flags.out, "Output directory");
  };

  auto* gen = app.add_subcommand("gen", "Generate dataset instances");
  auto* solve = app.add_subcommand("solve", "Compute finite-difference ground truth");
  auto* train = app.add_subcommand("train", "Train soft and/or exact BC models");
  auto* eval = app.add_subcommand("eval", "Score trained models against ground truth");
  auto* report = app.add_subcommand("report", "Write comparison tables and heatmap panels");
  auto* all = app.add_subcommand("all", "Run gen, solve, train, eval and report");
  bool dump_config = false;
  app.add_flag("--print-default-config", dump_config, "Print the default config and exit");
  for (auto* sub : {gen, solve, train, eval, report, all}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("invalid-argument", e.what());
  }

  try {
    if (dump_config) {
      std::cout << pinnbc::config_json(pinnbc::ExperimentConfig{}).dump(2) << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) return fail("invalid-argument", "a subcommand is required\n" + app.help());
    const pinnbc::ExperimentConfig c = resolve(flags);
    int status = 0;
    if (gen->parsed()) {
      for (const auto& p : pinnbc::cmd_gen(c)) std::cout << "wrote " << p.string() << "\n";
    } else if (solve->parsed()) {
      for (const auto& s : pinnbc::cmd_solve(c)) {
        std::cout << "dataset " << s.dataset << " " << pinnbc::to_string(s.variant) << ": "
                  << (s.ok ? "ok" : "FAILED") << " method=" << s.method << " residual=" << s.residual << "\n";
      }
    } else if (train->parsed()) {
      for (int id : c.datasets)
        for (auto v : c.variants)
          for (auto k : c.kinds) {
            const auto res = pinnbc::cmd_train(c, k, id, v, &std::cout);
            std::cout << "trained " << id << "/" << pinnbc::to_string(v) << "/" << pinnbc::to_string(k) << " in "
                      << res.log.epochs.size() << " epochs, final L_total " << res.log.epochs.back().l_total << "\n";
          }
    } else if (eval->parsed()) {
      for (const auto& ev : pinnbc::cmd_eval(c)) {
        const auto& r = ev.record;
        std::cout << r.dataset_id << " " << pinnbc::to_string(r.variant) << " " << pinnbc::to_string(r.kind)
                  << ": MAE " << pinnbc::format_sci(r.metrics.mae) << " RMSE " << pinnbc::format_sci(r.metrics.rmse)
                  << " MAPE " << pinnbc::format_percent(r.metrics.mape_percent) << "\n";
      }
    } else if (report->parsed() || all->parsed()) {
      const auto s = all->parsed() ? pinnbc::cmd_all(c, &std::cout) : pinnbc::cmd_report(c);
      std::cout << pinnbc::io::read_text(c.out / "report" / "table.txt");
      for (const auto& m : s.missing) std::cerr << "missing: " << m << "\n";
      if (!s.missing.empty()) status = 2;
    }
    if (std::filesystem::exists(c.out)) pinnbc::write_index(c.out);
    return status;
  } catch (const pinnbc::Error& e) {
    return fail(pinnbc::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
