#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "pinnbc/experiment.hpp"

using namespace pinnbc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() { return fs::temp_directory_path() / ("pinnbc_test_exp_" + std::to_string(::getpid())); }

struct RemoveScratch {
  ~RemoveScratch() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} remove_scratch;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = scratch_root() / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.datasets = {0, 2};
  c.generation.resolution = 17;
  c.train.widths = {2, 8, 8, 1};
  c.train.collocation_count = 64;
  c.train.boundary_count = 16;
  c.train.anchors_per_side = 3;
  c.train.max_epochs = 5;
  c.train.record_timing = false;
  c.seed = 11;
  c.train.seed = 11;
  c.out = out;
  return c;
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = std::string(PINNBC_CLI_PATH) + " " + args + " >/dev/null 2>" + stderr_file.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Pipeline, EndToEndProducesEveryArtifact) {
  const auto c = tiny(fresh_dir("e2e"));
  const auto s = cmd_all(c);
  EXPECT_TRUE(s.missing.empty());
  EXPECT_EQ(s.rows.size(), 6u);
  EXPECT_EQ(s.panels_written, 6 * 7);

  for (int id : c.datasets) {
    const auto d = dataset_dir(c, id);
    EXPECT_EQ(fs::file_size(d / "a.f64"), 17u * 17u * 8u);
    EXPECT_EQ(fs::file_size(d / "g.f64"), 4u * 16u * 8u);
    const auto solve = io::read_json(d / "solve.json");
    EXPECT_TRUE(solve.at("superposition_ok").get<bool>());
    for (auto v : c.variants) {
      const auto vd = variant_dir(c, id, v);
      EXPECT_EQ(io::read_json(vd / "truth.json").at("status"), "ok");
      for (const char* f : {"truth.png", "colorbar_value.png", "colorbar_error.png", "scales.json"})
        EXPECT_TRUE(fs::exists(vd / "panels" / f)) << f;
      for (auto k : c.kinds) {
        const auto rd = run_dir(c, id, v, k);
        for (const char* f : {"model.json", "model.bin", "log.csv", "metrics.json", "prediction.f64",
                              "panels/prediction.png", "panels/error.png"})
          EXPECT_TRUE(fs::exists(rd / f)) << rd / f;
        const auto log = io::parse_train_log_csv(slurp(rd / "log.csv"));
        EXPECT_EQ(log.epochs.size(), 5u);
      }
    }
  }
  // Dataset 2 uses the narrow forcing range.
  const auto m2 = io::read_json(dataset_dir(c, 2) / "dataset.json");
  EXPECT_EQ(m2.at("ranges").at("f"), nlohmann::json::array({-1.0, 1.0}));
  const auto m0 = io::read_json(dataset_dir(c, 0) / "dataset.json");
  EXPECT_EQ(m0.at("ranges").at("f"), nlohmann::json::array({-10.0, 10.0}));

  const auto table = slurp(c.out / "report" / "table.txt");
  EXPECT_NE(table.find("Variant: laplace"), std::string::npos);
  EXPECT_NE(table.find("Exact"), std::string::npos);

  const auto index = io::read_json(c.out / "index.json");
  bool found = false;
  for (const auto& f : index.at("files"))
    if (f.at("path") == "0/poisson/soft/model.bin") {
      found = true;
      EXPECT_EQ(f.at("sha256"), io::sha256_file(c.out / "0/poisson/soft/model.bin"));
    }
  EXPECT_TRUE(found);
}

TEST(Pipeline, RerunIsByteIdentical) {
  auto c1 = tiny(fresh_dir("rerun1"));
  auto c2 = tiny(fresh_dir("rerun2"));
  c1.datasets = c2.datasets = {1};
  c1.variants = c2.variants = {EquationVariant::poisson};
  cmd_all(c1);
  cmd_all(c2);
  for (const char* f : {"1/dataset.json", "1/a.f64", "1/poisson/truth.f64", "1/poisson/soft/model.bin",
                        "1/poisson/exact/model.bin", "1/poisson/exact/log.csv", "1/poisson/soft/metrics.json",
                        "report/table.csv"})
    EXPECT_EQ(slurp(c1.out / f), slurp(c2.out / f)) << f;
}

TEST(Pipeline, InvalidRangeWritesNothing) {
  auto c = tiny(fresh_dir("invalid"));
  c.datasets = {0, 1};
  c.ranges[1] = DatasetRanges{{1.0, -1.0}, {-1.0, 1.0}, {-1.0, 1.0}};
  try {
    cmd_gen(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
  EXPECT_FALSE(fs::exists(c.out));
}

TEST(Pipeline, DefaultPointCountsArePersisted) {
  auto c = tiny(fresh_dir("counts"));
  c.datasets = {3};
  c.variants = {EquationVariant::poisson};
  c.train = TrainConfig{};
  c.train.widths = {2, 4, 1};
  c.train.collocation_count = 32;
  c.train.max_epochs = 1;
  c.train.record_timing = false;
  cmd_gen(c);
  cmd_train(c, BcKind::exact, 3, EquationVariant::poisson);
  cmd_train(c, BcKind::soft, 3, EquationVariant::poisson);
  const auto exact = io::read_json(run_dir(c, 3, EquationVariant::poisson, BcKind::exact) / "model.json");
  EXPECT_EQ(exact.at("anchors").at("points").size(), 80u);
  const auto soft = io::read_json(run_dir(c, 3, EquationVariant::poisson, BcKind::soft) / "model.json");
  EXPECT_EQ(soft.at("boundary_samples").at("labels").size(), 1000u);
  EXPECT_EQ(soft.at("config_hash"), config_hash(c.train));
  EXPECT_EQ(soft.at("seed"), c.train.seed);
}

TEST(Pipeline, ReportListsMissingArtifacts) {
  auto c = tiny(fresh_dir("missing"));
  c.datasets = {0};
  c.variants = {EquationVariant::laplace};
  cmd_gen(c);
  cmd_solve(c);
  const auto s = cmd_report(c);
  EXPECT_EQ(s.missing.size(), 2u);
  EXPECT_TRUE(s.rows.empty());
  EXPECT_TRUE(fs::exists(c.out / "report" / "report.json"));
}

TEST(Config, JsonRoundTrip) {
  auto c = tiny("somewhere");
  c.ranges[0] = DatasetRanges{{0.5, 1.5}, {-2.0, 2.0}, {-1.0, 1.0}};
  ExperimentConfig back;
  apply_config_json(nlohmann::json::parse(config_json(c).dump()), back);
  EXPECT_EQ(config_json(back), config_json(c));
  EXPECT_THROW(apply_config_json({{"variants", {"heat"}}}, back), Error);
}

TEST(Cli, ReportsErrorsAsJson) {
  const auto dir = fresh_dir("cli");
  fs::create_directories(dir);
  const auto err = dir / "stderr.txt";
  EXPECT_EQ(run_cli("", err), 1);
  EXPECT_NE(slurp(err).find("\"error\":\"invalid-argument\""), std::string::npos);
  EXPECT_EQ(run_cli("train --variant heat", err), 1);
  EXPECT_NE(slurp(err).find("invalid-argument"), std::string::npos);
  // Training without generated data is an I/O failure.
  EXPECT_EQ(run_cli("train --dataset 0 --out " + (dir / "none").string(), err), 1);
  const auto j = nlohmann::json::parse(slurp(err));
  EXPECT_EQ(j.at("error"), "io-failure");
}

TEST(Cli, GenWritesDatasets) {
  const auto dir = fresh_dir("cligen");
  const auto err = dir.parent_path() / "cligen_stderr.txt";
  EXPECT_EQ(run_cli("gen --dataset 1 --resolution 9 --seed 4 --out " + dir.string(), err), 0) << slurp(err);
  const auto m = io::read_json(dir / "1" / "dataset.json");
  EXPECT_EQ(m.at("seed"), 4);
  EXPECT_EQ(m.at("resolution"), 9);
  EXPECT_TRUE(fs::exists(dir / "index.json"));
  EXPECT_FALSE(fs::exists(dir / "0"));
}
