#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qpool/app.hpp"
#include "qpool/errors.hpp"

using namespace qpool;
using namespace qpool::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("qpool_app_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny(const fs::path& out) {
  RunConfig c;
  c.ansatz = "classical";
  c.epochs = 3;
  c.seeds = {0, 1};
  c.out_dir = out;
  return c;
}

}  // namespace

TEST(Stats, PopulationStd) {
  const auto s = describe({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 4.0);
}

TEST(Seeds, Parsing) {
  EXPECT_EQ(parse_seeds("0,1,2"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(parse_seeds("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_THROW(parse_seeds("1,x"), ConfigError);
  EXPECT_THROW(parse_seeds(""), ConfigError);
}

TEST(Config, ValidationAndEcho) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.ansatz = "mod-z";
  EXPECT_THROW(validate(c), ConfigError);
  c = RunConfig{};
  c.lr = 0;
  EXPECT_THROW(validate(c), ConfigError);
  std::set<std::string> keys;
  for (const auto& [k, v] : echo(RunConfig{})) keys.insert(k);
  for (const char* k : {"ansatz", "data", "epochs", "batch_size", "lr", "stride", "relu", "seeds", "out_dir", "adam_beta1",
                        "adam_beta2", "adam_eps", "loss"}) {
    EXPECT_TRUE(keys.count(k)) << k;
  }
}

TEST(Metrics, RowsCsvRoundTripAndSummary) {
  SeedRun a{0, {}};
  SeedRun b{1, {}};
  a.metrics.epochs = {{1, 0.5, 0.7, 0.6, 0.69}, {2, 0.9, 0.3, 0.8, 0.4}};
  b.metrics.epochs = {{1, 0.7, 0.6, 0.5, 0.66}, {2, 0.8, 0.35, 0.9, 0.41}};
  const auto rows = metrics_rows({a, b});
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[2].seed, "agg");
  EXPECT_DOUBLE_EQ(rows[2].train_acc, 0.6);
  EXPECT_EQ(rows[3].seed, "agg_std");
  EXPECT_NEAR(rows[3].train_acc, 0.1, 1e-15);

  const auto path = scratch("metrics.csv");
  write_atomic(path, format_metrics_csv(rows));
  const auto back = read_metrics_csv(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].val_loss, rows[i].val_loss);
  }
  const auto s = summarize(back);
  EXPECT_DOUBLE_EQ(s.max_train_acc.at("0"), 0.9);
  EXPECT_DOUBLE_EQ(s.max_val_acc.at("1"), 0.9);
  EXPECT_DOUBLE_EQ(s.train.mean, 0.85);
  EXPECT_EQ(s.max_train_acc.count("agg"), 0u);
  fs::remove(path);
}

TEST(Metrics, MalformedFileIsDataError) {
  const auto path = scratch("bad.csv");
  write_atomic(path, std::string(kMetricsHeader) + "\n1,0,abc,0,0,0\n");
  EXPECT_THROW(read_metrics_csv(path), DataError);
  write_atomic(path, "epoch,acc\n");
  EXPECT_THROW(read_metrics_csv(path), DataError);
  fs::remove(path);
}

TEST(Train, WritesReproducibleRunDirectory) {
  const auto dir = scratch("train");
  std::stringstream log;
  const auto result = cmd_train(tiny(dir), log);
  for (const char* f : {"metrics.csv", "summary.json", "config.txt", "checkpoint_seed0.txt", "checkpoint_seed1.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  // Summary numbers come back out of metrics.csv.
  const auto js = nlohmann::json::parse(slurp(dir / "summary.json"));
  const auto re = summarize(read_metrics_csv(dir / "metrics.csv"));
  EXPECT_EQ(js["max_val_acc"]["mean"].get<double>(), re.val.mean);
  EXPECT_EQ(js["per_seed"]["1"]["max_train_acc"].get<double>(), re.max_train_acc.at("1"));
  EXPECT_EQ(js["config"]["epochs"].get<std::string>(), "3");

  const auto again = scratch("train2");
  auto cfg = tiny(again);
  cmd_train(cfg, log);
  EXPECT_EQ(slurp(dir / "metrics.csv"), slurp(again / "metrics.csv"));

  EvalConfig ev{dir / "checkpoint_seed0.txt", "synthetic"};
  const auto r = cmd_eval(ev, log);
  EXPECT_DOUBLE_EQ(r.train.accuracy, result.runs[0].metrics.epochs.back().train_acc);

  std::stringstream out;
  cmd_curves({{dir, again}, dir / "curves.csv", dir / "curves.svg"}, out);
  const auto svg = slurp(dir / "curves.svg");
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  EXPECT_NE(svg.find("Validation accuracy"), std::string::npos);
  EXPECT_NE(slurp(dir / "curves.csv").find("classical,"), std::string::npos);
  EXPECT_THROW(cmd_curves({{dir / "missing"}, dir / "c.csv", {}}, out), DataError);
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST(Train, BadDataSourceIsDataError) {
  auto cfg = tiny(scratch("bad"));
  cfg.data = "nope.npz";
  std::stringstream log;
  EXPECT_THROW(cmd_train(cfg, log), DataError);
}

TEST(EdCommand, IdentityKeyAndValidation) {
  EdCommandConfig cfg;
  cfg.ansatze = {kIdentityFimKey};
  cfg.seeds = {0};
  cfg.ed.theta_samples = 3;
  cfg.out_dir = scratch("ed");
  std::stringstream out;
  const auto rows = cmd_ed(cfg, out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].reports[0].ed, capacity::identity_fim_ed(4, 1.0, 546), 1e-9);
  EXPECT_NE(out.str().find("normalized_ed: "), std::string::npos);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "ed_results.csv"));
  cfg.ed.gamma = 0;
  EXPECT_THROW(cmd_ed(cfg, out), ConfigError);
  cfg.ed.gamma = 1;
  cfg.ansatze = {"mod-q"};
  EXPECT_THROW(cmd_ed(cfg, out), ConfigError);
  fs::remove_all(cfg.out_dir);
}
