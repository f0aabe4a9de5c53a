#pragma once

// Reproduction driver behind the `qpool` CLI: training campaigns over seeds,
// checkpoint evaluation, effective-dimension tables and curve plots.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qpool/capacity.hpp"
#include "qpool/nn.hpp"

namespace qpool::app {

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::string ansatz = "conv";
  std::string data = "synthetic";
  int epochs = 20;
  int batch_size = 8;
  double lr = 0.001;
  int stride = 2;
  bool relu = false;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path out_dir = "runs/run";
};

/// Throws ConfigError on the first invalid field.
void validate(const RunConfig& config);

/// Ordered key/value echo of every effective setting.
std::vector<std::pair<std::string, std::string>> echo(const RunConfig& config);

std::vector<std::uint64_t> parse_seeds(const std::string& text);

// ---------------------------------------------------------------------------
// Metrics files

/// One metrics.csv row. `seed` is a number or one of agg, agg_std, agg_min,
/// agg_max for the across-seed aggregates of an epoch.
struct MetricsRow {
  int epoch = 0;
  std::string seed;
  double train_acc = 0.0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  nn::RunMetrics metrics;
};

inline constexpr const char* kMetricsHeader = "epoch,seed,train_acc,train_loss,val_acc,val_loss";

/// Per-seed rows followed by aggregate rows, ordered by epoch.
std::vector<MetricsRow> metrics_rows(const std::vector<SeedRun>& runs);
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};
Stat describe(const std::vector<double>& values);

struct Summary {
  std::map<std::string, double> max_train_acc;  // seed -> value
  std::map<std::string, double> max_val_acc;
  Stat train;
  Stat val;
};

/// Max accuracies per seed and across seeds, from per-seed rows only.
Summary summarize(const std::vector<MetricsRow>& rows);

/// Writes via a temporary sibling and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

// ---------------------------------------------------------------------------
// Commands

struct TrainResult {
  std::filesystem::path dir;
  std::vector<SeedRun> runs;
  Summary summary;
};

/// One fit per seed. Writes metrics.csv, summary.json, config.txt and
/// checkpoint_seed<N>.txt into config.out_dir.
TrainResult cmd_train(const RunConfig& config, std::ostream& log);

struct EvalConfig {
  std::filesystem::path checkpoint;
  std::string data = "synthetic";
};

struct EvalResult {
  nn::Evaluation train;
  nn::Evaluation val;
};

EvalResult cmd_eval(const EvalConfig& config, std::ostream& out);

/// Key of the debug ansatz whose FIM is the identity at every theta.
inline constexpr const char* kIdentityFimKey = "identity-fim";

struct EdCommandConfig {
  std::vector<std::string> ansatze;  // empty: every trainable key
  capacity::EDConfig ed;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  capacity::ProbabilityMap map = capacity::ProbabilityMap::Softmax;
  /// "uniform" or a dataset source whose training patches are sampled.
  std::string inputs = "uniform";
  int stride = 2;
  int identity_dim = 4;
  std::filesystem::path out_dir = "runs/ed";
};

struct EdRow {
  std::string ansatz;
  std::vector<capacity::EDReport> reports;  // one per seed
  Stat normalized;
};

std::vector<EdRow> cmd_ed(const EdCommandConfig& config, std::ostream& out);

struct CurvesConfig {
  std::vector<std::filesystem::path> runs;
  std::filesystem::path out_csv = "curves.csv";
  std::filesystem::path out_svg;  // empty: no plot
};

void cmd_curves(const CurvesConfig& config, std::ostream& out);

// ---------------------------------------------------------------------------
// Plotting

struct Series {
  std::string label;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

/// Self-contained SVG with one panel per entry, shaded mean +- std bands.
std::string render_svg(const std::vector<Panel>& panels);

}  // namespace qpool::app
