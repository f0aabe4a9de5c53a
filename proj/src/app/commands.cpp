#include <cstdio>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "qpool/app.hpp"
#include "qpool/circuits.hpp"
#include "qpool/errors.hpp"

namespace qpool::app {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* map_name(capacity::ProbabilityMap m) {
  return m == capacity::ProbabilityMap::Born ? "born" : "softmax";
}

std::string read_config_value(const std::filesystem::path& file, const std::string& key) {
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos && line.substr(0, eq) == key) return line.substr(eq + 1);
  }
  return {};
}

}  // namespace

TrainResult cmd_train(const RunConfig& config, std::ostream& log) {
  validate(config);
  const auto ds = data::load_source(config.data);
  if (ds.train.height != ds.val.height || ds.train.width != ds.val.width) {
    throw DataError("train and validation images differ in size");
  }
  log << "train: " << config.ansatz << " on " << config.data << " (" << ds.train.size() << " train / "
      << ds.val.size() << " val, " << ds.train.height << "x" << ds.train.width << ")\n";

  nn::ModelConfig mc{config.ansatz, ds.train.height, ds.train.width, config.stride, config.relu};
  nn::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.adam.lr = config.lr;

  TrainResult result;
  result.dir = config.out_dir;
  std::filesystem::create_directories(config.out_dir);

  for (const auto seed : config.seeds) {
    nn::HybridModel model(mc);
    model.initialize(seed);
    tc.seed = seed;
    auto metrics = nn::fit(model, ds.train, ds.val, tc, [&](const nn::EpochMetrics& m) {
      char line[160];
      std::snprintf(line, sizeof(line), "  seed %llu epoch %3d  train %.4f (%.4f)  val %.4f (%.4f)\n",
                    static_cast<unsigned long long>(seed), m.epoch, m.train_acc, m.train_loss, m.val_acc,
                    m.val_loss);
      log << line << std::flush;
    });
    nn::save_checkpoint(model, config.out_dir / ("checkpoint_seed" + std::to_string(seed) + ".txt"));
    result.runs.push_back({seed, std::move(metrics)});
  }

  const auto rows = metrics_rows(result.runs);
  write_atomic(config.out_dir / "metrics.csv", format_metrics_csv(rows));
  result.summary = summarize(rows);

  std::string cfg;
  for (const auto& [k, v] : echo(config)) cfg += k + "=" + v + "\n";
  write_atomic(config.out_dir / "config.txt", cfg);

  nlohmann::ordered_json js;
  js["ansatz"] = config.ansatz;
  auto& jc = js["config"];
  for (const auto& [k, v] : echo(config)) jc[k] = v;
  js["dataset"] = {{"source", config.data},
                   {"train", ds.train.size()},
                   {"val", ds.val.size()},
                   {"height", ds.train.height},
                   {"width", ds.train.width}};
  js["parameters"] = nn::HybridModel(mc).parameter_count();
  for (const auto& [seed, v] : result.summary.max_train_acc) {
    js["per_seed"][seed] = {{"max_train_acc", v}, {"max_val_acc", result.summary.max_val_acc.at(seed)}};
  }
  const auto stat = [](const Stat& s) {
    return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
  };
  js["max_train_acc"] = stat(result.summary.train);
  js["max_val_acc"] = stat(result.summary.val);
  write_atomic(config.out_dir / "summary.json", js.dump(2) + "\n");

  char line[200];
  std::snprintf(line, sizeof(line), "max train acc %.4f +- %.4f, max val acc %.4f +- %.4f\n",
                result.summary.train.mean, result.summary.train.std, result.summary.val.mean,
                result.summary.val.std);
  log << line;
  return result;
}

EvalResult cmd_eval(const EvalConfig& config, std::ostream& out) {
  const auto model = nn::load_checkpoint(config.checkpoint);
  const auto ds = data::load_source(config.data);
  if (ds.train.height != model.config().height || ds.train.width != model.config().width) {
    throw DataError("checkpoint expects " + std::to_string(model.config().height) + "x" +
                    std::to_string(model.config().width) + " images");
  }
  EvalResult r{nn::evaluate(model, ds.train), nn::evaluate(model, ds.val)};
  out << "front: " << model.config().front << "\n"
      << "train_acc: " << num(r.train.accuracy) << "\ntrain_loss: " << num(r.train.loss) << "\n"
      << "val_acc: " << num(r.val.accuracy) << "\nval_loss: " << num(r.val.loss) << "\n";
  return r;
}

std::vector<EdRow> cmd_ed(const EdCommandConfig& config, std::ostream& out) {
  capacity::validate(config.ed);
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  auto keys = config.ansatze;
  if (keys.empty()) keys = circuits::ansatz_keys();
  for (const auto& k : keys) {
    if (k != kIdentityFimKey) circuits::parse_ansatz_key(k);
  }
  if (config.identity_dim < 1) throw ConfigError("identity FIM dimension must be >= 1");

  capacity::InputSampler sampler = capacity::uniform_inputs(circuits::kPatchInputs);
  if (config.inputs != "uniform") {
    const auto ds = data::load_source(config.inputs);
    std::vector<std::vector<double>> pool;
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
      for (const auto& p : data::extract_patches(ds.train.image(i), ds.train.height, ds.train.width, config.stride)) {
        pool.emplace_back(p.begin(), p.end());
      }
    }
    sampler = capacity::pooled_inputs(std::move(pool));
  }

  const auto table = config.out_dir / "ed_results.csv";
  std::filesystem::create_directories(config.out_dir);
  const bool fresh = !std::filesystem::exists(table);
  std::ofstream csv(table, std::ios::app);
  if (!csv) throw DataError("cannot append to " + table.string());
  if (fresh) {
    csv << "ansatz,seed,d,gamma,n,theta_samples,data_samples,probability_map,inputs,skipped,ed,normalized_ed\n";
  }

  std::vector<EdRow> rows;
  for (const auto& key : keys) {
    EdRow row{key, {}, {}};
    std::vector<double> normalized;
    for (const auto seed : config.seeds) {
      auto cfg = config.ed;
      cfg.seed = seed;
      capacity::EDReport rep;
      if (key == kIdentityFimKey) {
        const int d = config.identity_dim;
        rep = capacity::effective_dimension(
            d, [d](std::span<const double>, std::mt19937_64&) { return capacity::Matrix::Identity(d, d); }, cfg);
      } else {
        const auto ansatz = circuits::make_ansatz(key);
        rep = capacity::effective_dimension(capacity::CircuitModel(ansatz.deferred, config.map), cfg, sampler);
      }
      if (!std::isfinite(rep.ed)) throw NumericError("non-finite effective dimension for " + key);
      out << "ansatz: " << key << "\nseed: " << seed << "\nd: " << rep.d << "\ngamma: " << num(rep.gamma)
          << "\nn: " << rep.n << "\ntheta_samples: " << rep.theta_samples
          << "\ndata_samples: " << rep.data_samples << "\nvolume: " << rep.volume
          << "\nprobability_map: " << map_name(config.map) << "\ninputs: " << config.inputs
          << "\nskipped: " << rep.skipped << "\nmean_trace: " << num(rep.mean_trace) << "\ned: " << num(rep.ed)
          << "\nnormalized_ed: " << num(rep.normalized_ed) << "\n\n";
      csv << key << "," << seed << "," << rep.d << "," << num(rep.gamma) << "," << rep.n << ","
          << rep.theta_samples << "," << rep.data_samples << "," << map_name(config.map) << "," << config.inputs
          << "," << rep.skipped << "," << num(rep.ed) << "," << num(rep.normalized_ed) << "\n";
      normalized.push_back(rep.normalized_ed);
      row.reports.push_back(std::move(rep));
    }
    row.normalized = describe(normalized);
    rows.push_back(std::move(row));
  }

  out << "# normalized effective dimension (mean +- std over " << config.seeds.size() << " seeds)\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %.3f +- %.3f\n", r.ansatz.c_str(), r.normalized.mean, r.normalized.std);
    out << line;
  }
  return rows;
}

void cmd_curves(const CurvesConfig& config, std::ostream& out) {
  if (config.runs.empty()) throw ConfigError("curves needs at least one run directory");
  Panel train{"Training accuracy", {}};
  Panel val{"Validation accuracy", {}};
  std::string csv = "ansatz,run,epoch,train_acc_mean,train_acc_std,train_acc_min,train_acc_max,"
                    "val_acc_mean,val_acc_std,val_acc_min,val_acc_max\n";

  for (const auto& dir : config.runs) {
    const auto metrics = dir / "metrics.csv";
    if (!std::filesystem::exists(metrics)) throw DataError("no metrics.csv in run directory " + dir.string());
    const auto rows = read_metrics_csv(metrics);
    std::string label = read_config_value(dir / "config.txt", "ansatz");
    if (label.empty()) label = dir.filename().string();

    std::map<int, std::map<std::string, const MetricsRow*>> by_epoch;
    for (const auto& r : rows) by_epoch[r.epoch][r.seed] = &r;
    Series st{label, {}, {}, {}};
    Series sv{label, {}, {}, {}};
    for (const auto& [epoch, cells] : by_epoch) {
      const auto get = [&](const char* k) -> const MetricsRow& {
        auto it = cells.find(k);
        if (it == cells.end()) throw DataError(metrics.string() + ": epoch " + std::to_string(epoch) + " lacks " + k);
        return *it->second;
      };
      const auto& mean = get("agg");
      const auto& sd = get("agg_std");
      const auto& mn = get("agg_min");
      const auto& mx = get("agg_max");
      st.mean.push_back(mean.train_acc);
      st.lo.push_back(mean.train_acc - sd.train_acc);
      st.hi.push_back(mean.train_acc + sd.train_acc);
      sv.mean.push_back(mean.val_acc);
      sv.lo.push_back(mean.val_acc - sd.val_acc);
      sv.hi.push_back(mean.val_acc + sd.val_acc);
      csv += label + "," + dir.string() + "," + std::to_string(epoch) + "," + num(mean.train_acc) + "," +
             num(sd.train_acc) + "," + num(mn.train_acc) + "," + num(mx.train_acc) + "," + num(mean.val_acc) + "," +
             num(sd.val_acc) + "," + num(mn.val_acc) + "," + num(mx.val_acc) + "\n";
    }
    train.series.push_back(std::move(st));
    val.series.push_back(std::move(sv));
  }

  write_atomic(config.out_csv, csv);
  out << "wrote " << config.out_csv.string() << "\n";
  if (!config.out_svg.empty()) {
    write_atomic(config.out_svg, render_svg({train, val}));
    out << "wrote " << config.out_svg.string() << "\n";
  }
}

}  // namespace qpool::app
