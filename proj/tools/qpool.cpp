// qpool: train / eval / ed / curves.
//
// Settings resolve as command line > --config file > QPOOL_* environment.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "qpool/app.hpp"
#include "qpool/circuits.hpp"
#include "qpool/errors.hpp"

namespace {

using namespace qpool;

// Echoed by `train` into config.txt but not settable.
const char* const kEchoOnlyKeys[] = {"adam_beta1", "adam_beta2", "adam_eps", "loss"};

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::pair<std::string, CLI::Option*>> options;  // config key -> option
};

// Adds --name-with-dashes (and --name_with_underscores); the key also names
// the config file entry and the QPOOL_NAME environment variable.
template <typename T>
CLI::Option* opt(Command& cmd, const std::string& key, T& target, const std::string& help) {
  std::string dashed = key;
  for (char& c : dashed) c = c == '_' ? '-' : c;
  std::string names = "--" + dashed;
  if (dashed != key) names += ",--" + key;
  auto* o = cmd.app->add_option(names, target, help)->capture_default_str();
  cmd.options.emplace_back(key, o);
  return o;
}

Command command(CLI::App& cli, const std::string& name, const std::string& help) {
  Command cmd{cli.add_subcommand(name, help), {}, {}};
  cmd.app->add_option("--config", cmd.config_file, "key=value settings file");
  return cmd;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string t = s.substr(b, e - b + 1);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) t = t.substr(1, t.size() - 2);
  return t;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Fills options not given on the command line, from the config file first and
// the environment second.
void layer_settings(Command& cmd) {
  std::map<std::string, std::string> file;
  if (!cmd.config_file.empty()) file = read_config(cmd.config_file);
  for (const auto& [key, value] : file) {
    const bool known = std::any_of(cmd.options.begin(), cmd.options.end(), [&](auto& p) { return p.first == key; }) ||
                       std::find(std::begin(kEchoOnlyKeys), std::end(kEchoOnlyKeys), key) != std::end(kEchoOnlyKeys);
    if (!known) throw ConfigError("unknown key '" + key + "' in " + cmd.config_file);
  }
  for (auto& [key, option] : cmd.options) {
    if (option->count() > 0) continue;
    std::string value;
    if (auto it = file.find(key); it != file.end()) {
      value = it->second;
    } else {
      std::string env = "QPOOL_";
      for (char c : key) env += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      const char* v = std::getenv(env.c_str());
      if (v == nullptr || *v == '\0') continue;
      value = v;
    }
    option->clear();
    option->add_result(value);
    try {
      option->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ConfigError(key + "=" + value + ": " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Quantum pooling QCCNN experiments"};
  cli.require_subcommand(1);

  app::RunConfig run;
  std::string run_seeds = "0,1,2";
  std::string out_dir = run.out_dir.string();
  auto train = command(cli, "train", "train a hybrid model over several seeds");
  opt(train, "ansatz", run.ansatz, "ansatz key or 'classical'");
  opt(train, "data", run.data, "synthetic[:SEED], *.npz, idx:a,b,c,d or csv:train,val");
  opt(train, "epochs", run.epochs, "training epochs");
  opt(train, "batch_size", run.batch_size, "minibatch size");
  opt(train, "lr", run.lr, "Adam learning rate");
  opt(train, "stride", run.stride, "patch stride");
  opt(train, "relu", run.relu, "ReLU after the classical conv front");
  opt(train, "seeds", run_seeds, "comma-separated seeds");
  opt(train, "out_dir", out_dir, "run directory");

  app::EvalConfig eval;
  std::string checkpoint;
  auto ev = command(cli, "eval", "evaluate a checkpoint on a dataset");
  opt(ev, "checkpoint", checkpoint, "checkpoint file");
  opt(ev, "data", eval.data, "dataset source");

  app::EdCommandConfig ed;
  std::string ed_keys = "all";
  std::string ed_seeds = "0,1,2";
  std::string ed_map = "softmax";
  std::string ed_out = ed.out_dir.string();
  auto edc = command(cli, "ed", "normalized effective dimension of the ansatze");
  opt(edc, "ansatz", ed_keys, "comma-separated keys, 'all' or 'identity-fim'");
  opt(edc, "gamma", ed.ed.gamma, "gamma in (0,1]");
  opt(edc, "n", ed.ed.n, "data size n in kappa");
  opt(edc, "theta_samples", ed.ed.theta_samples, "parameter draws m");
  opt(edc, "data_samples", ed.ed.data_samples, "input draws k");
  opt(edc, "seeds", ed_seeds, "comma-separated seeds");
  opt(edc, "map", ed_map, "softmax or born");
  opt(edc, "inputs", ed.inputs, "'uniform' or a dataset source for patch inputs");
  opt(edc, "stride", ed.stride, "patch stride for dataset inputs");
  opt(edc, "identity_dim", ed.identity_dim, "dimension of the identity-fim debug model");
  opt(edc, "out_dir", ed_out, "output directory for ed_results.csv");

  app::CurvesConfig curves;
  std::vector<std::string> run_dirs;
  std::string out_csv = "curves.csv";
  std::string out_svg;
  auto cur = command(cli, "curves", "aggregate accuracy curves of run directories");
  opt(cur, "runs", run_dirs, "run directories")->delimiter(',');
  opt(cur, "out_csv", out_csv, "combined CSV");
  opt(cur, "out_svg", out_svg, "optional SVG plot");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto* cmd : {&train, &ev, &edc, &cur}) {
      if (*cmd->app) layer_settings(*cmd);
    }
    if (*train.app) {
      run.seeds = app::parse_seeds(run_seeds);
      run.out_dir = out_dir;
      app::cmd_train(run, std::cout);
    } else if (*ev.app) {
      if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
      eval.checkpoint = checkpoint;
      app::cmd_eval(eval, std::cout);
    } else if (*edc.app) {
      ed.seeds = app::parse_seeds(ed_seeds);
      ed.out_dir = ed_out;
      if (ed_map == "softmax") {
        ed.map = capacity::ProbabilityMap::Softmax;
      } else if (ed_map == "born") {
        ed.map = capacity::ProbabilityMap::Born;
      } else {
        throw ConfigError("unknown probability map '" + ed_map + "'");
      }
      if (ed_keys != "all") {
        std::stringstream ss(ed_keys);
        std::string k;
        while (std::getline(ss, k, ',')) {
          if (!k.empty()) ed.ansatze.push_back(k);
        }
      }
      app::cmd_ed(ed, std::cout);
    } else if (*cur.app) {
      if (run_dirs.empty()) throw ConfigError("curves needs --runs");
      for (const auto& d : run_dirs) curves.runs.emplace_back(d);
      curves.out_csv = out_csv;
      curves.out_svg = out_svg;
      app::cmd_curves(curves, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
