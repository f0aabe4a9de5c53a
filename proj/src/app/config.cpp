#include <cstdio>
#include <sstream>

#include "qpool/app.hpp"
#include "qpool/circuits.hpp"
#include "qpool/errors.hpp"

namespace qpool::app {

void validate(const RunConfig& config) {
  if (config.ansatz != "classical") circuits::parse_ansatz_key(config.ansatz);
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(config.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (config.stride < 1) throw ConfigError("stride must be >= 1");
  if (config.seeds.empty()) throw ConfigError("at least one seed is required");
  if (config.data.empty()) throw ConfigError("dataset source is empty");
  if (config.out_dir.empty()) throw ConfigError("output directory is empty");
}

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& config) {
  std::string seeds;
  for (auto s : config.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  char lr[32];
  std::snprintf(lr, sizeof(lr), "%.17g", config.lr);
  return {
      {"ansatz", config.ansatz},
      {"data", config.data},
      {"epochs", std::to_string(config.epochs)},
      {"batch_size", std::to_string(config.batch_size)},
      {"lr", lr},
      {"stride", std::to_string(config.stride)},
      {"relu", config.relu ? "1" : "0"},
      {"seeds", seeds},
      {"out_dir", config.out_dir.string()},
      {"adam_beta1", "0.9"},
      {"adam_beta2", "0.999"},
      {"adam_eps", "1e-08"},
      {"loss", "softmax_cross_entropy"},
  };
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      seeds.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "' in '" + text + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("no seeds in '" + text + "'");
  return seeds;
}

}  // namespace qpool::app
