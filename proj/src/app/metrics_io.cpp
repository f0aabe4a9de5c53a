#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qpool/app.hpp"
#include "qpool/errors.hpp"

namespace qpool::app {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_aggregate(const std::string& seed) { return seed.rfind("agg", 0) == 0; }

}  // namespace

Stat describe(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<MetricsRow> metrics_rows(const std::vector<SeedRun>& runs) {
  std::vector<MetricsRow> rows;
  if (runs.empty()) return rows;
  const auto epochs = runs.front().metrics.epochs.size();
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<double> ta, tl, va, vl;
    for (const auto& run : runs) {
      const auto& m = run.metrics.epochs.at(e);
      rows.push_back({m.epoch, std::to_string(run.seed), m.train_acc, m.train_loss, m.val_acc, m.val_loss});
      ta.push_back(m.train_acc);
      tl.push_back(m.train_loss);
      va.push_back(m.val_acc);
      vl.push_back(m.val_loss);
    }
    const int epoch = static_cast<int>(e) + 1;
    const Stat sta = describe(ta), stl = describe(tl), sva = describe(va), svl = describe(vl);
    rows.push_back({epoch, "agg", sta.mean, stl.mean, sva.mean, svl.mean});
    rows.push_back({epoch, "agg_std", sta.std, stl.std, sva.std, svl.std});
    rows.push_back({epoch, "agg_min", sta.min, stl.min, sva.min, svl.min});
    rows.push_back({epoch, "agg_max", sta.max, stl.max, sva.max, svl.max});
  }
  return rows;
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + r.seed + "," + num(r.train_acc) + "," + num(r.train_loss) + "," +
           num(r.val_acc) + "," + num(r.val_loss) + "\n";
  }
  return out;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw DataError(path.string() + ": unexpected header");
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw DataError(path.string() + ": line " + std::to_string(lineno) + " malformed");
    try {
      rows.push_back({std::stoi(cells[0]), cells[1], std::stod(cells[2]), std::stod(cells[3]),
                      std::stod(cells[4]), std::stod(cells[5])});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": line " + std::to_string(lineno) + " has a non-numeric field");
    }
  }
  return rows;
}

Summary summarize(const std::vector<MetricsRow>& rows) {
  Summary s;
  for (const auto& r : rows) {
    if (is_aggregate(r.seed)) continue;
    auto [tit, tnew] = s.max_train_acc.try_emplace(r.seed, r.train_acc);
    if (!tnew) tit->second = std::max(tit->second, r.train_acc);
    auto [vit, vnew] = s.max_val_acc.try_emplace(r.seed, r.val_acc);
    if (!vnew) vit->second = std::max(vit->second, r.val_acc);
  }
  std::vector<double> t, v;
  for (const auto& [seed, value] : s.max_train_acc) t.push_back(value);
  for (const auto& [seed, value] : s.max_val_acc) v.push_back(value);
  s.train = describe(t);
  s.val = describe(v);
  return s;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qpool::app
