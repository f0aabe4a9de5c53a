#include "qpool/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "qpool/errors.hpp"

namespace qpool::nn {

namespace {

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
}

void check_dims(int height, int width, std::span<const double> image) {
  if (height < 2 || width < 2) {
    throw std::invalid_argument("image " + std::to_string(height) + "x" + std::to_string(width) +
                                " is smaller than the 2x2 kernel");
  }
  if (image.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("image buffer does not match its dimensions");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Layers

QuantumConvLayer::QuantumConvLayer(circuits::Ansatz a, int s) : ansatz(std::move(a)), stride(s) {
  kernels.assign(kernel_count(ansatz), std::vector<double>(ansatz.num_params(), 0.0));
}

int QuantumConvLayer::kernel_count(const circuits::Ansatz& a) {
  if (kFeatureMaps % a.num_readouts() != 0) throw std::invalid_argument("readouts must divide map count");
  return kFeatureMaps / a.num_readouts();
}

FeatureMaps quantum_conv_forward(std::span<const double> image, int height, int width,
                                 const QuantumConvLayer& layer, autodiff::QuantumLayerContext* ctx) {
  check_dims(height, width, image);
  const auto patches = data::extract_patches(image, height, width, layer.stride);
  const auto nk = layer.kernels.size();
  const auto r = static_cast<std::size_t>(layer.ansatz.num_readouts());
  const auto np = patches.size();

  FeatureMaps out;
  out.rows = data::output_extent(height, layer.stride);
  out.cols = data::output_extent(width, layer.stride);
  out.maps = static_cast<int>(nk * r);
  out.data.assign(out.maps * np, 0.0);

  if (ctx != nullptr) {
    ctx->ansatz = &layer.ansatz;
    ctx->kernels = layer.kernels;
    ctx->patches.clear();
    for (const auto& p : patches) ctx->patches.emplace_back(p.begin(), p.end());
    ctx->raw.assign(np * nk * r, 0.0);
  }
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t k = 0; k < nk; ++k) {
      const auto z = layer.ansatz.expectations(patches[p], layer.kernels[k]);
      for (std::size_t j = 0; j < r; ++j) {
        out.data[(k * r + j) * np + p] = circuits::apply_postprocess(layer.ansatz.post, z[j]);
        if (ctx != nullptr) ctx->raw[(p * nk + k) * r + j] = z[j];
      }
    }
  }
  return out;
}

FeatureMaps classical_conv_forward(std::span<const double> image, int height, int width,
                                   const ClassicalConvLayer& layer) {
  check_dims(height, width, image);
  const auto patches = data::extract_patches(image, height, width, layer.stride);
  FeatureMaps out;
  out.rows = data::output_extent(height, layer.stride);
  out.cols = data::output_extent(width, layer.stride);
  const auto np = patches.size();
  out.data.assign(kFeatureMaps * np, 0.0);
  for (int m = 0; m < kFeatureMaps; ++m) {
    for (std::size_t p = 0; p < np; ++p) {
      double acc = layer.bias[m];
      for (int t = 0; t < 4; ++t) acc += layer.filters[m][t] * patches[p][t];
      out.data[m * np + p] = layer.relu ? std::max(acc, 0.0) : acc;
    }
  }
  return out;
}

std::array<double, kClasses> dense_forward(std::span<const double> features, const DenseLayer& head) {
  if (static_cast<int>(features.size()) != head.inputs) {
    throw std::invalid_argument("dense layer expects " + std::to_string(head.inputs) + " features, got " +
                                std::to_string(features.size()));
  }
  std::array<double, kClasses> out = head.bias;
  for (int c = 0; c < kClasses; ++c) {
    const double* w = head.weights.data() + static_cast<std::size_t>(c) * head.inputs;
    for (int i = 0; i < head.inputs; ++i) out[c] += w[i] * features[i];
  }
  return out;
}

LossResult softmax_cross_entropy(std::span<const double> logits, int label) {
  if (logits.size() != kClasses) throw std::invalid_argument("expected two logits");
  if (label < 0 || label >= kClasses) throw std::invalid_argument("label must be 0 or 1");
  const double mx = std::max(logits[0], logits[1]);
  const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
  LossResult res;
  res.loss = lse - logits[label];
  for (int c = 0; c < kClasses; ++c) res.grad[c] = std::exp(logits[c] - lse) - (c == label ? 1.0 : 0.0);
  return res;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  }
  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

// ---------------------------------------------------------------------------
// Model

HybridModel::HybridModel(ModelConfig config) : config_(std::move(config)) {
  if (config_.stride < 1) throw ConfigError("stride must be >= 1");
  if (config_.height < 2 || config_.width < 2) throw ConfigError("images must be at least 2x2");
  rows_ = data::output_extent(config_.height, config_.stride);
  cols_ = data::output_extent(config_.width, config_.stride);
  head_.inputs = kFeatureMaps * rows_ * cols_;
  head_.weights.assign(static_cast<std::size_t>(kClasses) * head_.inputs, 0.0);

  std::size_t offset = 0;
  const auto add_group = [&](std::string name, std::size_t n) {
    groups_.push_back({std::move(name), offset, n});
    offset += n;
  };
  if (config_.front == "classical") {
    classical_.stride = config_.stride;
    classical_.relu = config_.relu;
    add_group("conv_filters", kFeatureMaps * 4);
    add_group("conv_bias", kFeatureMaps);
  } else {
    quantum_.emplace(circuits::make_ansatz(config_.front), config_.stride);
    add_group("quantum_kernels", quantum_->kernels.size() * quantum_->ansatz.num_params());
  }
  add_group("dense_weights", head_.weights.size());
  add_group("dense_bias", kClasses);
}

std::size_t HybridModel::parameter_count() const { return groups_.back().offset + groups_.back().size; }

std::vector<double> HybridModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  if (quantum_) {
    for (const auto& k : quantum_->kernels) flat.insert(flat.end(), k.begin(), k.end());
  } else {
    for (const auto& f : classical_.filters) flat.insert(flat.end(), f.begin(), f.end());
    flat.insert(flat.end(), classical_.bias.begin(), classical_.bias.end());
  }
  flat.insert(flat.end(), head_.weights.begin(), head_.weights.end());
  flat.insert(flat.end(), head_.bias.begin(), head_.bias.end());
  return flat;
}

void HybridModel::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw std::invalid_argument("expected " + std::to_string(parameter_count()) + " parameters, got " +
                                std::to_string(values.size()));
  }
  auto it = values.begin();
  const auto take = [&](auto& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  if (quantum_) {
    for (auto& k : quantum_->kernels) take(k);
  } else {
    for (auto& f : classical_.filters) take(f);
    take(classical_.bias);
  }
  take(head_.weights);
  take(head_.bias);
}

void HybridModel::initialize(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  if (quantum_) {
    for (auto& k : quantum_->kernels) {
      for (auto& t : k) t = uniform(gen, -std::numbers::pi, std::numbers::pi);
    }
  } else {
    // fan_in = 2*2 inputs, fan_out = 4 maps * 2*2
    const double a = std::sqrt(6.0 / (4.0 + 16.0));
    for (auto& f : classical_.filters) {
      for (auto& w : f) w = uniform(gen, -a, a);
    }
    classical_.bias.fill(0.0);
  }
  const double a = std::sqrt(6.0 / (head_.inputs + kClasses));
  for (auto& w : head_.weights) w = uniform(gen, -a, a);
  head_.bias.fill(0.0);
}

void HybridModel::check_image(std::span<const double> image) const {
  if (image.size() != static_cast<std::size_t>(config_.height) * config_.width) {
    throw std::invalid_argument("model expects " + std::to_string(config_.height) + "x" +
                                std::to_string(config_.width) + " images");
  }
}

FeatureMaps HybridModel::features(std::span<const double> image) const {
  check_image(image);
  if (quantum_) return quantum_conv_forward(image, config_.height, config_.width, *quantum_);
  return classical_conv_forward(image, config_.height, config_.width, classical_);
}

std::array<double, kClasses> HybridModel::logits(std::span<const double> image) const {
  return dense_forward(features(image).data, head_);
}

double HybridModel::accumulate_gradient(std::span<const double> image, int label,
                                        std::span<double> grad) const {
  check_image(image);
  if (grad.size() != parameter_count()) throw std::invalid_argument("gradient buffer has wrong size");

  autodiff::QuantumLayerContext ctx;
  const FeatureMaps maps = quantum_ ? quantum_conv_forward(image, config_.height, config_.width, *quantum_, &ctx)
                                    : classical_conv_forward(image, config_.height, config_.width, classical_);
  const auto logit = dense_forward(maps.data, head_);
  const auto loss = softmax_cross_entropy(logit, label);

  const auto& gw = groups_[groups_.size() - 2];
  const auto& gb = groups_.back();
  const auto nf = static_cast<std::size_t>(head_.inputs);
  std::vector<double> dfeat(nf, 0.0);
  for (int c = 0; c < kClasses; ++c) {
    const double g = loss.grad[c];
    const double* w = head_.weights.data() + c * nf;
    for (std::size_t i = 0; i < nf; ++i) {
      grad[gw.offset + c * nf + i] += g * maps.data[i];
      dfeat[i] += g * w[i];
    }
    grad[gb.offset + c] += g;
  }

  const auto np = static_cast<std::size_t>(rows_) * cols_;
  if (quantum_) {
    const auto nk = quantum_->kernels.size();
    const auto r = static_cast<std::size_t>(quantum_->ansatz.num_readouts());
    std::vector<double> upstream(np * nk * r);
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t k = 0; k < nk; ++k) {
        for (std::size_t j = 0; j < r; ++j) upstream[(p * nk + k) * r + j] = dfeat[(k * r + j) * np + p];
      }
    }
    const auto kgrads = autodiff::quantum_layer_backward(upstream, ctx);
    std::size_t at = groups_.front().offset;
    for (const auto& kg : kgrads) {
      for (double v : kg) grad[at++] += v;
    }
  } else {
    const auto patches = data::extract_patches(image, config_.height, config_.width, config_.stride);
    const auto& gf = groups_[0];
    const auto& gbias = groups_[1];
    for (int m = 0; m < kFeatureMaps; ++m) {
      for (std::size_t p = 0; p < np; ++p) {
        double g = dfeat[m * np + p];
        if (classical_.relu && maps.data[m * np + p] <= 0.0) g = 0.0;
        for (int t = 0; t < 4; ++t) grad[gf.offset + m * 4 + t] += g * patches[p][t];
        grad[gbias.offset + m] += g;
      }
    }
  }
  return loss.loss;
}

// ---------------------------------------------------------------------------
// Training

Evaluation evaluate(const HybridModel& model, const data::Dataset& ds) {
  if (ds.size() == 0) throw DataError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto logit = model.logits(ds.image(i));
    const int pred = logit[1] > logit[0] ? 1 : 0;
    correct += pred == ds.labels[i] ? 1 : 0;
    loss += softmax_cross_entropy(logit, ds.labels[i]).loss;
  }
  const auto n = static_cast<double>(ds.size());
  return {static_cast<double>(correct) / n, loss / n};
}

RunMetrics fit(HybridModel& model, const data::Dataset& train, const data::Dataset& val,
               const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train.size() == 0 || val.size() == 0) throw DataError("fit needs non-empty train and validation sets");
  if (config.epochs < 1 || config.batch_size < 1) throw ConfigError("epochs and batch size must be >= 1");

  std::mt19937_64 shuffle_gen(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  auto params = model.parameters();
  AdamState adam(config.adam, params.size());
  std::vector<double> grad(params.size());

  RunMetrics metrics;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(shuffle_gen() % (i + 1));
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        model.accumulate_gradient(train.image(order[b]), train.labels[order[b]], grad);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grad) g *= scale;
      adam_step(params, grad, adam);
      model.set_parameters(params);
    }
    for (double p : params) {
      if (!std::isfinite(p)) throw NumericError("non-finite parameter after epoch " + std::to_string(epoch));
    }
    const auto tr = evaluate(model, train);
    const auto va = evaluate(model, val);
    EpochMetrics em{epoch, tr.accuracy, tr.loss, va.accuracy, va.loss};
    metrics.epochs.push_back(em);
    metrics.max_train_acc = std::max(metrics.max_train_acc, em.train_acc);
    metrics.max_val_acc = std::max(metrics.max_val_acc, em.val_acc);
    if (on_epoch) on_epoch(em);
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   qpool-checkpoint 1
//   front <ansatz key | classical>
//   height <int> / width <int> / stride <int> / relu <0|1>
//   group <name> <count>
//   <count lines of %.17g values>
//   ...
//   end

void save_checkpoint(const HybridModel& model, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    const auto& c = model.config();
    out << "qpool-checkpoint 1\n"
        << "front " << c.front << "\n"
        << "height " << c.height << "\nwidth " << c.width << "\nstride " << c.stride << "\nrelu "
        << (c.relu ? 1 : 0) << "\n";
    const auto params = model.parameters();
    char buf[32];
    for (const auto& g : model.groups()) {
      out << "group " << g.name << " " << g.size << "\n";
      for (std::size_t i = 0; i < g.size; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", params[g.offset + i]);
        out << buf << "\n";
      }
    }
    out << "end\n";
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

HybridModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const auto fail = [&](const std::string& why) -> DataError {
    return DataError("checkpoint " + path.string() + ": " + why);
  };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "qpool-checkpoint" || version != 1) throw fail("bad header");
  ModelConfig cfg;
  std::string key;
  int relu = 0;
  if (!(in >> key >> cfg.front) || key != "front") throw fail("missing front");
  if (!(in >> key >> cfg.height) || key != "height") throw fail("missing height");
  if (!(in >> key >> cfg.width) || key != "width") throw fail("missing width");
  if (!(in >> key >> cfg.stride) || key != "stride") throw fail("missing stride");
  if (!(in >> key >> relu) || key != "relu") throw fail("missing relu");
  cfg.relu = relu != 0;

  HybridModel model(cfg);
  std::vector<double> values(model.parameter_count());
  for (const auto& g : model.groups()) {
    std::string name;
    std::size_t count = 0;
    if (!(in >> key >> name >> count) || key != "group" || name != g.name || count != g.size) {
      throw fail("group '" + g.name + "' missing or mis-sized");
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::string tok;
      if (!(in >> tok)) throw fail("truncated group " + g.name);
      try {
        values[g.offset + i] = std::stod(tok);
      } catch (const std::exception&) {
        throw fail("bad value '" + tok + "' in group " + g.name);
      }
    }
  }
  if (!(in >> key) || key != "end") throw fail("missing end marker");
  model.set_parameters(values);
  return model;
}

}  // namespace qpool::nn
