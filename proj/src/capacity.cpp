#include "qpool/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qpool/autodiff.hpp"
#include "qpool/errors.hpp"

namespace qpool::capacity {

namespace {

constexpr double kMinProbability = 1e-12;
constexpr double kNegativeEigenTolerance = -1e-10;

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
}

int sample_class(std::span<const double> p, std::mt19937_64& gen) {
  const double u = uniform(gen, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < p.size(); ++c) {
    acc += p[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(p.size()) - 1;
}

double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

}  // namespace

CircuitModel::CircuitModel(sim::Circuit circuit, ProbabilityMap map) : circuit_(std::move(circuit)), map_(map) {
  if (circuit_.has_measurements()) throw std::invalid_argument("CircuitModel needs a deferred circuit");
  if (circuit_.readout().empty()) throw std::invalid_argument("CircuitModel needs at least one readout");
  if (map_ == ProbabilityMap::Born && circuit_.readout().size() != 1) {
    throw std::invalid_argument("Born probability map is defined for single-readout circuits only");
  }
}

int CircuitModel::num_classes() const {
  const auto r = static_cast<int>(circuit_.readout().size());
  return r == 1 ? 2 : r;
}

ClassProbabilities CircuitModel::evaluate(std::span<const double> x, std::span<const double> theta) const {
  const auto z = sim::evaluate(circuit_, theta, x);
  const auto jac = autodiff::param_shift_jacobian(circuit_, theta, x);
  const int d = num_params();
  const int nc = num_classes();
  ClassProbabilities out;
  out.p.assign(nc, 0.0);
  out.jacobian.assign(static_cast<std::size_t>(nc) * d, 0.0);

  if (map_ == ProbabilityMap::Born) {
    out.p = {(1 + z[0]) / 2, (1 - z[0]) / 2};
    for (int k = 0; k < d; ++k) {
      out.jacobian[k] = jac.at(0, k) / 2;
      out.jacobian[d + k] = -jac.at(0, k) / 2;
    }
    return out;
  }

  // logits l = z (R readouts) or [z, -z] (one readout); dl/dtheta from jac.
  std::vector<double> logits;
  std::vector<double> dlogits(static_cast<std::size_t>(nc) * d);
  if (z.size() == 1) {
    logits = {z[0], -z[0]};
    for (int k = 0; k < d; ++k) {
      dlogits[k] = jac.at(0, k);
      dlogits[d + k] = -jac.at(0, k);
    }
  } else {
    logits = z;
    for (int c = 0; c < nc; ++c) {
      for (int k = 0; k < d; ++k) dlogits[c * d + k] = jac.at(c, k);
    }
  }
  const double lse = log_sum_exp(logits);
  for (int c = 0; c < nc; ++c) out.p[c] = std::exp(logits[c] - lse);
  // dp_c = p_c (dl_c - sum_j p_j dl_j)
  for (int k = 0; k < d; ++k) {
    double mean = 0.0;
    for (int c = 0; c < nc; ++c) mean += out.p[c] * dlogits[c * d + k];
    for (int c = 0; c < nc; ++c) out.jacobian[c * d + k] = out.p[c] * (dlogits[c * d + k] - mean);
  }
  return out;
}

std::optional<std::vector<double>> log_likelihood_grad(const CircuitModel& model, std::span<const double> x,
                                                       int y, std::span<const double> theta) {
  if (y < 0 || y >= model.num_classes()) throw std::out_of_range("class index " + std::to_string(y));
  const auto probs = model.evaluate(x, theta);
  const double p = probs.p[y];
  if (p < kMinProbability) return std::nullopt;
  const int d = model.num_params();
  std::vector<double> score(d);
  for (int k = 0; k < d; ++k) score[k] = probs.jacobian[y * d + k] / p;
  return score;
}

FIMEstimate empirical_fim(const CircuitModel& model, std::span<const double> theta,
                          const std::vector<std::vector<double>>& inputs, std::mt19937_64& gen) {
  if (inputs.empty()) throw std::invalid_argument("empirical_fim needs at least one input");
  const int d = model.num_params();
  FIMEstimate est;
  est.matrix = Matrix::Zero(d, d);
  est.theta.assign(theta.begin(), theta.end());
  Eigen::VectorXd s(d);
  for (const auto& x : inputs) {
    const auto probs = model.evaluate(x, theta);
    const int y = sample_class(probs.p, gen);
    const double p = probs.p[y];
    if (p < kMinProbability) {
      ++est.skipped;
      continue;
    }
    for (int k = 0; k < d; ++k) s[k] = probs.jacobian[y * d + k] / p;
    est.matrix.noalias() += s * s.transpose();
    ++est.k;
  }
  if (est.k > 0) est.matrix /= static_cast<double>(est.k);
  return est;
}

std::vector<Matrix> normalized_fim(const std::vector<Matrix>& fims) {
  if (fims.empty()) throw std::invalid_argument("normalized_fim needs at least one sample");
  double mean_trace = 0.0;
  for (const auto& f : fims) mean_trace += f.trace();
  mean_trace /= static_cast<double>(fims.size());
  std::vector<Matrix> out;
  out.reserve(fims.size());
  for (const auto& f : fims) {
    if (mean_trace > 0.0) {
      out.push_back(static_cast<double>(f.rows()) * f / mean_trace);
    } else {
      out.push_back(Matrix::Zero(f.rows(), f.cols()));
    }
  }
  return out;
}

double kappa(double gamma, std::int64_t n) {
  const auto nn = static_cast<double>(n);
  return gamma * nn / (2 * std::numbers::pi * std::log(nn));
}

double effective_dimension_of(const std::vector<Matrix>& normalized, double gamma, std::int64_t n) {
  if (normalized.empty()) throw std::invalid_argument("effective dimension needs at least one sample");
  const double k = kappa(gamma, n);
  if (!(k > 1.0)) {
    throw NumericError("gamma * n / (2 pi log n) = " + std::to_string(k) + " must exceed 1");
  }
  std::vector<double> half_logdets;
  half_logdets.reserve(normalized.size());
  for (const auto& f : normalized) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(f, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      double lambda = eig.eigenvalues()[i];
      if (lambda < kNegativeEigenTolerance) {
        throw NumericError("normalized FIM has eigenvalue " + std::to_string(lambda));
      }
      lambda = std::max(lambda, 0.0);
      acc += std::log1p(k * lambda);
    }
    half_logdets.push_back(0.5 * acc);
  }
  const double log_mean = log_sum_exp(half_logdets) - std::log(static_cast<double>(normalized.size()));
  return log_mean / std::log(k);
}

double identity_fim_ed(int d, double gamma, std::int64_t n) {
  const double k = kappa(gamma, n);
  return 0.5 * d * std::log1p(k) / std::log(k);
}

void validate(const EDConfig& config) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw ConfigError("gamma must lie in (0, 1], got " + std::to_string(config.gamma));
  }
  if (config.n <= 1) throw ConfigError("n must be > 1, got " + std::to_string(config.n));
  if (config.theta_samples < 1 || config.data_samples < 1) {
    throw ConfigError("theta and data sample counts must be >= 1");
  }
}

InputSampler uniform_inputs(int width) {
  return [width](std::mt19937_64& gen) {
    std::vector<double> x(width);
    for (auto& v : x) v = uniform(gen, -1.0, 1.0);
    return x;
  };
}

InputSampler pooled_inputs(std::vector<std::vector<double>> pool) {
  if (pool.empty()) throw std::invalid_argument("input pool is empty");
  return [pool = std::move(pool)](std::mt19937_64& gen) { return pool[gen() % pool.size()]; };
}

namespace {

EDReport run_pipeline(int d, const EDConfig& config,
                      const std::function<FIMEstimate(std::span<const double>, std::mt19937_64&)>& one) {
  validate(config);
  std::mt19937_64 gen(config.seed);
  std::vector<Matrix> fims;
  fims.reserve(config.theta_samples);
  EDReport rep;
  std::vector<double> theta(d);
  for (int s = 0; s < config.theta_samples; ++s) {
    for (auto& t : theta) t = uniform(gen, -std::numbers::pi, std::numbers::pi);
    auto est = one(theta, gen);
    rep.skipped += est.skipped;
    fims.push_back(std::move(est.matrix));
  }
  for (const auto& f : fims) rep.mean_trace += f.trace();
  rep.mean_trace /= static_cast<double>(fims.size());

  rep.ed = effective_dimension_of(normalized_fim(fims), config.gamma, config.n);
  rep.d = d;
  rep.normalized_ed = rep.ed / d;
  rep.gamma = config.gamma;
  rep.n = config.n;
  rep.theta_samples = config.theta_samples;
  rep.data_samples = config.data_samples;
  rep.seed = config.seed;
  rep.volume = "[-pi,pi]^" + std::to_string(d);
  return rep;
}

}  // namespace

EDReport effective_dimension(const CircuitModel& model, const EDConfig& config, const InputSampler& inputs) {
  validate(config);
  std::mt19937_64 data_gen(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::vector<double>> xs;
  xs.reserve(config.data_samples);
  for (int j = 0; j < config.data_samples; ++j) xs.push_back(inputs(data_gen));
  return run_pipeline(model.num_params(), config, [&](std::span<const double> theta, std::mt19937_64& gen) {
    return empirical_fim(model, theta, xs, gen);
  });
}

EDReport effective_dimension(int d, const FimSampler& fim, const EDConfig& config) {
  return run_pipeline(d, config, [&](std::span<const double> theta, std::mt19937_64& gen) {
    FIMEstimate est;
    est.matrix = fim(theta, gen);
    est.k = config.data_samples;
    est.theta.assign(theta.begin(), theta.end());
    return est;
  });
}

}  // namespace qpool::capacity
