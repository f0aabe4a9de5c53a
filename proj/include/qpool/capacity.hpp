#pragma once

/**
 * Empirical Fisher information and effective dimension of a patch circuit.
 *
 * The circuit's readouts are mapped to a class distribution p(y | x; theta)
 * (softmax by default, Born-rule probabilities optionally). Scores
 * d/d theta log p come from parameter-shift Jacobians. For a set of theta
 * draws the empirical FIMs are normalized to mean trace d, and
 *
 *   ED = log( mean_s sqrt(det(I + kappa * Fhat_s)) ) / log(kappa),
 *   kappa = gamma * n / (2 pi log n),
 *
 * evaluated in the log domain through symmetric eigendecompositions.
 */

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qpool/sim.hpp"

namespace qpool::capacity {

using Matrix = Eigen::MatrixXd;

enum class ProbabilityMap {
  /// One readout: softmax([z, -z]); R readouts: softmax(z) over R classes.
  Softmax,
  /// One readout only: p(0) = (1 + z) / 2, p(1) = (1 - z) / 2.
  Born,
};

struct ClassProbabilities {
  std::vector<double> p;
  /// Row-major classes x params.
  std::vector<double> jacobian;
};

/// A measurement-free circuit viewed as a classifier p(y | x; theta).
class CircuitModel {
 public:
  CircuitModel(sim::Circuit circuit, ProbabilityMap map);

  int num_params() const { return circuit_.num_params(); }
  int num_inputs() const { return circuit_.num_inputs(); }
  int num_classes() const;
  const sim::Circuit& circuit() const { return circuit_; }

  ClassProbabilities evaluate(std::span<const double> x, std::span<const double> theta) const;

 private:
  sim::Circuit circuit_;
  ProbabilityMap map_;
};

/// Score d/d theta log p(y | x; theta); nullopt when p < 1e-12.
std::optional<std::vector<double>> log_likelihood_grad(const CircuitModel& model,
                                                       std::span<const double> x, int y,
                                                       std::span<const double> theta);

struct FIMEstimate {
  Matrix matrix;
  int k = 0;
  int skipped = 0;
  std::vector<double> theta;
};

/// (1/k) sum_j s_j s_j^T with y_j drawn from the model at each input.
FIMEstimate empirical_fim(const CircuitModel& model, std::span<const double> theta,
                          const std::vector<std::vector<double>>& inputs, std::mt19937_64& gen);

/// Fhat_s = d * F_s / mean_s tr(F_s). All-zero input stays zero.
std::vector<Matrix> normalized_fim(const std::vector<Matrix>& fims);

/// gamma * n / (2 pi log n).
double kappa(double gamma, std::int64_t n);

/// ED of already-normalized FIM samples. Eigenvalues in [-1e-10, 0) are
/// clipped to zero; anything more negative raises NumericError.
double effective_dimension_of(const std::vector<Matrix>& normalized, double gamma, std::int64_t n);

/// (d / 2) log(1 + kappa) / log(kappa): the ED of an identity FIM.
double identity_fim_ed(int d, double gamma, std::int64_t n);

struct EDConfig {
  double gamma = 1.0;
  std::int64_t n = 546;
  int theta_samples = 100;
  int data_samples = 100;
  std::uint64_t seed = 0;
};

struct EDReport {
  double ed = 0.0;
  double normalized_ed = 0.0;
  double gamma = 1.0;
  std::int64_t n = 0;
  int d = 0;
  int theta_samples = 0;
  int data_samples = 0;
  std::uint64_t seed = 0;
  int skipped = 0;
  double mean_trace = 0.0;
  /// Parameter space descriptor, e.g. "[-pi,pi]^6".
  std::string volume;
};

/// Draws the k inputs shared by every theta sample.
using InputSampler = std::function<std::vector<double>(std::mt19937_64&)>;

/// Uniform over [-1, 1]^width.
InputSampler uniform_inputs(int width);
/// Uniform choice from a fixed pool (e.g. dataset patches).
InputSampler pooled_inputs(std::vector<std::vector<double>> pool);

/// Theta ~ U[-pi, pi]^d, m draws; one empirical FIM per draw.
EDReport effective_dimension(const CircuitModel& model, const EDConfig& config,
                             const InputSampler& inputs);

/// Same pipeline with a caller-supplied FIM per theta draw.
using FimSampler = std::function<Matrix(std::span<const double> theta, std::mt19937_64& gen)>;
EDReport effective_dimension(int d, const FimSampler& fim, const EDConfig& config);

void validate(const EDConfig& config);

}  // namespace qpool::capacity
