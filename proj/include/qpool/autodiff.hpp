#pragma once

#include <span>
#include <vector>

#include "qpool/circuits.hpp"
#include "qpool/sim.hpp"

namespace qpool::autodiff {

enum class Method { TwoTermShift, FourTermShift, FiniteDifference };

/// Row-major Jacobian: values[r * num_params + k] = d<Z_r>/d theta_k.
struct GradientRecord {
  std::vector<double> values;
  int num_params = 0;
  int num_readouts = 0;
  Method method = Method::TwoTermShift;

  double at(int readout, int param) const { return values[readout * num_params + param]; }
  std::span<const double> row(int readout) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(readout) * num_params,
                                                   num_params);
  }
};

/// Parameter-shift Jacobian of every readout. Single-qubit rotations use the
/// two-term rule with shifts +-pi/2; controlled rotations use the four-term
/// rule with shifts +-pi/2 and +-3pi/2. Slots shared by several gates
/// accumulate per-occurrence contributions. The circuit must be
/// measurement-free (see sim::defer_measurements).
GradientRecord param_shift_jacobian(const sim::Circuit& circuit, std::span<const double> params,
                                    std::span<const double> inputs = {});

std::vector<double> param_shift_gradient(const sim::Circuit& circuit,
                                         std::span<const double> params, int readout_index,
                                         std::span<const double> inputs = {});

/// Central differences; reference route for the shift rules.
GradientRecord finite_difference_jacobian(const sim::Circuit& circuit,
                                          std::span<const double> params,
                                          std::span<const double> inputs = {}, double h = 1e-4);

/// Cached forward state of one quantum convolution layer on one image.
struct QuantumLayerContext {
  const circuits::Ansatz* ansatz = nullptr;
  std::vector<std::vector<double>> kernels;  // kernel -> theta
  std::vector<std::vector<double>> patches;  // patch -> 4 inputs
  /// Raw readouts, index (patch * kernels + kernel) * readouts + r.
  std::vector<double> raw;

  std::size_t output_size() const;
};

/// Accumulates sum over patches of upstream * post'(z) * d<Z>/d theta for
/// every kernel. `upstream` uses the same layout as ctx.raw.
std::vector<std::vector<double>> quantum_layer_backward(std::span<const double> upstream,
                                                        const QuantumLayerContext& ctx);

}  // namespace qpool::autodiff
