#include "qpool/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qpool::autodiff {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
// Four-term coefficients for generators with spectrum {0, +-1/2}.
const double kFourTermNear = (std::numbers::sqrt2 + 1) / (4 * std::numbers::sqrt2);
const double kFourTermFar = (std::numbers::sqrt2 - 1) / (4 * std::numbers::sqrt2);

void require_deferred(const sim::Circuit& circuit) {
  if (circuit.has_measurements()) {
    throw std::invalid_argument("gradients need a measurement-free circuit; defer first");
  }
}

}  // namespace

GradientRecord param_shift_jacobian(const sim::Circuit& circuit, std::span<const double> params,
                                    std::span<const double> inputs) {
  require_deferred(circuit);
  const int d = circuit.num_params();
  const int r = static_cast<int>(circuit.readout().size());
  GradientRecord rec{std::vector<double>(static_cast<std::size_t>(d) * r, 0.0), d, r,
                     Method::TwoTermShift};

  const auto shifted = [&](std::size_t op, double delta) {
    return sim::evaluate(circuit, params, inputs, sim::AngleShift{op, delta});
  };

  const auto& ops = circuit.ops();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& g = std::get<sim::GateOp>(ops[i]);
    const auto slot = g.param_slot();
    if (!slot) continue;
    if (!sim::is_rotation(g.kind)) {
      throw std::invalid_argument("parameter slot " + std::to_string(*slot) +
                                  " is attached to a non-rotation gate");
    }
    const double chain = g.angle->scale;
    if (sim::is_controlled_rotation(g.kind)) {
      rec.method = Method::FourTermShift;
      const auto p1 = shifted(i, kHalfPi);
      const auto m1 = shifted(i, -kHalfPi);
      const auto p3 = shifted(i, 3 * kHalfPi);
      const auto m3 = shifted(i, -3 * kHalfPi);
      for (int k = 0; k < r; ++k) {
        rec.values[k * d + *slot] +=
            chain * (kFourTermNear * (p1[k] - m1[k]) - kFourTermFar * (p3[k] - m3[k]));
      }
    } else {
      const auto plus = shifted(i, kHalfPi);
      const auto minus = shifted(i, -kHalfPi);
      for (int k = 0; k < r; ++k) rec.values[k * d + *slot] += chain * 0.5 * (plus[k] - minus[k]);
    }
  }
  return rec;
}

std::vector<double> param_shift_gradient(const sim::Circuit& circuit,
                                         std::span<const double> params, int readout_index,
                                         std::span<const double> inputs) {
  if (readout_index < 0 || readout_index >= static_cast<int>(circuit.readout().size())) {
    throw std::out_of_range("readout index " + std::to_string(readout_index));
  }
  const auto rec = param_shift_jacobian(circuit, params, inputs);
  const auto row = rec.row(readout_index);
  return {row.begin(), row.end()};
}

GradientRecord finite_difference_jacobian(const sim::Circuit& circuit,
                                          std::span<const double> params,
                                          std::span<const double> inputs, double h) {
  require_deferred(circuit);
  const int d = circuit.num_params();
  const int r = static_cast<int>(circuit.readout().size());
  GradientRecord rec{std::vector<double>(static_cast<std::size_t>(d) * r, 0.0), d, r,
                     Method::FiniteDifference};
  std::vector<double> p(params.begin(), params.end());
  for (int k = 0; k < d; ++k) {
    const double saved = p[k];
    p[k] = saved + h;
    const auto plus = sim::evaluate(circuit, p, inputs);
    p[k] = saved - h;
    const auto minus = sim::evaluate(circuit, p, inputs);
    p[k] = saved;
    for (int j = 0; j < r; ++j) rec.values[j * d + k] = (plus[j] - minus[j]) / (2 * h);
  }
  return rec;
}

std::size_t QuantumLayerContext::output_size() const {
  return patches.size() * kernels.size() * static_cast<std::size_t>(ansatz->num_readouts());
}

std::vector<std::vector<double>> quantum_layer_backward(std::span<const double> upstream,
                                                        const QuantumLayerContext& ctx) {
  if (ctx.ansatz == nullptr) throw std::invalid_argument("quantum_layer_backward: empty context");
  if (upstream.size() != ctx.output_size() || ctx.raw.size() != ctx.output_size()) {
    throw std::invalid_argument("quantum_layer_backward: upstream has " +
                                std::to_string(upstream.size()) + " entries, context expects " +
                                std::to_string(ctx.output_size()));
  }
  const auto& ansatz = *ctx.ansatz;
  const int d = ansatz.num_params();
  const int r = ansatz.num_readouts();
  const std::size_t nk = ctx.kernels.size();

  std::vector<std::vector<double>> grads(nk, std::vector<double>(d, 0.0));
  if (ansatz.post == circuits::Postprocess::Sign) return grads;

  for (std::size_t p = 0; p < ctx.patches.size(); ++p) {
    for (std::size_t k = 0; k < nk; ++k) {
      const std::size_t base = (p * nk + k) * r;
      bool any = false;
      for (int j = 0; j < r; ++j) any = any || upstream[base + j] != 0.0;
      if (!any) continue;
      const auto jac = param_shift_jacobian(ansatz.deferred, ctx.kernels[k], ctx.patches[p]);
      for (int j = 0; j < r; ++j) {
        const double w =
            upstream[base + j] * circuits::postprocess_derivative(ansatz.post, ctx.raw[base + j]);
        for (int t = 0; t < d; ++t) grads[k][t] += w * jac.at(j, t);
      }
    }
  }
  return grads;
}

}  // namespace qpool::autodiff
