#include "qpool/circuits.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "qpool/errors.hpp"

namespace qpool::circuits {

using sim::Angle;
using sim::Circuit;

namespace {

constexpr double kPi = std::numbers::pi;

struct KeyEntry {
  const char* key;
  AnsatzSpec spec;
};

constexpr KeyEntry kKeys[] = {
    {"conv", {Family::ConvNoPool, Option::None}},
    {"midcircuit-rx", {Family::MidCircuit, Option::RX}},
    {"midcircuit-ry", {Family::MidCircuit, Option::RY}},
    {"ancilla-cy", {Family::Ancilla, Option::CY}},
    {"ancilla-cz", {Family::Ancilla, Option::CZ}},
    {"mod-a", {Family::Modular, Option::ModA}},
    {"mod-b", {Family::Modular, Option::ModB}},
    {"mod-c", {Family::Modular, Option::ModC}},
    {"select-sign", {Family::QubitSelect, Option::Sign}},
    {"select-tanh", {Family::QubitSelect, Option::Tanh}},
};

// Two-parameter pooling unit: CRZ(a->b), X(a), CRX(a->b). Qubit b is kept.
void pool_unit(Circuit& c, int a, int b, int& slot) {
  c.crz(a, b, Angle::param(slot++));
  c.x(a);
  c.crx(a, b, Angle::param(slot++));
}

void modular_block(Circuit& c, Option variant, int a, int b, int& slot) {
  switch (variant) {
    case Option::ModA: break;
    case Option::ModB:
      c.ry(a, Angle::param(slot++));
      c.ry(b, Angle::param(slot++));
      c.cnot(a, b);
      break;
    case Option::ModC:
      for (int q : {a, b}) {
        c.rx(q, Angle::param(slot++));
        c.rz(q, Angle::param(slot++));
      }
      c.crx(b, a, Angle::param(slot++));
      c.crx(a, b, Angle::param(slot++));
      for (int q : {a, b}) {
        c.rx(q, Angle::param(slot++));
        c.rz(q, Angle::param(slot++));
      }
      break;
    default: throw std::invalid_argument("not a modular variant");
  }
  pool_unit(c, a, b, slot);
}

void conditioned_rotation(Circuit& c, Option axis, int qubit, int slot, int bit) {
  const auto kind = axis == Option::RX ? sim::GateKind::RX : sim::GateKind::RY;
  c.add({kind, {qubit, qubit}, Angle::param(slot), bit});
}

}  // namespace

const std::vector<std::string>& ansatz_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : kKeys) k.emplace_back(e.key);
    return k;
  }();
  return keys;
}

AnsatzSpec parse_ansatz_key(std::string_view key) {
  for (const auto& e : kKeys) {
    if (key == e.key) return e.spec;
  }
  std::string known;
  for (const auto& e : kKeys) known += std::string(known.empty() ? "" : ", ") + e.key;
  throw ConfigError("unknown ansatz '" + std::string(key) + "' (expected one of: " + known + ")");
}

std::string ansatz_key(const AnsatzSpec& spec) {
  for (const auto& e : kKeys) {
    if (e.spec == spec) return e.key;
  }
  throw std::invalid_argument("ansatz spec has no key");
}

double apply_postprocess(Postprocess kind, double z) {
  switch (kind) {
    case Postprocess::Identity: return z;
    case Postprocess::Sign: return z < 0.0 ? -1.0 : (z > 0.0 ? 1.0 : 0.0);
    case Postprocess::Tanh: return std::tanh(z);
  }
  return z;
}

double postprocess_derivative(Postprocess kind, double z) {
  switch (kind) {
    case Postprocess::Identity: return 1.0;
    case Postprocess::Sign: return 0.0;
    case Postprocess::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

void validate_patch(std::span<const double> x) {
  if (x.size() != kPatchInputs) {
    throw std::invalid_argument("encoding expects 4 inputs, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::abs(x[i]) <= 1.0)) {
      throw std::invalid_argument("input " + std::to_string(i) + " = " + std::to_string(x[i]) +
                                  " outside [-1, 1]");
    }
  }
}

Circuit higher_order_encoding() {
  Circuit c(4, kPatchInputs);
  for (int q = 0; q < 4; ++q) c.h(q);
  for (int q = 0; q < 4; ++q) c.rz(q, Angle::input(q, kPi));
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      c.cnot(i, j);
      c.rz(j, Angle::input_product(i, j, kPi));
      c.cnot(i, j);
    }
  }
  return c;
}

Circuit higher_order_encoding(std::span<const double> x) {
  validate_patch(x);
  const Circuit bound = higher_order_encoding();
  Circuit c(4, 0);
  for (const auto& op : bound.ops()) {
    auto g = std::get<sim::GateOp>(op);
    if (g.angle) g.angle = Angle::constant(g.angle->resolve({}, x));
    c.add(g);
  }
  return c;
}

Circuit basic_entangling_layer(int param_base) {
  Circuit c(4);
  for (int q = 0; q < 4; ++q) c.rx(q, Angle::param(param_base + q));
  c.cnot(0, 1).cnot(1, 2).cnot(2, 3).cnot(3, 0);
  return c;
}

Circuit build_conv_no_pool() {
  Circuit c(4, kPatchInputs);
  c.append(higher_order_encoding());
  c.append(basic_entangling_layer(0));
  c.set_readout({0, 1, 2, 3});
  return c;
}

Circuit build_midcircuit_pooling(Option axis) {
  if (axis != Option::RX && axis != Option::RY) {
    throw std::invalid_argument("mid-circuit pooling axis must be RX or RY");
  }
  Circuit c(4, kPatchInputs);
  c.append(higher_order_encoding());
  const int b0 = c.measure(0);
  conditioned_rotation(c, axis, 1, 0, b0);
  conditioned_rotation(c, axis, 2, 1, b0);
  conditioned_rotation(c, axis, 3, 2, b0);
  const int b1 = c.measure(1);
  conditioned_rotation(c, axis, 2, 3, b1);
  conditioned_rotation(c, axis, 3, 4, b1);
  c.cnot(2, 3);
  const int b2 = c.measure(2);
  conditioned_rotation(c, axis, 3, 5, b2);
  c.set_readout({3});
  return c;
}

Circuit build_ancilla_pooling(Option gate) {
  if (gate != Option::CY && gate != Option::CZ) {
    throw std::invalid_argument("ancilla pooling gate must be CY or CZ");
  }
  constexpr int kAncilla = 4;
  Circuit c(5, kPatchInputs);
  c.h(kAncilla);
  c.append(higher_order_encoding());
  c.append(basic_entangling_layer(0));
  for (int q = 0; q < 4; ++q) {
    if (gate == Option::CY) {
      c.cy(q, kAncilla);
    } else {
      c.cz(q, kAncilla);
    }
  }
  c.h(kAncilla);
  c.set_readout({kAncilla});
  return c;
}

Circuit build_modular_pooling(Option variant) {
  Circuit c(4, kPatchInputs);
  c.append(higher_order_encoding());
  int slot = 0;
  modular_block(c, variant, 0, 1, slot);
  modular_block(c, variant, 2, 3, slot);
  modular_block(c, variant, 1, 3, slot);
  c.set_readout({3});
  return c;
}

Circuit build_qubit_select() {
  Circuit c(4, kPatchInputs);
  c.append(higher_order_encoding());
  c.append(basic_entangling_layer(0));
  c.set_readout({2});
  return c;
}

std::vector<double> Ansatz::expectations(std::span<const double> x,
                                         std::span<const double> theta) const {
  validate_patch(x);
  return sim::evaluate(deferred, theta, x);
}

Ansatz make_ansatz(const AnsatzSpec& spec) {
  Circuit c = [&] {
    switch (spec.family) {
      case Family::ConvNoPool: return build_conv_no_pool();
      case Family::MidCircuit: return build_midcircuit_pooling(spec.option);
      case Family::Ancilla: return build_ancilla_pooling(spec.option);
      case Family::Modular: return build_modular_pooling(spec.option);
      case Family::QubitSelect: return build_qubit_select();
    }
    throw std::invalid_argument("unknown family");
  }();
  c.validate();
  Postprocess post = Postprocess::Identity;
  if (spec.family == Family::QubitSelect) {
    post = spec.option == Option::Sign ? Postprocess::Sign : Postprocess::Tanh;
  }
  Circuit deferred = sim::defer_measurements(c);
  return Ansatz{spec, ansatz_key(spec), std::move(c), std::move(deferred), post};
}

Ansatz make_ansatz(std::string_view key) { return make_ansatz(parse_ansatz_key(key)); }

}  // namespace qpool::circuits
