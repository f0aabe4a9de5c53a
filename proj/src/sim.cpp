#include "qpool/sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qpool/errors.hpp"

namespace qpool::sim {

namespace {

constexpr Complex kI{0.0, 1.0};

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

std::string describe(const GateOp& op) {
  std::string s(gate_name(op.kind));
  s += "(q" + std::to_string(op.targets[0]);
  if (op.arity() == 2) s += ",q" + std::to_string(op.targets[1]);
  return s + ")";
}

void check_qubit(int q, int num_qubits, const char* what) {
  if (q < 0 || q >= num_qubits) {
    throw std::out_of_range(std::string(what) + ": qubit " + std::to_string(q) +
                            " outside register of " + std::to_string(num_qubits));
  }
}

}  // namespace

std::string_view gate_name(GateKind kind) {
  switch (kind) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::RZZ: return "RZZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CY: return "CY";
    case GateKind::CZ: return "CZ";
    case GateKind::CRX: return "CRX";
    case GateKind::CRY: return "CRY";
    case GateKind::CRZ: return "CRZ";
  }
  return "?";
}

bool is_two_qubit(GateKind kind) {
  switch (kind) {
    case GateKind::RZZ:
    case GateKind::CNOT:
    case GateKind::CY:
    case GateKind::CZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ: return true;
    default: return false;
  }
}

bool is_rotation(GateKind kind) {
  switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::RZZ:
    case GateKind::CRX:
    case GateKind::CRY:
    case GateKind::CRZ: return true;
    default: return false;
  }
}

bool is_controlled_rotation(GateKind kind) {
  return kind == GateKind::CRX || kind == GateKind::CRY || kind == GateKind::CRZ;
}

double Angle::resolve(std::span<const double> params, std::span<const double> inputs) const {
  switch (source) {
    case Source::Param:
      if (index >= static_cast<int>(params.size())) {
        throw std::out_of_range("missing parameter for slot " + std::to_string(index));
      }
      return scale * params[index];
    case Source::Input:
      if (index >= static_cast<int>(inputs.size())) {
        throw std::out_of_range("missing input " + std::to_string(index));
      }
      return scale * inputs[index];
    case Source::InputProduct:
      if (std::max(index, index2) >= static_cast<int>(inputs.size())) {
        throw std::out_of_range("missing input pair " + std::to_string(index) + "," +
                                std::to_string(index2));
      }
      return scale * inputs[index] * inputs[index2];
    case Source::Constant: return scale;
  }
  return 0.0;
}

std::optional<int> GateOp::param_slot() const {
  if (angle && angle->source == Angle::Source::Param) return angle->index;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Circuit

Circuit::Circuit(int num_qubits, int num_inputs) : num_qubits_(num_qubits), num_inputs_(num_inputs) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("circuit width must be in [1, 8], got " + std::to_string(num_qubits));
  }
}

Circuit& Circuit::add(GateOp op) {
  if (auto slot = op.param_slot()) num_params_ = std::max(num_params_, *slot + 1);
  ops_.emplace_back(op);
  return *this;
}

int Circuit::measure(int qubit) {
  const int bit = num_bits_++;
  ops_.emplace_back(MidMeasure{qubit, bit});
  return bit;
}

Circuit& Circuit::append(const Circuit& fragment) {
  if (fragment.num_qubits() > num_qubits_) {
    throw std::invalid_argument("fragment wider than host circuit");
  }
  const int offset = num_bits_;
  for (const auto& op : fragment.ops()) {
    if (const auto* g = std::get_if<GateOp>(&op)) {
      GateOp copy = *g;
      if (copy.condition) *copy.condition += offset;
      add(copy);
    } else {
      auto m = std::get<MidMeasure>(op);
      m.classical_bit += offset;
      ops_.emplace_back(m);
    }
  }
  num_bits_ += fragment.num_bits();
  num_inputs_ = std::max(num_inputs_, fragment.num_inputs());
  return *this;
}

Circuit& Circuit::set_readout(std::vector<int> qubits) {
  readout_ = std::move(qubits);
  return *this;
}

std::size_t Circuit::gate_count() const {
  std::size_t n = 0;
  for (const auto& op : ops_) n += std::holds_alternative<GateOp>(op) ? 1 : 0;
  return n;
}

std::size_t Circuit::measurement_count() const { return ops_.size() - gate_count(); }

void Circuit::validate() const {
  std::vector<bool> slot_used(num_params_, false);
  std::vector<bool> bit_assigned(num_bits_, false);
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const auto where = "op " + std::to_string(i);
    if (const auto* g = std::get_if<GateOp>(&ops_[i])) {
      for (int t = 0; t < g->arity(); ++t) check_qubit(g->targets[t], num_qubits_, where.c_str());
      if (g->arity() == 2 && g->targets[0] == g->targets[1]) {
        throw std::invalid_argument(where + ": " + describe(*g) + " needs two distinct qubits");
      }
      if (is_rotation(g->kind) != g->angle.has_value()) {
        throw std::invalid_argument(where + ": " + describe(*g) +
                                    (g->angle ? " takes no angle" : " is missing its angle"));
      }
      if (auto slot = g->param_slot()) slot_used[*slot] = true;
      if (g->angle && g->angle->source != Angle::Source::Param &&
          g->angle->source != Angle::Source::Constant &&
          std::max(g->angle->index, g->angle->index2) >= num_inputs_) {
        throw std::invalid_argument(where + ": input index beyond num_inputs");
      }
      if (g->condition) {
        const int b = *g->condition;
        if (b < 0 || b >= num_bits_ || !bit_assigned[b]) {
          throw std::invalid_argument(where + ": condition on classical bit " + std::to_string(b) +
                                      " before it is measured");
        }
      }
    } else {
      const auto& m = std::get<MidMeasure>(ops_[i]);
      check_qubit(m.qubit, num_qubits_, where.c_str());
      if (m.classical_bit < 0 || m.classical_bit >= num_bits_ || bit_assigned[m.classical_bit]) {
        throw std::invalid_argument(where + ": classical bit assigned twice");
      }
      bit_assigned[m.classical_bit] = true;
    }
  }
  for (int s = 0; s < num_params_; ++s) {
    if (!slot_used[s]) throw std::invalid_argument("parameter slot " + std::to_string(s) + " unused");
  }
  for (int q : readout_) check_qubit(q, num_qubits_, "readout");
}

// ---------------------------------------------------------------------------
// Statevector

Statevector::Statevector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw std::invalid_argument("statevector width must be in [1, 8]");
  }
  amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(std::vector<Complex> amplitudes) {
  const auto n = amplitudes.size();
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("amplitude count must be 2^n");
  int q = 0;
  while ((std::size_t{1} << q) < n) ++q;
  Statevector s(q);
  s.amps_ = std::move(amplitudes);
  return s;
}

double Statevector::norm_squared() const {
  double acc = 0.0;
  for (const auto& a : amps_) acc += std::norm(a);
  return acc;
}

void Statevector::apply(int qubit, const Mat2& m) {
  const std::size_t stride = std::size_t{1} << qubit;
  const std::size_t n = amps_.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const Complex a0 = amps_[i];
      const Complex a1 = amps_[i + stride];
      amps_[i] = m[0] * a0 + m[1] * a1;
      amps_[i + stride] = m[2] * a0 + m[3] * a1;
    }
  }
}

void Statevector::apply_controlled(int control, int target, const Mat2& m) {
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t stride = std::size_t{1} << target;
  const std::size_t n = amps_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & cmask) == 0 || (i & stride) != 0) continue;
    const Complex a0 = amps_[i];
    const Complex a1 = amps_[i | stride];
    amps_[i] = m[0] * a0 + m[1] * a1;
    amps_[i | stride] = m[2] * a0 + m[3] * a1;
  }
}

void Statevector::apply_zz_phase(int a, int b, double phi) {
  const Complex even = std::exp(-kI * (phi / 2));
  const Complex odd = std::exp(kI * (phi / 2));
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const bool parity = (((i >> a) ^ (i >> b)) & 1U) != 0;
    amps_[i] *= parity ? odd : even;
  }
}

double Statevector::probability_one(int qubit) const {
  const std::size_t mask = std::size_t{1} << qubit;
  double p = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if (i & mask) p += std::norm(amps_[i]);
  }
  return p;
}

void Statevector::collapse(int qubit, int outcome) {
  const double p1 = probability_one(qubit);
  const double p = outcome ? p1 : 1.0 - p1;
  if (p < 1e-15) {
    throw NumericError("collapse onto zero-probability outcome " + std::to_string(outcome) +
                       " of qubit " + std::to_string(qubit));
  }
  const std::size_t mask = std::size_t{1} << qubit;
  const double inv = 1.0 / std::sqrt(p);
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const bool bit = (i & mask) != 0;
    amps_[i] = (bit == (outcome != 0)) ? amps_[i] * inv : Complex{0.0, 0.0};
  }
}

// ---------------------------------------------------------------------------
// Gates

Mat2 gate_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle / 2);
  const double s = std::sin(angle / 2);
  switch (kind) {
    case GateKind::H: {
      const double r = std::numbers::sqrt2 / 2;
      return {r, r, r, -r};
    }
    case GateKind::X:
    case GateKind::CNOT: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::CY: return {0.0, -kI, kI, 0.0};
    case GateKind::CZ: return {1.0, 0.0, 0.0, -1.0};
    case GateKind::RX:
    case GateKind::CRX: return {c, -kI * s, -kI * s, c};
    case GateKind::RY:
    case GateKind::CRY: return {c, -s, s, c};
    case GateKind::RZ:
    case GateKind::CRZ: return {std::exp(-kI * (angle / 2)), 0.0, 0.0, std::exp(kI * (angle / 2))};
    case GateKind::RZZ: break;
  }
  throw std::invalid_argument("RZZ has no single-qubit matrix");
}

namespace {

void apply_resolved(Statevector& state, const GateOp& gate, double angle) {
  switch (gate.kind) {
    case GateKind::H:
    case GateKind::X:
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ: state.apply(gate.targets[0], gate_matrix(gate.kind, angle)); break;
    case GateKind::RZZ: state.apply_zz_phase(gate.targets[0], gate.targets[1], angle); break;
    default:
      state.apply_controlled(gate.targets[0], gate.targets[1], gate_matrix(gate.kind, angle));
      break;
  }
}

double resolve_angle(const GateOp& gate, std::span<const double> params,
                     std::span<const double> inputs) {
  return gate.angle ? gate.angle->resolve(params, inputs) : 0.0;
}

}  // namespace

void apply_gate(Statevector& state, const GateOp& gate, std::span<const double> params,
                std::span<const double> inputs) {
  for (int t = 0; t < gate.arity(); ++t) check_qubit(gate.targets[t], state.num_qubits(), "apply_gate");
  if (gate.arity() == 2 && gate.targets[0] == gate.targets[1]) {
    throw std::invalid_argument("apply_gate: " + describe(gate) + " needs distinct qubits");
  }
  if (is_rotation(gate.kind) && !gate.angle) {
    throw std::invalid_argument("apply_gate: " + describe(gate) + " has no angle");
  }
  apply_resolved(state, gate, resolve_angle(gate, params, inputs));
}

double expectation_z(const Statevector& state, int qubit) {
  check_qubit(qubit, state.num_qubits(), "expectation_z");
  const auto amps = state.amplitudes();
  const std::size_t mask = std::size_t{1} << qubit;
  double acc = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    acc += (i & mask) ? -std::norm(amps[i]) : std::norm(amps[i]);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Execution

Circuit defer_measurements(const Circuit& circuit) {
  if (!circuit.has_measurements()) return circuit;
  circuit.validate();

  Circuit out(circuit.num_qubits(), circuit.num_inputs());
  std::vector<int> bit_qubit(circuit.num_bits(), -1);
  std::vector<bool> measured(circuit.num_qubits(), false);

  for (const auto& op : circuit.ops()) {
    if (const auto* m = std::get_if<MidMeasure>(&op)) {
      if (measured[m->qubit]) {
        throw std::invalid_argument("qubit " + std::to_string(m->qubit) + " measured twice");
      }
      measured[m->qubit] = true;
      bit_qubit[m->classical_bit] = m->qubit;
      continue;
    }
    GateOp g = std::get<GateOp>(op);
    for (int t = 0; t < g.arity(); ++t) {
      if (measured[g.targets[t]]) {
        throw std::invalid_argument(describe(g) + " acts on qubit " + std::to_string(g.targets[t]) +
                                    " after its mid-circuit measurement");
      }
    }
    if (g.condition) {
      const int control = bit_qubit[*g.condition];
      GateKind controlled;
      switch (g.kind) {
        case GateKind::RX: controlled = GateKind::CRX; break;
        case GateKind::RY: controlled = GateKind::CRY; break;
        case GateKind::RZ: controlled = GateKind::CRZ; break;
        case GateKind::X: controlled = GateKind::CNOT; break;
        default:
          throw std::invalid_argument("conditioned " + describe(g) + " has no controlled form");
      }
      g = GateOp{controlled, {control, g.targets[0]}, g.angle, std::nullopt};
    }
    out.add(g);
  }
  out.set_readout(circuit.readout());
  return out;
}

Statevector simulate(const Circuit& circuit, std::span<const double> params,
                     std::span<const double> inputs) {
  if (circuit.has_measurements()) {
    throw std::invalid_argument("simulate() needs a measurement-free circuit; defer first");
  }
  Statevector state(circuit.num_qubits());
  for (const auto& op : circuit.ops()) {
    const auto& g = std::get<GateOp>(op);
    apply_resolved(state, g, resolve_angle(g, params, inputs));
  }
  return state;
}

std::vector<double> evaluate(const Circuit& circuit, std::span<const double> params,
                             std::span<const double> inputs, std::optional<AngleShift> shift) {
  if (circuit.has_measurements()) {
    throw std::invalid_argument("evaluate() needs a measurement-free circuit; defer first");
  }
  if (static_cast<int>(params.size()) != circuit.num_params()) {
    throw std::invalid_argument("expected " + std::to_string(circuit.num_params()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  Statevector state(circuit.num_qubits());
  const auto& ops = circuit.ops();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& g = std::get<GateOp>(ops[i]);
    double angle = resolve_angle(g, params, inputs);
    if (shift && shift->op_index == i) angle += shift->delta;
    apply_resolved(state, g, angle);
  }
  std::vector<double> out;
  out.reserve(circuit.readout().size());
  for (int q : circuit.readout()) out.push_back(expectation_z(state, q));
  return out;
}

std::vector<double> run_deferred(const Circuit& circuit, std::span<const double> params,
                                 std::span<const double> inputs) {
  if (!circuit.has_measurements()) return evaluate(circuit, params, inputs);
  return evaluate(defer_measurements(circuit), params, inputs);
}

TrajectoryResult run_trajectories(const Circuit& circuit, std::span<const double> params,
                                  std::span<const double> inputs, std::int64_t shots,
                                  std::uint64_t seed, TerminalReadout readout) {
  if (shots < 1) throw std::invalid_argument("run_trajectories: shots must be >= 1");
  if (static_cast<int>(params.size()) != circuit.num_params()) {
    throw std::invalid_argument("run_trajectories: parameter-length mismatch");
  }
  circuit.validate();

  std::mt19937_64 gen(seed);
  const auto& qubits = circuit.readout();
  std::vector<double> sum(qubits.size(), 0.0);
  std::vector<double> sum_sq(qubits.size(), 0.0);
  TrajectoryResult result;
  result.outcomes.reserve(static_cast<std::size_t>(shots));

  for (std::int64_t shot = 0; shot < shots; ++shot) {
    Statevector state(circuit.num_qubits());
    std::vector<std::uint8_t> bits(circuit.num_bits(), 0);
    for (const auto& op : circuit.ops()) {
      if (const auto* m = std::get_if<MidMeasure>(&op)) {
        const int outcome = uniform01(gen) < state.probability_one(m->qubit) ? 1 : 0;
        state.collapse(m->qubit, outcome);
        bits[m->classical_bit] = static_cast<std::uint8_t>(outcome);
        continue;
      }
      const auto& g = std::get<GateOp>(op);
      if (g.condition && bits[*g.condition] == 0) continue;
      apply_resolved(state, g, resolve_angle(g, params, inputs));
    }
    for (std::size_t r = 0; r < qubits.size(); ++r) {
      double value = expectation_z(state, qubits[r]);
      if (readout == TerminalReadout::Sampled) {
        value = uniform01(gen) < (1.0 - value) / 2 ? -1.0 : 1.0;
      }
      sum[r] += value;
      sum_sq[r] += value * value;
    }
    result.outcomes.push_back(std::move(bits));
  }

  const auto n = static_cast<double>(shots);
  for (std::size_t r = 0; r < qubits.size(); ++r) {
    const double mean = sum[r] / n;
    const double var = shots > 1 ? std::max(0.0, (sum_sq[r] - n * mean * mean) / (n - 1)) : 0.0;
    result.means.push_back(mean);
    result.std_errors.push_back(std::sqrt(var / n));
  }
  return result;
}

}  // namespace qpool::sim
