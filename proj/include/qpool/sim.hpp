#pragma once

/**
 * Dense statevector simulation for small (<= 8 qubit) circuits.
 *
 * Qubit ordering is little-endian: qubit q is bit q of the basis-state index,
 * so |q3 q2 q1 q0> with q0 least significant.
 *
 * Circuits are templates. Rotation angles are bound at execution time from
 * either the trainable parameter vector or the classical input vector, which
 * lets one immutable Circuit be evaluated over every image patch.
 */

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qpool::sim {

using Complex = std::complex<double>;
/// Row-major 2x2 matrix {m00, m01, m10, m11}.
using Mat2 = std::array<Complex, 4>;

inline constexpr int kMaxQubits = 8;

enum class GateKind { H, X, RX, RY, RZ, RZZ, CNOT, CY, CZ, CRX, CRY, CRZ };

std::string_view gate_name(GateKind kind);
bool is_two_qubit(GateKind kind);
bool is_rotation(GateKind kind);
bool is_controlled_rotation(GateKind kind);

/// Source of a rotation angle: scale * (param[i] | x[i] | x[i]*x[j] | 1).
struct Angle {
  enum class Source { Param, Input, InputProduct, Constant };

  Source source = Source::Constant;
  int index = 0;
  int index2 = 0;
  double scale = 0.0;

  static Angle param(int slot) { return {Source::Param, slot, 0, 1.0}; }
  static Angle input(int i, double scale) { return {Source::Input, i, 0, scale}; }
  static Angle input_product(int i, int j, double scale) {
    return {Source::InputProduct, i, j, scale};
  }
  static Angle constant(double value) { return {Source::Constant, 0, 0, value}; }

  double resolve(std::span<const double> params, std::span<const double> inputs) const;
};

struct GateOp {
  GateKind kind = GateKind::H;
  /// For two-qubit kinds targets[0] is the control (CNOT/CY/CZ/CR*) or the
  /// first qubit of RZZ.
  std::array<int, 2> targets{0, 0};
  std::optional<Angle> angle;
  /// Gate applies only when this classical bit was recorded as 1.
  std::optional<int> condition;

  int arity() const { return is_two_qubit(kind) ? 2 : 1; }
  std::optional<int> param_slot() const;
};

struct MidMeasure {
  int qubit = 0;
  int classical_bit = 0;
};

using Op = std::variant<GateOp, MidMeasure>;

class Circuit {
 public:
  explicit Circuit(int num_qubits, int num_inputs = 0);

  int num_qubits() const { return num_qubits_; }
  int num_inputs() const { return num_inputs_; }
  /// One past the highest referenced parameter slot.
  int num_params() const { return num_params_; }
  int num_bits() const { return num_bits_; }
  const std::vector<Op>& ops() const { return ops_; }
  const std::vector<int>& readout() const { return readout_; }
  bool has_measurements() const { return num_bits_ > 0; }
  std::size_t gate_count() const;
  std::size_t measurement_count() const;

  Circuit& add(GateOp op);
  /// Appends a mid-circuit measurement and returns its fresh classical bit.
  int measure(int qubit);
  /// Appends every op of `fragment`. Classical bits are renumbered.
  Circuit& append(const Circuit& fragment);
  Circuit& set_readout(std::vector<int> qubits);
  void set_num_inputs(int n) { num_inputs_ = n; }

  Circuit& h(int q) { return add({GateKind::H, {q, q}, {}, {}}); }
  Circuit& x(int q) { return add({GateKind::X, {q, q}, {}, {}}); }
  Circuit& rx(int q, Angle a) { return add({GateKind::RX, {q, q}, a, {}}); }
  Circuit& ry(int q, Angle a) { return add({GateKind::RY, {q, q}, a, {}}); }
  Circuit& rz(int q, Angle a) { return add({GateKind::RZ, {q, q}, a, {}}); }
  Circuit& cnot(int c, int t) { return add({GateKind::CNOT, {c, t}, {}, {}}); }
  Circuit& cy(int c, int t) { return add({GateKind::CY, {c, t}, {}, {}}); }
  Circuit& cz(int c, int t) { return add({GateKind::CZ, {c, t}, {}, {}}); }
  Circuit& crx(int c, int t, Angle a) { return add({GateKind::CRX, {c, t}, a, {}}); }
  Circuit& cry(int c, int t, Angle a) { return add({GateKind::CRY, {c, t}, a, {}}); }
  Circuit& crz(int c, int t, Angle a) { return add({GateKind::CRZ, {c, t}, a, {}}); }

  /// Throws std::invalid_argument when a structural invariant is broken:
  /// sparse parameter slots, acausal conditions, bad targets.
  void validate() const;

 private:
  int num_qubits_;
  int num_inputs_;
  int num_params_ = 0;
  int num_bits_ = 0;
  std::vector<Op> ops_;
  std::vector<int> readout_;
};

class Statevector {
 public:
  /// |0...0> on `num_qubits` qubits.
  explicit Statevector(int num_qubits);
  static Statevector from_amplitudes(std::vector<Complex> amplitudes);

  int num_qubits() const { return num_qubits_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  double norm_squared() const;

  void apply(int qubit, const Mat2& m);
  void apply_controlled(int control, int target, const Mat2& m);
  void apply_zz_phase(int a, int b, double phi);

  double probability_one(int qubit) const;
  /// Projects `qubit` onto `outcome` and renormalizes. Throws NumericError
  /// when the branch probability is below 1e-15.
  void collapse(int qubit, int outcome);

 private:
  int num_qubits_;
  std::vector<Complex> amps_;
};

Mat2 gate_matrix(GateKind kind, double angle = 0.0);

/// Applies one unconditioned gate. The condition field is ignored here;
/// executors decide whether a conditioned gate fires.
void apply_gate(Statevector& state, const GateOp& gate, std::span<const double> params,
                std::span<const double> inputs = {});

double expectation_z(const Statevector& state, int qubit);

/// Rewrites mid-circuit measurements into quantum-controlled gates.
/// Conditioned RX/RY/RZ become CRX/CRY/CRZ and a conditioned X becomes CNOT,
/// each controlled by the measured qubit. Throws std::invalid_argument when
/// the circuit touches a qubit after measuring it or conditions a gate that
/// has no controlled counterpart.
Circuit defer_measurements(const Circuit& circuit);

/// Shift of a single gate occurrence's angle, used by parameter-shift rules.
struct AngleShift {
  std::size_t op_index = 0;
  double delta = 0.0;
};

/// Exact <Z> per readout qubit of a measurement-free circuit.
std::vector<double> evaluate(const Circuit& circuit, std::span<const double> params,
                             std::span<const double> inputs = {},
                             std::optional<AngleShift> shift = std::nullopt);

/// Final statevector of a measurement-free circuit.
Statevector simulate(const Circuit& circuit, std::span<const double> params,
                     std::span<const double> inputs = {});

/// Deferred execution; identical to evaluate() on defer_measurements(circuit).
std::vector<double> run_deferred(const Circuit& circuit, std::span<const double> params,
                                 std::span<const double> inputs = {});

enum class TerminalReadout { Sampled, Analytic };

struct TrajectoryResult {
  std::vector<double> means;
  std::vector<double> std_errors;
  /// outcomes[shot][bit] in {0, 1}.
  std::vector<std::vector<std::uint8_t>> outcomes;
};

TrajectoryResult run_trajectories(const Circuit& circuit, std::span<const double> params,
                                  std::span<const double> inputs, std::int64_t shots,
                                  std::uint64_t seed,
                                  TerminalReadout readout = TerminalReadout::Sampled);

}  // namespace qpool::sim
