#pragma once

// Patch circuits: higher-order encoding, the basic entangling baseline and
// the four pooling families. Every builder returns an input-bound template
// with four classical inputs (one 2x2 patch) and dense trainable slots.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpool/sim.hpp"

namespace qpool::circuits {

enum class Family { ConvNoPool, MidCircuit, Ancilla, Modular, QubitSelect };

enum class Option { None, RX, RY, CY, CZ, ModA, ModB, ModC, Sign, Tanh };

enum class Postprocess { Identity, Sign, Tanh };

inline constexpr int kPatchInputs = 4;

struct AnsatzSpec {
  Family family = Family::ConvNoPool;
  Option option = Option::None;

  friend bool operator==(const AnsatzSpec&, const AnsatzSpec&) = default;
};

/// The ten trainable keys.
const std::vector<std::string>& ansatz_keys();
/// Throws ConfigError on an unknown key.
AnsatzSpec parse_ansatz_key(std::string_view key);
std::string ansatz_key(const AnsatzSpec& spec);

double apply_postprocess(Postprocess kind, double z);
/// d/dz of the postprocess; Sign is taken as 0 everywhere.
double postprocess_derivative(Postprocess kind, double z);

/// Rejects patches that are not four values in [-1, 1].
void validate_patch(std::span<const double> x);

/// Input-bound encoding on qubits 0..3: H layer, RZ(pi x_n), then
/// CNOT-RZ(pi x_i x_j)-CNOT on every pair i < j. 26 ops.
sim::Circuit higher_order_encoding();
/// Same gate sequence with the angles of a concrete patch baked in.
sim::Circuit higher_order_encoding(std::span<const double> x);

/// RX(theta_{base+i}) on each qubit, then the CNOT ring 0-1, 1-2, 2-3, 3-0.
sim::Circuit basic_entangling_layer(int param_base = 0);

sim::Circuit build_conv_no_pool();
sim::Circuit build_midcircuit_pooling(Option axis);
sim::Circuit build_ancilla_pooling(Option gate);
sim::Circuit build_modular_pooling(Option variant);
sim::Circuit build_qubit_select();

/// A ready-to-run kernel: the circuit as built, its deferred form and the
/// classical postprocess attached to its readout.
struct Ansatz {
  AnsatzSpec spec;
  std::string key;
  sim::Circuit circuit;
  sim::Circuit deferred;
  Postprocess post = Postprocess::Identity;

  int num_params() const { return deferred.num_params(); }
  int num_readouts() const { return static_cast<int>(deferred.readout().size()); }

  /// Raw <Z> readouts (no postprocess) for one patch.
  std::vector<double> expectations(std::span<const double> x, std::span<const double> theta) const;
};

Ansatz make_ansatz(const AnsatzSpec& spec);
Ansatz make_ansatz(std::string_view key);

}  // namespace qpool::circuits
