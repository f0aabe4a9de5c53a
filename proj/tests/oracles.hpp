#pragma once

// Reference implementations used only by tests: full 2^n x 2^n unitaries
// assembled from Kronecker products, with gate matrices written out here
// rather than taken from the simulator.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpool/sim.hpp"

namespace oracle {

using C = std::complex<double>;
using M2 = Eigen::Matrix2cd;
using MX = Eigen::MatrixXcd;

inline M2 pauli_x() { return (M2() << 0, 1, 1, 0).finished(); }
inline M2 pauli_y() { return (M2() << 0, C(0, -1), C(0, 1), 0).finished(); }
inline M2 pauli_z() { return (M2() << 1, 0, 0, -1).finished(); }
inline M2 proj0() { return (M2() << 1, 0, 0, 0).finished(); }
inline M2 proj1() { return (M2() << 0, 0, 0, 1).finished(); }

// exp(-i t/2 P) = cos(t/2) I - i sin(t/2) P for a Pauli P.
inline M2 rotation(const M2& pauli, double t) {
  return std::cos(t / 2) * M2::Identity() - C(0, 1) * std::sin(t / 2) * pauli;
}

inline MX kron(const MX& a, const MX& b) {
  MX out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

// Qubit n-1 is the leftmost factor, so qubit q is bit q of the basis index.
inline MX embed(int n, const std::map<int, M2>& ops) {
  MX out = MX::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    auto it = ops.find(q);
    out = kron(out, it == ops.end() ? MX(M2::Identity()) : MX(it->second));
  }
  return out;
}

inline double angle_of(const qpool::sim::Angle& a, std::span<const double> params, std::span<const double> x) {
  using S = qpool::sim::Angle::Source;
  switch (a.source) {
    case S::Param: return params[a.index];
    case S::Input: return a.scale * x[a.index];
    case S::InputProduct: return a.scale * x[a.index] * x[a.index2];
    case S::Constant: return a.scale;
  }
  throw std::logic_error("angle source");
}

inline MX gate_unitary(int n, const qpool::sim::GateOp& g, std::span<const double> params,
                       std::span<const double> x) {
  using K = qpool::sim::GateKind;
  const double t = g.angle ? angle_of(*g.angle, params, x) : 0.0;
  const int a = g.targets[0];
  const int b = g.targets[1];
  const M2 h = (M2() << 1, 1, 1, -1).finished() / std::sqrt(2.0);
  auto controlled = [&](const M2& u) { return MX(embed(n, {{a, proj0()}}) + embed(n, {{a, proj1()}, {b, u}})); };
  switch (g.kind) {
    case K::H: return embed(n, {{a, h}});
    case K::X: return embed(n, {{a, pauli_x()}});
    case K::RX: return embed(n, {{a, rotation(pauli_x(), t)}});
    case K::RY: return embed(n, {{a, rotation(pauli_y(), t)}});
    case K::RZ: return embed(n, {{a, rotation(pauli_z(), t)}});
    case K::RZZ: {
      const MX zz = embed(n, {{a, pauli_z()}, {b, pauli_z()}});
      MX out = MX::Zero(zz.rows(), zz.cols());
      for (Eigen::Index i = 0; i < zz.rows(); ++i) out(i, i) = std::exp(C(0, -t / 2) * zz(i, i));
      return out;
    }
    case K::CNOT: return controlled(pauli_x());
    case K::CY: return controlled(pauli_y());
    case K::CZ: return controlled(pauli_z());
    case K::CRX: return controlled(rotation(pauli_x(), t));
    case K::CRY: return controlled(rotation(pauli_y(), t));
    case K::CRZ: return controlled(rotation(pauli_z(), t));
  }
  throw std::logic_error("gate kind");
}

/// <Z> of each readout qubit for a measurement-free circuit, from the product
/// of the full gate unitaries applied to |0...0>.
inline std::vector<double> expectations(const qpool::sim::Circuit& c, std::span<const double> params,
                                        std::span<const double> x = {}) {
  const int n = c.num_qubits();
  MX u = MX::Identity(1 << n, 1 << n);
  for (const auto& op : c.ops()) {
    const auto* g = std::get_if<qpool::sim::GateOp>(&op);
    if (g == nullptr) throw std::invalid_argument("oracle needs a measurement-free circuit");
    if (g->condition) throw std::invalid_argument("oracle needs unconditioned gates");
    u = gate_unitary(n, *g, params, x) * u;
  }
  const Eigen::VectorXcd psi = u.col(0);
  std::vector<double> out;
  for (int q : c.readout()) {
    const Eigen::VectorXcd zpsi = embed(n, {{q, pauli_z()}}) * psi;
    out.push_back(psi.dot(zpsi).real());
  }
  return out;
}

/// Random measurement-free circuit over every gate kind; angles come from
/// parameter slots, inputs, input products or constants.
inline qpool::sim::Circuit random_circuit(std::mt19937_64& gen, int n = 4, int gates = 24, int inputs = 2) {
  using K = qpool::sim::GateKind;
  using qpool::sim::Angle;
  static constexpr K kinds[] = {K::H,   K::X,  K::RX, K::RY,  K::RZ,  K::RZZ,
                                K::CNOT, K::CY, K::CZ, K::CRX, K::CRY, K::CRZ};
  std::uniform_int_distribution<int> pick_kind(0, std::size(kinds) - 1);
  std::uniform_int_distribution<int> pick_qubit(0, n - 1);
  std::uniform_int_distribution<int> pick_source(0, 3);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  qpool::sim::Circuit c(n, inputs);
  int slot = 0;
  for (int i = 0; i < gates; ++i) {
    qpool::sim::GateOp g;
    g.kind = kinds[pick_kind(gen)];
    g.targets[0] = pick_qubit(gen);
    g.targets[1] = g.targets[0];
    if (qpool::sim::is_two_qubit(g.kind)) {
      while (g.targets[1] == g.targets[0]) g.targets[1] = pick_qubit(gen);
    }
    if (qpool::sim::is_rotation(g.kind)) {
      switch (inputs > 0 ? pick_source(gen) : 0) {
        case 0: g.angle = Angle::param(slot++); break;
        case 1: g.angle = Angle::input(pick_qubit(gen) % inputs, value(gen)); break;
        case 2: g.angle = Angle::input_product(0, inputs - 1, value(gen)); break;
        default: g.angle = Angle::constant(value(gen)); break;
      }
    }
    c.add(g);
  }
  std::vector<int> all(n);
  for (int q = 0; q < n; ++q) all[q] = q;
  c.set_readout(all);
  return c;
}

inline std::vector<double> uniform(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

}  // namespace oracle
