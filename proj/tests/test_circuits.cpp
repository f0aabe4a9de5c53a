#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qpool/circuits.hpp"
#include "qpool/errors.hpp"

using namespace qpool;
using namespace qpool::circuits;

TEST(Keys, RoundTrip) {
  EXPECT_EQ(ansatz_keys().size(), 10u);
  for (const auto& k : ansatz_keys()) EXPECT_EQ(ansatz_key(parse_ansatz_key(k)), k);
  EXPECT_THROW(parse_ansatz_key("mod-d"), ConfigError);
  EXPECT_THROW(parse_ansatz_key(""), ConfigError);
}

TEST(Keys, ParameterAndReadoutCounts) {
  const std::map<std::string, std::pair<int, int>> expected{
      {"conv", {4, 4}},        {"midcircuit-rx", {6, 1}}, {"midcircuit-ry", {6, 1}}, {"ancilla-cy", {4, 1}},
      {"ancilla-cz", {4, 1}},  {"mod-a", {6, 1}},         {"mod-b", {12, 1}},        {"mod-c", {36, 1}},
      {"select-sign", {4, 1}}, {"select-tanh", {4, 1}}};
  for (const auto& [key, counts] : expected) {
    const auto a = make_ansatz(key);
    EXPECT_EQ(a.num_params(), counts.first) << key;
    EXPECT_EQ(a.num_readouts(), counts.second) << key;
    EXPECT_FALSE(a.deferred.has_measurements()) << key;
  }
}

TEST(Encoding, GateSequence) {
  const auto enc = higher_order_encoding();
  ASSERT_EQ(enc.gate_count(), 26u);
  EXPECT_EQ(enc.num_inputs(), 4);
  EXPECT_EQ(enc.num_params(), 0);
  const auto& first = std::get<sim::GateOp>(enc.ops()[0]);
  EXPECT_EQ(first.kind, sim::GateKind::H);
  // CNOT, RZ(pi x_i x_j) on j, CNOT for every pair.
  const auto& pair0 = std::get<sim::GateOp>(enc.ops()[9]);
  EXPECT_EQ(pair0.kind, sim::GateKind::RZ);
  EXPECT_EQ(pair0.targets[0], 1);
  EXPECT_EQ(pair0.angle->source, sim::Angle::Source::InputProduct);
  EXPECT_DOUBLE_EQ(pair0.angle->scale, std::numbers::pi);
}

TEST(Encoding, NullPolarization) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 50; ++t) {
    auto enc = higher_order_encoding();
    enc.set_readout({0, 1, 2, 3});
    const auto x = oracle::uniform(gen, 4, -1, 1);
    for (double z : sim::run_deferred(enc, {}, x)) EXPECT_NEAR(z, 0.0, 1e-12);
    for (double z : oracle::expectations(enc, {}, x)) EXPECT_NEAR(z, 0.0, 1e-12);
  }
}

TEST(Encoding, BoundAndTemplateAgree) {
  const std::vector x{0.3, -0.7, 1.0, -0.1};
  const auto a = sim::simulate(higher_order_encoding(), {}, x);
  const auto b = sim::simulate(higher_order_encoding(x), {});
  for (std::size_t i = 0; i < a.amplitudes().size(); ++i) EXPECT_NEAR(std::abs(a.amplitudes()[i] - b.amplitudes()[i]), 0.0, 1e-14);
}

TEST(Encoding, SignFlipAtUnitMagnitudeIsGlobalPhase) {
  const std::vector x{1.0, -1.0, 1.0, 1.0};
  const std::vector y{-1.0, -1.0, 1.0, 1.0};
  const auto a = sim::simulate(higher_order_encoding(), {}, x);
  const auto b = sim::simulate(higher_order_encoding(), {}, y);
  std::complex<double> overlap = 0;
  for (std::size_t i = 0; i < a.amplitudes().size(); ++i) overlap += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  EXPECT_NEAR(std::abs(overlap), 1.0, 1e-12);
}

TEST(Patch, Validation) {
  EXPECT_NO_THROW(validate_patch(std::vector{1.0, -1.0, 0.0, 0.5}));
  EXPECT_THROW(validate_patch(std::vector{1.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(validate_patch(std::vector{1.5, 0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(higher_order_encoding(std::vector{0.0, 0.0, 0.0, -1.01}), std::invalid_argument);
}

TEST(Entangling, LayerStructure) {
  const auto bel = basic_entangling_layer(2);
  ASSERT_EQ(bel.gate_count(), 8u);
  EXPECT_EQ(bel.num_params(), 6);
  const auto& ring_last = std::get<sim::GateOp>(bel.ops()[7]);
  EXPECT_EQ(ring_last.kind, sim::GateKind::CNOT);
  EXPECT_EQ(ring_last.targets[0], 3);
  EXPECT_EQ(ring_last.targets[1], 0);
}

TEST(Postprocess, Values) {
  EXPECT_EQ(apply_postprocess(Postprocess::Sign, 0.0), 0.0);
  EXPECT_EQ(apply_postprocess(Postprocess::Sign, -0.2), -1.0);
  EXPECT_EQ(apply_postprocess(Postprocess::Sign, 0.2), 1.0);
  EXPECT_EQ(postprocess_derivative(Postprocess::Sign, 0.3), 0.0);
  EXPECT_NEAR(apply_postprocess(Postprocess::Tanh, 0.4), std::tanh(0.4), 1e-15);
  EXPECT_NEAR(postprocess_derivative(Postprocess::Tanh, 0.4), 1 - std::tanh(0.4) * std::tanh(0.4), 1e-15);
  EXPECT_EQ(apply_postprocess(Postprocess::Identity, 0.4), 0.4);
}

TEST(Ansatz, DeferredMatchesOracle) {
  std::mt19937_64 gen(5);
  for (const auto& key : ansatz_keys()) {
    const auto a = make_ansatz(key);
    for (int t = 0; t < 3; ++t) {
      const auto x = oracle::uniform(gen, 4, -1, 1);
      const auto theta = oracle::uniform(gen, a.num_params(), -std::numbers::pi, std::numbers::pi);
      const auto got = sim::run_deferred(a.deferred, theta, x);
      const auto want = oracle::expectations(a.deferred, theta, x);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << key;
    }
  }
}

TEST(Ansatz, ExpectationsAreRawReadouts) {
  const auto a = make_ansatz("select-tanh");
  const std::vector x{0.2, -0.4, 0.9, 0.1};
  const std::vector theta{0.1, 0.2, 0.3, 0.4};
  const double raw = sim::run_deferred(a.deferred, theta, x)[0];
  EXPECT_EQ(a.expectations(x, theta)[0], raw);
  EXPECT_EQ(a.post, Postprocess::Tanh);
}

TEST(Ansatz, AncillaVariantsCoincide) {
  const auto cy = make_ansatz("ancilla-cy");
  const auto cz = make_ansatz("ancilla-cz");
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    const auto x = oracle::uniform(gen, 4, -1, 1);
    const auto theta = oracle::uniform(gen, 4, -std::numbers::pi, std::numbers::pi);
    EXPECT_NEAR(cy.expectations(x, theta)[0], cz.expectations(x, theta)[0], 1e-12);
  }
}

TEST(Ansatz, MidcircuitDeferralKeepsStatistics) {
  const auto a = make_ansatz("midcircuit-ry");
  const std::vector x{0.5, -0.3, 0.8, -0.9};
  const std::vector theta{0.4, -1.2, 2.0, 0.7, -0.5, 1.5};
  const double exact = sim::run_deferred(a.circuit, theta, x)[0];
  const auto tr = sim::run_trajectories(a.circuit, theta, x, 40000, 21);
  EXPECT_NEAR(tr.means[0], exact, 4 * tr.std_errors[0]);
}
