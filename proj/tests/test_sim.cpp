#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qpool/errors.hpp"
#include "qpool/sim.hpp"

using namespace qpool::sim;

TEST(Statevector, StartsInZeroState) {
  Statevector s(3);
  EXPECT_DOUBLE_EQ(std::norm(s.amplitudes()[0]), 1.0);
  EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
  for (int q = 0; q < 3; ++q) EXPECT_DOUBLE_EQ(expectation_z(s, q), 1.0);
}

TEST(Statevector, LittleEndianOrdering) {
  Circuit c(3);
  c.x(0);
  const auto s = simulate(c, {});
  // X on qubit 0 sets bit 0 of the basis index.
  EXPECT_NEAR(std::norm(s.amplitudes()[1]), 1.0, 1e-15);
  EXPECT_NEAR(expectation_z(s, 0), -1.0, 1e-15);
  EXPECT_NEAR(expectation_z(s, 1), 1.0, 1e-15);
}

TEST(Statevector, CnotControlIsFirstTarget) {
  Circuit c(2);
  c.x(1).cnot(1, 0);
  const auto s = simulate(c, {});
  EXPECT_NEAR(std::norm(s.amplitudes()[3]), 1.0, 1e-15);
}

TEST(Statevector, RotationExpectations) {
  for (double t : {-2.0, 0.3, 1.7}) {
    Circuit c(1);
    c.rx(0, Angle::param(0)).set_readout({0});
    EXPECT_NEAR(run_deferred(c, std::vector{t})[0], std::cos(t), 1e-14);
    Circuit d(1);
    d.ry(0, Angle::param(0)).set_readout({0});
    EXPECT_NEAR(run_deferred(d, std::vector{t})[0], std::cos(t), 1e-14);
  }
}

TEST(Statevector, CollapseRenormalizes) {
  Circuit c(1);
  c.h(0);
  auto s = simulate(c, {});
  EXPECT_NEAR(s.probability_one(0), 0.5, 1e-15);
  s.collapse(0, 1);
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-15);
  EXPECT_NEAR(expectation_z(s, 0), -1.0, 1e-15);
}

TEST(Statevector, CollapseOntoImpossibleOutcomeThrows) {
  Statevector s(1);
  EXPECT_THROW(s.collapse(0, 1), qpool::NumericError);
}

TEST(Circuit, CountsAndParams) {
  Circuit c(2, 1);
  c.rx(0, Angle::param(0)).crz(0, 1, Angle::param(3)).rz(1, Angle::input(0, 1.0));
  c.measure(0);
  EXPECT_EQ(c.num_params(), 4);
  EXPECT_EQ(c.gate_count(), 3u);
  EXPECT_EQ(c.measurement_count(), 1u);
}

TEST(Circuit, RejectsBadTargets) {
  EXPECT_THROW(Circuit(2).cnot(0, 0).validate(), std::invalid_argument);
  EXPECT_THROW(Circuit(2).h(2).validate(), std::out_of_range);
  EXPECT_THROW(Circuit(2).rx(0, Angle::input(0, 1.0)).validate(), std::invalid_argument);
  EXPECT_NO_THROW(Circuit(2, 1).rx(0, Angle::input(0, 1.0)).validate());
}

TEST(Circuit, EvaluateChecksParameterLength) {
  Circuit c(1);
  c.rx(0, Angle::param(1)).set_readout({0});
  EXPECT_THROW(run_deferred(c, std::vector{0.1}), std::invalid_argument);
}

TEST(Circuit, EvaluateRejectsMeasurements) {
  Circuit c(2);
  c.measure(0);
  c.set_readout({1});
  EXPECT_THROW(evaluate(c, {}), std::invalid_argument);
}

TEST(Oracle, RandomCircuitsMatchDenseProduct) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = oracle::random_circuit(gen, 4, 20, 2);
    const auto theta = oracle::uniform(gen, c.num_params(), -3.2, 3.2);
    const auto x = oracle::uniform(gen, 2, -1, 1);
    const auto got = run_deferred(c, theta, x);
    const auto want = oracle::expectations(c, theta, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Deferral, ConditionedGatesBecomeControlled) {
  Circuit c(2);
  c.h(0);
  const int bit = c.measure(0);
  GateOp g{GateKind::RY, {1, 1}, Angle::param(0), bit};
  c.add(g);
  c.set_readout({1});
  const auto d = defer_measurements(c);
  EXPECT_FALSE(d.has_measurements());
  const auto& last = std::get<GateOp>(d.ops().back());
  EXPECT_EQ(last.kind, GateKind::CRY);
  EXPECT_EQ(last.targets[0], 0);
  EXPECT_EQ(last.targets[1], 1);
  // <Z1> = 1/2 + cos(t)/2
  const double t = 0.9;
  EXPECT_NEAR(run_deferred(c, std::vector{t})[0], 0.5 + 0.5 * std::cos(t), 1e-14);
}

TEST(Deferral, RejectsReuseOfMeasuredQubit) {
  Circuit c(2);
  c.measure(0);
  c.h(0);
  c.set_readout({1});
  EXPECT_THROW(defer_measurements(c), std::invalid_argument);
}

TEST(Trajectories, AgreeWithDeferredWithinErrors) {
  Circuit c(2);
  c.ry(0, Angle::param(0));
  const int bit = c.measure(0);
  c.add({GateKind::RX, {1, 1}, Angle::param(1), bit});
  c.set_readout({1});
  const std::vector theta{1.1, 2.3};
  const auto exact = run_deferred(c, theta)[0];
  const auto tr = run_trajectories(c, theta, {}, 20000, 3);
  EXPECT_NEAR(tr.means[0], exact, 5 * tr.std_errors[0]);
  const auto an = run_trajectories(c, theta, {}, 20000, 3, TerminalReadout::Analytic);
  EXPECT_NEAR(an.means[0], exact, 5 * an.std_errors[0] + 1e-12);
}

TEST(Trajectories, SeedDeterminesOutcomes) {
  Circuit c(2);
  c.h(0);
  c.measure(0);
  c.set_readout({1});
  const auto a = run_trajectories(c, {}, {}, 50, 11);
  const auto b = run_trajectories(c, {}, {}, 50, 11);
  EXPECT_EQ(a.outcomes, b.outcomes);
  EXPECT_THROW(run_trajectories(c, {}, {}, 0, 1), std::invalid_argument);
}
