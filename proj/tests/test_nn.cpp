#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "qpool/data.hpp"
#include "qpool/errors.hpp"
#include "qpool/nn.hpp"

using namespace qpool;
using namespace qpool::nn;

TEST(Loss, SoftmaxCrossEntropy) {
  const std::vector z{0.3, -1.2};
  const auto r = softmax_cross_entropy(z, 1);
  const double p1 = std::exp(-1.2) / (std::exp(0.3) + std::exp(-1.2));
  EXPECT_NEAR(r.loss, -std::log(p1), 1e-14);
  EXPECT_NEAR(r.grad[0], 1 - p1, 1e-14);
  EXPECT_NEAR(r.grad[1], p1 - 1, 1e-14);
  const auto big = softmax_cross_entropy(std::vector{800.0, -800.0}, 0);
  EXPECT_TRUE(std::isfinite(big.loss));
  EXPECT_THROW(softmax_cross_entropy(z, 2), std::invalid_argument);
}

TEST(Adam, FirstStepsByHand) {
  AdamState st(AdamConfig{}, 1);
  std::vector<double> w{1.0};
  adam_step(w, std::vector{0.5}, st);
  // First step moves by lr * g/|g| up to eps.
  EXPECT_NEAR(w[0], 1.0 - 0.001 * 0.5 / (0.5 + 1e-8), 1e-15);
  adam_step(w, std::vector{-0.25}, st);
  const double m = (0.9 * 0.05 + 0.1 * -0.25) / (1 - 0.81);
  const double v = (0.999 * 0.00025 + 0.001 * 0.0625) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(w[0], 1.0 - 0.001 * 0.5 / (0.5 + 1e-8) - 0.001 * m / (std::sqrt(v) + 1e-8), 1e-15);
  EXPECT_EQ(st.step, 2);
}

TEST(Layers, ClassicalConvByHand) {
  ClassicalConvLayer l;
  l.filters[0] = {1, 2, 3, 4};
  l.bias[0] = -0.5;
  l.relu = true;
  const std::vector<double> img{0.1, 0.2, 0.3, 0.4};
  const auto f = classical_conv_forward(img, 2, 2, l);
  EXPECT_EQ(f.rows, 1);
  EXPECT_NEAR(f.data[0], 0.1 + 0.4 + 0.9 + 1.6 - 0.5, 1e-15);
  l.bias[0] = -5;
  EXPECT_EQ(classical_conv_forward(img, 2, 2, l).data[0], 0.0);
}

TEST(Layers, QuantumMapsAreMapMajor) {
  QuantumConvLayer layer(circuits::make_ansatz("conv"), 2);
  ASSERT_EQ(layer.kernels.size(), 1u);
  layer.kernels[0] = {0.1, 0.2, 0.3, 0.4};
  std::mt19937_64 gen(3);
  const auto img = oracle::uniform(gen, 16, -1, 1);
  const auto f = quantum_conv_forward(img, 4, 4, layer);
  EXPECT_EQ(f.maps, 4);
  ASSERT_EQ(f.data.size(), 16u);
  const auto patches = data::extract_patches(img, 4, 4, 2);
  for (int p = 0; p < 4; ++p) {
    const auto z = oracle::expectations(layer.ansatz.deferred, layer.kernels[0], patches[p]);
    for (int m = 0; m < 4; ++m) EXPECT_NEAR(f.data[m * 4 + p], z[m], 1e-12);
  }
  EXPECT_EQ(QuantumConvLayer::kernel_count(circuits::make_ansatz("mod-a")), 4);
}

class GradientCheck : public ::testing::TestWithParam<const char*> {};

TEST_P(GradientCheck, AnalyticMatchesDifferences) {
  ModelConfig mc{GetParam(), 6, 6, 2, std::string(GetParam()) == "classical"};
  HybridModel model(mc);
  model.initialize(5);
  std::mt19937_64 gen(8);
  const auto img = oracle::uniform(gen, 36, -1, 1);
  std::vector<double> grad(model.parameter_count(), 0.0);
  const double loss = model.accumulate_gradient(img, 1, grad);
  EXPECT_TRUE(std::isfinite(loss));

  auto theta = model.parameters();
  const auto loss_at = [&](const std::vector<double>& p) {
    HybridModel m(mc);
    m.set_parameters(p);
    return softmax_cross_entropy(m.logits(img), 1).loss;
  };
  EXPECT_NEAR(loss_at(theta), loss, 1e-12);
  const double h = 1e-6;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto up = theta;
    auto dn = theta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-6 + 1e-5 * std::abs(fd)) << "parameter " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Fronts, GradientCheck,
                         ::testing::Values("classical", "conv", "midcircuit-ry", "ancilla-cz", "mod-b", "select-tanh"));

TEST(Model, ParameterLayout) {
  HybridModel conv({"conv", 8, 8, 2, false});
  // 1 kernel x 4 angles + dense 2 x 64 + 2.
  EXPECT_EQ(conv.parameter_count(), 4u + 128u + 2u);
  HybridModel moda({"mod-a", 8, 8, 2, false});
  EXPECT_EQ(moda.parameter_count(), 24u + 128u + 2u);
  HybridModel cls({"classical", 8, 8, 2, false});
  EXPECT_EQ(cls.parameter_count(), 20u + 128u + 2u);
  EXPECT_THROW(HybridModel({"nope", 8, 8, 2, false}), ConfigError);
}

TEST(Model, InitializationIsSeeded) {
  HybridModel a({"conv", 8, 8, 2, false});
  HybridModel b({"conv", 8, 8, 2, false});
  a.initialize(3);
  b.initialize(3);
  EXPECT_EQ(a.parameters(), b.parameters());
  b.initialize(4);
  EXPECT_NE(a.parameters(), b.parameters());
  for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(a.parameters()[i]), M_PI);
}

TEST(Model, CheckpointRoundTrip) {
  HybridModel a({"mod-c", 6, 6, 2, false});
  a.initialize(11);
  const auto path = std::filesystem::temp_directory_path() / "qpool_test_ckpt.txt";
  save_checkpoint(a, path);
  const auto b = load_checkpoint(path);
  EXPECT_EQ(b.config().front, "mod-c");
  EXPECT_EQ(b.config().height, 6);
  EXPECT_EQ(a.parameters(), b.parameters());
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), DataError);
}

TEST(Fit, DeterministicAndLearnsSynthetic) {
  const auto d = data::generate_synthetic({});
  TrainConfig tc;
  tc.epochs = 6;
  const auto run = [&] {
    HybridModel m({"classical", 8, 8, 2, false});
    m.initialize(0);
    return fit(m, d.train, d.val, tc);
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.epochs.size(), 6u);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    EXPECT_EQ(a.epochs[e].train_loss, b.epochs[e].train_loss);
    EXPECT_EQ(a.epochs[e].val_acc, b.epochs[e].val_acc);
  }
  EXPECT_GE(a.max_train_acc, 0.95);
}

TEST(Fit, EmptyDatasetIsDataError) {
  HybridModel m({"classical", 8, 8, 2, false});
  data::Dataset empty;
  empty.height = empty.width = 8;
  EXPECT_THROW(evaluate(m, empty), DataError);
}
