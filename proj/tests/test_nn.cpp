#include <gtest/gtest.h>

#include <random>

#include "wbnet/nn/adam.hpp"
#include "wbnet/nn/gradcheck.hpp"
#include "wbnet/nn/layers.hpp"

using namespace wbnet;
using namespace wbnet::nn;

namespace {

Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double margin = 0) {
  std::normal_distribution<double> nd;
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) {
    v = nd(rng);
    if (margin > 0 && std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
  return t;
}

void randomise(ParamStore<double>& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : store.values()) v = 0.5 * nd(rng);
}

}  // namespace

TEST(LocallyConnected, IdentityWeights) {
  ParamStore<double> store;
  const auto lc = LocallyConnected<double>::make(store, "lc", 2, 2, 3, 3);
  for (std::size_t cell = 0; cell < 4; ++cell)
    for (std::size_t k = 0; k < 3; ++k) store.values()[lc.w_off + cell * 9 + k * 3 + k] = 1;
  std::mt19937_64 rng(1);
  const auto x = random_tensor({2, 2, 2, 3}, rng);
  EXPECT_EQ(lc.forward(store.data(), x), x);
}

TEST(LocallyConnected, WeightsAreUnsharedPerCell) {
  ParamStore<double> store;
  const auto lc = LocallyConnected<double>::make(store, "lc", 2, 2, 1, 1);
  for (std::size_t cell = 0; cell < 4; ++cell) {
    store.values()[lc.w_off + cell] = double(cell + 1);
    store.values()[lc.b_off + cell] = 10.0 * double(cell);
  }
  const Tensor<double> x({1, 2, 2, 1}, 1.0);
  const auto y = lc.forward(store.data(), x);
  EXPECT_EQ(y.storage(), (std::vector<double>{1, 12, 23, 34}));
}

TEST(LocallyConnected, ParameterCount) {
  for (int level = 0; level <= 4; ++level) {
    ParamStore<double> store;
    const std::size_t c = std::size_t(1) << level;
    const auto lc = LocallyConnected<double>::make(store, "lc", c, c, 7, 5);
    EXPECT_EQ(store.size(), std::size_t(1 << (2 * level)) * (7 * 5 + 5));
    EXPECT_EQ(lc.param_count(), store.size());
  }
}

TEST(LocallyConnected, GradientCheck) {
  std::mt19937_64 rng(2);
  ParamStore<double> store;
  const auto lc = LocallyConnected<double>::make(store, "lc", 4, 4, 6, 3);
  randomise(store, 3);
  auto x = random_tensor({3, 4, 4, 6}, rng);
  const auto r = gradient_check_layer(
      store.values(), x, [&](const double* p, const Tensor<double>& in) { return lc.forward(p, in); },
      [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
        return lc.backward(p, g, in, d);
      });
  EXPECT_GT(r.checked, 0u);
  EXPECT_LE(r.max_rel_error, 1e-8);
}

TEST(LocallyConnected, ShapeMismatch) {
  ParamStore<double> store;
  const auto lc = LocallyConnected<double>::make(store, "lc", 2, 2, 3, 3);
  EXPECT_THROW(lc.forward(store.data(), Tensor<double>({1, 2, 2, 4})), ShapeError);
  EXPECT_THROW(lc.forward(store.data(), Tensor<double>({1, 4, 4, 3})), ShapeError);
}

TEST(Conv, DeltaKernelIsIdentity) {
  ParamStore<double> store;
  const auto conv = Conv2dPeriodic<double>::make(store, "c", 5, 2, 2);
  // Kernel layout [k, k, c_in, c_out]: centre tap, identity channel map.
  for (std::size_t c = 0; c < 2; ++c) store.values()[conv.w_off + ((2 * 5 + 2) * 2 + c) * 2 + c] = 1;
  std::mt19937_64 rng(4);
  const auto x = random_tensor({2, 7, 6, 2}, rng);
  EXPECT_EQ(conv.forward(store.data(), x), x);
}

TEST(Conv, CircularTranslationEquivariance) {
  ParamStore<double> store;
  const auto conv = Conv2dPeriodic<double>::make(store, "c", 3, 2, 3);
  randomise(store, 5);
  std::mt19937_64 rng(6);
  const auto x = random_tensor({1, 8, 8, 2}, rng);
  Tensor<double> shifted(x.shape());
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      for (std::size_t c = 0; c < 2; ++c) shifted(0, (i + 3) % 8, (j + 5) % 8, c) = x(0, i, j, c);
  const auto y = conv.forward(store.data(), x), ys = conv.forward(store.data(), shifted);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(ys(0, (i + 3) % 8, (j + 5) % 8, c), y(0, i, j, c));
}

TEST(Conv, MatchesDirectCircularSum) {
  ParamStore<double> store;
  const auto conv = Conv2dPeriodic<double>::make(store, "c", 3, 1, 1);
  randomise(store, 7);
  std::mt19937_64 rng(8);
  const auto x = random_tensor({1, 5, 5, 1}, rng);
  const auto y = conv.forward(store.data(), x);
  const double* w = store.data() + conv.w_off;
  const double b = store.data()[conv.b_off];
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double s = b;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) s += w[(di + 1) * 3 + (dj + 1)] * x(0, (i + di + 5) % 5, (j + dj + 5) % 5, 0);
      EXPECT_NEAR(y(0, i, j, 0), s, 1e-13);
    }
}

TEST(Conv, GradientCheck) {
  std::mt19937_64 rng(9);
  ParamStore<double> store;
  const auto conv = Conv2dPeriodic<double>::make(store, "c", 5, 3, 2);
  randomise(store, 10);
  auto x = random_tensor({2, 6, 7, 3}, rng);
  const auto r = gradient_check_layer(
      store.values(), x, [&](const double* p, const Tensor<double>& in) { return conv.forward(p, in); },
      [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
        return conv.backward(p, g, in, d);
      });
  EXPECT_LE(r.max_rel_error, 1e-8);
}

TEST(Conv, RejectsEvenKernelAndWrongChannels) {
  ParamStore<double> store;
  EXPECT_THROW(Conv2dPeriodic<double>::make(store, "c", 4, 1, 1), ShapeError);
  const auto conv = Conv2dPeriodic<double>::make(store, "d", 3, 2, 1);
  EXPECT_THROW(conv.forward(store.data(), Tensor<double>({1, 4, 4, 3})), ShapeError);
}

TEST(Relu, GradientAwayFromKink) {
  std::mt19937_64 rng(11);
  std::vector<double> none;
  auto x = random_tensor({2, 3, 3, 4}, rng, 1e-3);
  const auto r = gradient_check_layer(
      none, x, [](const double*, const Tensor<double>& in) { return relu(in); },
      [](const double*, double*, const Tensor<double>& in, const Tensor<double>& d) { return relu_backward(in, d); });
  EXPECT_LE(r.max_rel_error, 1e-6);
}

TEST(Residual, ZeroBodyIsIdentity) {
  ParamStore<double> store;
  const auto block = ResidualBlock<double>::make(store, "r", 2, 2, 4);
  std::mt19937_64 rng(12);
  const auto x = random_tensor({3, 2, 2, 4}, rng);
  EXPECT_EQ(block.forward(store.data(), x), x);
}

TEST(Residual, GradientCheck) {
  std::mt19937_64 rng(13);
  ParamStore<double> store;
  const auto block = ResidualBlock<double>::make(store, "r", 2, 2, 5);
  randomise(store, 14);
  auto x = random_tensor({2, 2, 2, 5}, rng);
  const auto fwd = [&](const double* p, const Tensor<double>& in) { return block.forward(p, in); };
  const auto bwd = [&](const double* p, double* g, const Tensor<double>& in, const Tensor<double>& d) {
    typename ResidualBlock<double>::Cache c;
    block.forward(p, in, &c);
    return block.backward(p, g, in, c, d);
  };
  // Keep every pre-activation at least 1e-3 away from the kink.
  typename ResidualBlock<double>::Cache c;
  block.forward(store.data(), x, &c);
  for (double v : c.pre.storage()) ASSERT_GT(std::abs(v), 1e-3);
  const auto r = gradient_check_layer(store.values(), x, fwd, bwd);
  EXPECT_LE(r.max_rel_error, 1e-6);
}

TEST(Glorot, MeanAndBound) {
  ParamStore<double> store;
  store.add("w", {100000}, 30, 20);
  store.add("b", {10});
  store.glorot_init(15);
  const double bound = std::sqrt(6.0 / 50.0);
  double sum = 0;
  for (std::size_t k = 0; k < 100000; ++k) {
    const double v = store.values()[k];
    ASSERT_LE(std::abs(v), bound);
    sum += v;
  }
  const double mean = sum / 1e5, sd_mean = bound / std::sqrt(3.0) / std::sqrt(1e5);
  EXPECT_LE(std::abs(mean), 3 * sd_mean);
  for (std::size_t k = 100000; k < store.size(); ++k) EXPECT_EQ(store.values()[k], 0.0);
}

TEST(ParamStore, RegistryAndErrors) {
  ParamStore<float> store;
  EXPECT_EQ(store.add("a", {2, 3}), 0u);
  EXPECT_EQ(store.add("b", {4}), 6u);
  EXPECT_EQ(store.size(), 10u);
  EXPECT_EQ(store.find("b").shape, (std::vector<std::size_t>{4}));
  EXPECT_THROW(store.add("a", {1}), ShapeError);
  EXPECT_THROW(store.find("c"), ShapeError);
  const auto d = store.cast<double>();
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.entries()[1].offset, 6u);
}

TEST(Adam, ScheduleStaircase) {
  const LrSchedule s;
  EXPECT_DOUBLE_EQ(s(0), 5e-3);
  EXPECT_DOUBLE_EQ(s(1999), 5e-3);
  EXPECT_DOUBLE_EQ(s(2000), 5e-3 * 0.95);
  EXPECT_NEAR(s(4000), 4.5125e-3, 1e-15);
}

TEST(Adam, MinimisesParabola) {
  AdamState<double> st(1);
  st.schedule.interval = 1 << 30;  // constant LR 5e-3
  std::vector<double> x{1.0}, g(1);
  int steps = 0;
  while (std::abs(x[0]) >= 1e-3 && steps < 2000) {
    g[0] = 2 * x[0];
    st.step_flat(x, g);
    ++steps;
  }
  EXPECT_LT(std::abs(x[0]), 1e-3);
  EXPECT_LE(steps, 2000);
}

TEST(Adam, BlockOrderInvariant) {
  ParamStore<double> a;
  a.add("x", {7}, 3, 3);
  a.add("y", {5}, 2, 2);
  a.add("z", {3});
  a.glorot_init(16);
  ParamStore<double> b = a;
  AdamState<double> sa(a.size()), sb(b.size());
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g(a.size());
    for (auto& v : g) v = nd(rng);
    sa.step_flat(a.values(), g);
    sb.step_registry(b, g);
  }
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(sa.m, sb.m);
  EXPECT_EQ(sa.v, sb.v);
}

TEST(GradCheck, DetectsWrongGradient) {
  std::vector<double> x{0.3, -1.2};
  const std::vector<double> wrong{2 * 0.3, 0.0};
  const auto r = gradient_check(x, wrong, [&] { return x[0] * x[0] + x[1] * x[1]; });
  EXPECT_GT(r.max_rel_error, 0.5);
}
