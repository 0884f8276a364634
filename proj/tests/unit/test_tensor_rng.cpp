#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "genlab/errors.hpp"
#include "genlab/parallel.hpp"
#include "genlab/rng.hpp"
#include "genlab/tensor.hpp"
#include "oracles.hpp"

using namespace genlab;

TEST(Tensor, ShapeAndValueCountMustAgree) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW((Tensor{{1, 2}, {3}}), DimensionError);
  Tensor t{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t(1, 2), 6.0);
}

TEST(Tensor, MatmulShapeRuleAndValues) {
  Tensor a{{1, 2, 3}, {4, 5, 6}};
  Tensor b{{1}, {0}, {-1}};
  const Tensor c = matmul(a, b);
  EXPECT_EQ(c.rows(), 2u);
  EXPECT_EQ(c.cols(), 1u);
  EXPECT_EQ(c(0, 0), -2.0);
  EXPECT_EQ(c(1, 0), -2.0);
  EXPECT_THROW(matmul(b, b), DimensionError);
}

TEST(Tensor, MatmulMatchesNaiveProduct) {
  Rng rng(3);
  const Tensor a = rng.normal(7, 5), b = rng.normal(5, 4);
  EXPECT_LT(max_abs_diff(matmul(a, b), oracle::naive_matmul(a, b)), 1e-13);
}

TEST(Tensor, ItemRequiresScalar) {
  EXPECT_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor(1, 2).item(), DimensionError);
}

TEST(Tensor, HelpersAgreeWithHandValues) {
  Tensor a{{1, 2}, {3, 4}};
  EXPECT_EQ(trace(a), 5.0);
  EXPECT_EQ(transpose(a)(0, 1), 3.0);
  const Tensor m = column_means(a);
  EXPECT_EQ(m(0, 0), 2.0);
  EXPECT_EQ(m(0, 1), 3.0);
  const std::size_t idx[] = {1, 1, 0};
  const Tensor g = gather_rows(a, idx);
  EXPECT_EQ(g(2, 1), 2.0);
  EXPECT_EQ(g(0, 0), 3.0);
  EXPECT_THROW(slice_rows(a, 1, 3), ContractError);
}

TEST(Rng, StreamFollowsDocumentedFormula) {
  Rng rng(42);
  const std::uint64_t key = mix64(42);
  for (std::uint64_t i = 1; i <= 5; ++i) EXPECT_EQ(rng.next_u64(), mix64(key + i * 0x9E3779B97F4A7C15ull));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7), c(8);
  const Tensor x = a.normal(10, 3), y = b.normal(10, 3), z = c.normal(10, 3);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

TEST(Rng, StateRoundTripResumesStream) {
  Rng a(11);
  a.normal();  // leaves a cached spare
  const auto s = a.state();
  EXPECT_TRUE(s.has_spare);
  Rng b = Rng::from_state(s);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, SplitStreamsDifferAndAreReproducible) {
  Rng base(5);
  Rng s0 = base.split(0), s1 = base.split(1), again = base.split(0);
  EXPECT_NE(s0.next_u64(), s1.next_u64());
  EXPECT_EQ(again.next_u64(), Rng(5).split(0).next_u64());
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(1);
  std::vector<double> u(200000), z(200000);
  for (auto& v : u) v = rng.uniform();
  for (auto& v : z) v = rng.normal();
  EXPECT_NEAR(oracle::sample_mean(u), 0.5, 0.005);
  EXPECT_NEAR(oracle::sample_var(u), 1.0 / 12.0, 0.002);
  EXPECT_NEAR(oracle::sample_mean(z), 0.0, 0.01);
  EXPECT_NEAR(oracle::sample_var(z), 1.0, 0.01);
  for (double v : u) ASSERT_TRUE(v >= 0.0 && v < 1.0);
}

TEST(Rng, IndexStaysInRange) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.index(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Parallel, ResultIndependentOfWorkerCount) {
  auto run = [](std::size_t threads) {
    set_num_threads(threads);
    std::vector<double> out(1000);
    parallel_for(0, out.size(), 1u << 30, [&](std::size_t i) { out[i] = std::sin(static_cast<double>(i)); });
    return out;
  };
  const auto one = run(1);
  const auto four = run(4);
  set_num_threads(1);
  EXPECT_EQ(one, four);
}
