#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dapce/benchmarks.hpp"
#include "dapce/errors.hpp"

using namespace dapce;

TEST(Responses, FortiniAtMeans) {
  // acos(78.15 / 78.74), evaluated independently.
  const std::vector<double> x = {55.29, 22.86, 22.86, 101.6};
  EXPECT_NEAR(fortini_clutch(x), 0.12249401025716214, 1e-12);
  const std::vector<double> bad = {90.0, 22.86, 22.86, 101.6};
  try {
    fortini_clutch(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Responses, CantileverAtMeans) {
  const std::vector<double> x = {50.0, 7e4, 1e5, 2.6e5, 5.3594e8, 3e3, 30.0};
  EXPECT_NEAR(cantilever_beam(x), 18.495231957653125, 1e-9);
  std::vector<double> zero = x;
  zero[3] = 0.0;
  EXPECT_THROW(cantilever_beam(zero), Error);
}

TEST(Responses, RackwitzAllOnes) {
  const std::vector<double> ones(40, 1.0);
  EXPECT_NEAR(rackwitz(ones), 0.6 * std::sqrt(40.0), 1e-12);
  const std::vector<double> ones100(100, 1.0);
  EXPECT_NEAR(rackwitz(ones100), 6.0, 1e-12);
}

TEST(Responses, MultimodalAtOrigin) {
  const std::vector<double> x = {0.0, 0.0, 1.0, 0.5};
  EXPECT_NEAR(synthetic_multimodal(x), 4.5 + 0.3 * std::sin(0.5), 1e-14);
}

TEST(Registry, NamesAndShapes) {
  const auto names = benchmark_names();
  ASSERT_EQ(names.size(), 4u);
  for (const auto& n : names) {
    const Benchmark b = get_benchmark(n);
    EXPECT_EQ(b.name, n);
    EXPECT_FALSE(b.hidden.empty());
    EXPECT_NO_THROW(b.training.validate());
  }
  EXPECT_EQ(get_benchmark("fortini").inputs.dim(), 4);
  EXPECT_EQ(get_benchmark("cantilever").inputs.dim(), 7);
  EXPECT_EQ(get_benchmark("rackwitz").inputs.dim(), 40);
  EXPECT_EQ(get_benchmark("rackwitz", {100}).inputs.dim(), 100);
  EXPECT_EQ(get_benchmark("multimodal").inputs.dim(), 4);
  try {
    get_benchmark("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("fortini"), std::string::npos);
  }
}

TEST(Registry, ReferenceValues) {
  const auto f = get_benchmark("fortini").reference;
  ASSERT_TRUE(f.has_value());
  EXPECT_DOUBLE_EQ(f->moments.mean, 0.1219);
  ASSERT_TRUE(f->p_fail.has_value());
  EXPECT_DOUBLE_EQ(*f->p_fail, 0.07881);
  const auto r = get_benchmark("rackwitz", {100}).reference;
  ASSERT_TRUE(r.has_value());
  EXPECT_DOUBLE_EQ(r->moments.mean, 6.0);
}

TEST(Evaluate, ThreadInvariantAndCountsExclusions) {
  const Benchmark b = get_benchmark("cantilever");
  const Matrix x = mcs_sample(b.inputs, 100000, 3);
  const BenchmarkData a = evaluate_benchmark(b, x, 1);
  const BenchmarkData c = evaluate_benchmark(b, x, 3);
  EXPECT_TRUE((a.y.array() == c.y.array()).all());
  EXPECT_EQ(a.excluded + static_cast<std::size_t>(a.y.size()), 100000u);

  const Benchmark f = get_benchmark("fortini");
  Matrix fx = mcs_sample(f.inputs, 10, 4);
  fx(2, 0) = 200.0;
  const BenchmarkData fd = evaluate_benchmark(f, fx);
  EXPECT_EQ(fd.excluded, 1u);
  EXPECT_EQ(fd.y.size(), 9);
  EXPECT_EQ(fd.x.rows(), 9);
}
