// Copyright 2026 The kiv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "kiv/scenarios.hpp"
#include "test_util.hpp"

namespace kiv {
namespace {

TEST(Streams, DeterministicAndDistinct) {
  Rng a = make_stream(5, {1, 2}), b = make_stream(5, {1, 2}), c = make_stream(5, {2, 1}), d = make_stream(6, {1, 2});
  const auto va = a(), vb = b(), vc = c(), vd = d();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
}

TEST(SampleDiscrete, NoiselessIdentityReturnsH0) {
  const Eigen::Vector3d h0(0.5, -1.0, 2.0);
  const DiscreteInstance inst = identity_instance(3, Eigen::MatrixXd::Identity(3, 3), h0, 0.0);
  const DiscreteSample s = sample_discrete(inst, 10, 50, 1);
  for (Eigen::Index j = 0; j < 50; ++j) EXPECT_EQ(s.y2[j], h0[static_cast<Eigen::Index>(s.z2(j, 0))]);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_EQ(s.x1(i, 0), s.z1(i, 0));
}

TEST(SampleDiscrete, ConditionalMeanMatchesR0) {
  const DiscreteInstance inst = reference_instance(1.0);
  const long long n = 100000;
  const DiscreteSample s = sample_discrete(inst, 1, n, 7);
  double sum = 0.0;
  long long n1 = 0;
  for (long long j = 0; j < n; ++j)
    if (s.z2(j, 0) == 0.0) {
      sum += s.y2[j];
      ++n1;
    }
  ASSERT_GT(n1, 0);
  EXPECT_LE(std::abs(sum / static_cast<double>(n1) - 0.5), 4.0 / std::sqrt(static_cast<double>(n1)));
}

TEST(SampleDiscrete, Errors) {
  const DiscreteInstance inst = reference_instance();
  EXPECT_THROW(sample_discrete(inst, 0, 5, 1), ValidationError);
  EXPECT_THROW(sample_discrete(inst, 5, 0, 1), ValidationError);
}

TEST(SampleDiscrete, BitIdenticalForSameSeed) {
  Rng rng = make_stream(51, {});
  const DiscreteInstance inst = random_instance(rng, 4, 3);
  const DiscreteSample a = sample_discrete(inst, 30, 20, 9), b = sample_discrete(inst, 30, 20, 9);
  EXPECT_TRUE((a.z1.array() == b.z1.array()).all());
  EXPECT_TRUE((a.x1.array() == b.x1.array()).all());
  EXPECT_TRUE((a.y2.array() == b.y2.array()).all());
}

TEST(SampleDiscrete, StreamsDoNotDependOnTheOtherSize) {
  const DiscreteInstance inst = reference_instance();
  const DiscreteSample a = sample_discrete(inst, 30, 20, 4), b = sample_discrete(inst, 20, 30, 4);
  EXPECT_TRUE((a.z1.topRows(20).array() == b.z1.array()).all());
  EXPECT_TRUE((a.y2.array() == b.y2.head(20).array()).all());
}

TEST(SampleDiscrete, ConditionalLawConverges) {
  Rng rng = make_stream(52, {});
  const DiscreteInstance inst = random_instance(rng, 5, 2);
  const DiscreteSample s = sample_discrete(inst, 40000, 1, 3);
  for (Eigen::Index z = 0; z < inst.dz(); ++z) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(inst.dx());
    for (Eigen::Index i = 0; i < s.z1.rows(); ++i)
      if (s.z1(i, 0) == static_cast<double>(z)) counts[static_cast<Eigen::Index>(s.x1(i, 0))] += 1.0;
    ASSERT_GE(counts.sum(), 1e4);
    const double tv = 0.5 * (counts / counts.sum() - inst.cond().row(z).transpose()).cwiseAbs().sum();
    EXPECT_LE(tv, 0.05);
  }
}

TEST(Multinomial, TotalsAndMeans) {
  Rng rng = make_stream(53, {});
  const Eigen::Vector4d p(0.1, 0.2, 0.3, 0.4);
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  for (int r = 0; r < 2000; ++r) {
    const Eigen::VectorXd c = multinomial(rng, 1000, p);
    EXPECT_EQ(c.sum(), 1000.0);
    acc += c;
  }
  acc /= 2000.0 * 1000.0;
  EXPECT_LE((acc - p).cwiseAbs().maxCoeff(), 2e-3);
}

TEST(CountSampling, MatchesPerSampleLawInMean) {
  const DiscreteInstance inst = reference_instance(1.0);
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd ysum = Eigen::VectorXd::Zero(2), cnt = Eigen::VectorXd::Zero(2);
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const CountSample c = sample_discrete_counts(inst, 500, 500, 11, {static_cast<std::uint64_t>(r)});
    EXPECT_EQ(c.m(), 500.0);
    EXPECT_EQ(c.n(), 500.0);
    s1 += c.stage1;
    ysum += c.stage2_ysum;
    cnt += c.stage2_count;
  }
  s1 /= 500.0 * reps;
  EXPECT_NEAR(s1(0, 0), 0.25, 0.01);
  EXPECT_NEAR(s1(1, 0), 0.25, 0.01);
  EXPECT_NEAR(s1(2, 0), 0.0, 0.0);
  EXPECT_NEAR(s1(1, 1), 0.25, 0.01);
  EXPECT_NEAR(ysum[0] / cnt[0], 0.5, 0.01);
  EXPECT_NEAR(ysum[1] / cnt[1], -0.5, 0.01);
}

TEST(Catalogue, InstancesAreWellFormed) {
  const DiscreteInstance rate = rate_instance();
  EXPECT_EQ(rate.dx(), 200);
  EXPECT_LE((rate.h_star() - rate.h0()).cwiseAbs().maxCoeff(), 1e-8);
  const DiscreteInstance sat = saturation_instance();
  EXPECT_EQ(sat.dx(), 51);
  EXPECT_GT(sat.cond().minCoeff(), 0.0);
  const Eigen::MatrixXd g = circulant_gram(Eigen::Vector3d(0.5, 0.2, 0.2));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g / 3.0);
  EXPECT_NEAR(es.eigenvalues()[2], 0.5, 1e-12);
  EXPECT_NEAR(es.eigenvalues()[0], 0.2, 1e-12);
}

TEST(ContinuousDemo, DeterministicWithMeanZeroNoise) {
  ContinuousDemoParams p;
  p.n = 4000;
  p.m = 10;
  p.seed = 3;
  const ContinuousDemo a = continuous_demo(p), b = continuous_demo(p);
  EXPECT_TRUE((a.y2.array() == b.y2.array()).all());
  EXPECT_TRUE((a.z1.array() == b.z1.array()).all());
  // U = Y - h0(X): mean zero, and correlated with X through V.
  double mu = 0.0, cov = 0.0;
  for (Eigen::Index j = 0; j < p.n; ++j) mu += a.y2[j] - demo_h0(a.x2(j, 0));
  mu /= static_cast<double>(p.n);
  for (Eigen::Index j = 0; j < p.n; ++j) cov += (a.y2[j] - demo_h0(a.x2(j, 0))) * a.x2(j, 0);
  EXPECT_LT(std::abs(mu), 0.05);
  EXPECT_GT(cov / static_cast<double>(p.n), 0.2);
  EXPECT_LE(a.x2.cwiseAbs().maxCoeff(), 3.0);
  p.n = 0;
  EXPECT_THROW(continuous_demo(p), ValidationError);
}

TEST(ContinuousDemo, StructuralFunctionShape) {
  EXPECT_EQ(demo_h0(0.0), 0.0);
  EXPECT_NEAR(demo_h0(3.0), std::log(9.0), 1e-15);
  EXPECT_NEAR(demo_h0(-3.0), -std::log(9.0), 1e-15);
}

}  // namespace
}  // namespace kiv
