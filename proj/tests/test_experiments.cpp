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

#include "kiv/experiments.hpp"
#include "kiv/scenarios.hpp"

namespace kiv {
namespace {

TEST(SlopeFit, RecoversExactPowerLaw) {
  std::vector<double> x{10, 20, 40, 80, 160}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.7));
  const SlopeFit f = fit_decay_slope(x, y);
  EXPECT_NEAR(f.slope, 0.7, 1e-12);
  EXPECT_NEAR(f.stderr_, 0.0, 1e-10);
  EXPECT_THROW(fit_decay_slope({1, 2, 3}, {1, 2, 3}), ValidationError);
  EXPECT_THROW(fit_decay_slope({1, 2, 3, 4}, {1, 0, 3, 4}), NumericalError);
}

TEST(ParallelFor, FillsEverySlotAndReportsLowestFailure) {
  std::vector<int> out(50, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i) * 2);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 4 || i == 7) throw NumericalError("item " + std::to_string(i));
    });
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "item 4");
  }
}

RateStudyConfig small_rate_config() {
  RateStudyConfig c;
  c.params.beta_x = c.params.p_x = 1.0;
  c.params.beta_z = c.params.p_z = c.params.alpha_z = 1.0;
  c.params.a = 1.5;
  c.n_grid = {32, 64, 128, 256};
  c.replicates = 2;
  c.seed = 99;
  return c;
}

TEST(RateStudy, DeterministicAcrossInvocationsAndThreadCounts) {
  const DiscreteInstance inst = rate_instance(40);
  RateStudyConfig c = small_rate_config();
  c.threads = 1;
  const RateReport a = run_rate_study(inst, c);
  c.threads = 3;
  const RateReport b = run_rate_study(inst, c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].err.l2x, b.records[k].err.l2x);
    EXPECT_EQ(a.records[k].err.pseudo, b.records[k].err.pseudo);
  }
  EXPECT_EQ(a.fit.slope, b.fit.slope);
  EXPECT_EQ(a.jensen_violations, 0);
  EXPECT_EQ(a.mse.rows(), 2);
  EXPECT_EQ(a.mse.cols(), 4);
  EXPECT_GE(a.mse.minCoeff(), 0.0);
}

TEST(RateStudy, SchedulesFollowTheory) {
  const RateReport r = run_rate_study(rate_instance(40), small_rate_config());
  EXPECT_EQ(r.m_grid[0], static_cast<long long>(std::llround(std::pow(32.0, 1.5))));
  EXPECT_NEAR(r.xi[0], std::pow(static_cast<double>(r.m_grid[0]), -0.5), 1e-15);
  EXPECT_NEAR(r.lambda[0], std::pow(32.0, -r.theory.lambda_exponent), 1e-15);
  EXPECT_EQ(r.theory_slope, r.theory.squared_error_exponent);
}

TEST(RateStudy, NoiselessErrorsDecreaseAlongTheGrid) {
  const DiscreteInstance inst = rate_instance(40, 0.0);
  RateStudyConfig c = small_rate_config();
  c.replicates = 8;
  const RateReport r = run_rate_study(inst, c);
  // Single replicates can wobble with the observed atoms; the means must not.
  const Eigen::VectorXd mean = r.mse.colwise().mean().transpose();
  for (Eigen::Index g = 1; g < mean.size(); ++g) EXPECT_LT(mean[g], mean[g - 1]) << g << "\n" << mean.transpose();
  EXPECT_GT(r.fit.slope, 0.0);
}

TEST(RateStudy, RejectsShortGrid) {
  RateStudyConfig c = small_rate_config();
  c.n_grid = {10, 20, 40};
  EXPECT_THROW(run_rate_study(rate_instance(20), c), ValidationError);
  c.n_grid = {10, 40, 20, 80};
  EXPECT_THROW(run_rate_study(rate_instance(20), c), ValidationError);
}

TEST(MinNormStudy, FloorAndRejection) {
  MinNormStudyConfig c;
  c.sizes = {100, 400};
  c.replicates = 3;
  const MinNormReport r = run_minnorm_study(reference_instance(), c);
  EXPECT_NEAR(r.floor, 1.0, 1e-12);
  EXPECT_EQ(r.err_to_hstar.size(), 2u);
  EXPECT_EQ(r.jensen_violations, 0);
  const DiscreteInstance identified = identity_instance(3, Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3), 1.0);
  EXPECT_THROW(run_minnorm_study(identified, c), ValidationError);
}

TEST(SaturationStudy, IteratedNuOneEqualsTikhonov) {
  SaturationStudyConfig c;
  c.filters = {FilterSpec::tikhonov(), FilterSpec::iterated_tikhonov(1)};
  c.m_grid = {64, 128, 256, 512};
  c.replicates = 3;
  const SaturationReport r = run_saturation_study(saturation_instance(21), c);
  const std::size_t per = c.m_grid.size() * 3;
  for (std::size_t k = 0; k < per; ++k)
    EXPECT_NEAR(r.records[k].stage1_l2, r.records[per + k].stage1_l2, 1e-10 * r.records[k].stage1_l2 + 1e-15);
  EXPECT_NEAR(r.fits[0].slope, r.fits[1].slope, 1e-8);
}

TEST(SaturationStudy, RejectsEmptyFilterList) {
  SaturationStudyConfig c;
  c.filters.clear();
  EXPECT_THROW(run_saturation_study(saturation_instance(21), c), ValidationError);
}

}  // namespace
}  // namespace kiv
