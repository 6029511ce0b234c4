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
#include <random>

#include <gtest/gtest.h>

#include "kiv/rate_theory.hpp"
#include "kiv/scenarios.hpp"

namespace kiv {
namespace {

RateParams base() {
  RateParams p;
  p.beta_x = 1.0;
  p.p_x = 1.0;
  p.gamma0 = p.gamma1 = 1.0;
  p.c_f = 0;
  p.beta_z = 2.0;
  p.p_z = 0.5;
  p.alpha_z = 0.5;
  p.a = 50.0;
  return p;
}

TEST(ExponentAndSchedule, ClassicalKrrRate) {
  const RateResult r = exponent_and_schedule(base());
  EXPECT_EQ(r.case_label(), "A.i");
  EXPECT_NEAR(r.squared_error_exponent, 0.5, 1e-15);
}

TEST(ExponentAndSchedule, SmootherTarget) {
  RateParams p = base();
  p.beta_x = 2.0;
  p.p_x = 0.5;
  const RateResult r = exponent_and_schedule(p);
  EXPECT_EQ(r.case_label(), "A.i");
  EXPECT_NEAR(r.squared_error_exponent, 0.8, 1e-15);
  EXPECT_NEAR(r.lambda_exponent, 0.4, 1e-15);
}

TEST(ExponentAndSchedule, StageOneStarved) {
  RateParams p = base();
  p.beta_x = 2.0;
  p.p_x = 0.5;
  p.a = 0.1;
  const RateResult r = exponent_and_schedule(p);
  EXPECT_EQ(r.case_label(), "A.ii");
  EXPECT_NEAR(r.squared_error_exponent, 0.1 * (2.0 / 2.5) * (2.0 / 3.0), 1e-15);
}

TEST(ExponentAndSchedule, CliExample) {
  RateParams p = base();
  p.a = 3.0;
  const RateResult r = exponent_and_schedule(p);
  EXPECT_EQ(r.case_label(), "A.i");
  EXPECT_NEAR(r.squared_error_exponent, 0.5, 1e-15);
}

TEST(ExponentAndSchedule, CaseBBranches) {
  // alpha_Z D > beta_Z N puts us in case B.
  RateParams p = base();
  p.beta_z = 1.0;
  p.p_z = 0.5;
  p.alpha_z = 0.9;
  p.gamma0 = 2.0;
  p.gamma1 = 1.5;
  p.c_f = 1;
  const double d = 1.0 - 1.0 + 4.0 + 1.0, nn = 0.0 + 2.0 + 2.0 / 1.5;
  ASSERT_GT(p.alpha_z * d, p.beta_z * nn);
  const double thr2 = 1.5 / 0.9;
  const double g = 2.0 * (1.0 - 1.0 / 1.5) + 1.0;
  const double thr1 = 1.5 / 0.1 * g / nn;
  p.a = thr1 + 1.0;
  EXPECT_EQ(exponent_and_schedule(p).case_label(), "B.i");
  EXPECT_NEAR(exponent_and_schedule(p).squared_error_exponent, 1.0 / nn, 1e-14);
  p.a = 0.5 * (thr1 + thr2);
  EXPECT_EQ(exponent_and_schedule(p).case_label(), "B.ii");
  EXPECT_NEAR(exponent_and_schedule(p).squared_error_exponent, (p.a * 0.1 / 1.5 + 1.0) / d, 1e-14);
  p.a = 0.5 * thr2;
  EXPECT_EQ(exponent_and_schedule(p).case_label(), "B.iii");
  EXPECT_NEAR(exponent_and_schedule(p).squared_error_exponent, p.a * (1.0 / 1.5) / d, 1e-14);
}

TEST(ExponentAndSchedule, EqualSourceExponentsMakeBiUnreachable) {
  RateParams p = base();
  p.beta_z = 0.9;
  p.p_z = 0.5;
  p.alpha_z = 0.9;
  p.gamma0 = 3.0;
  p.gamma1 = 3.0;
  p.a = 1e6;
  const RateResult r = exponent_and_schedule(p);
  EXPECT_TRUE(std::isinf(r.threshold_1));
  EXPECT_EQ(r.case_label(), "B.ii");
}

TEST(ExponentAndSchedule, RejectsOutOfRangeParameters) {
  auto bad = [](auto mutate) {
    RateParams p = base();
    mutate(p);
    return p;
  };
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.beta_x = 0.5; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.p_x = 0.0; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.gamma1 = 2.0; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.c_f = 2; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.alpha_z = 0.4; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.beta_z = 0.4; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.a = 0.0; })), ValidationError);
  EXPECT_THROW(exponent_and_schedule(bad([](RateParams& p) { p.gamma = 1.5; })), ValidationError);
}

RateParams random_params(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RateParams p;
  p.beta_x = 1.0 + 2.0 * u(rng);
  p.p_x = 0.05 + 0.95 * u(rng);
  p.gamma1 = 1.0 + 2.0 * u(rng);
  p.gamma0 = p.gamma1 + 2.0 * u(rng);
  p.c_f = u(rng) < 0.5 ? 0 : 1;
  p.p_z = 0.05 + 0.95 * u(rng);
  p.alpha_z = p.p_z + (1.0 - p.p_z) * u(rng);
  p.beta_z = p.alpha_z + 3.0 * u(rng);
  p.gamma = u(rng) < 0.5 ? 0.0 : u(rng);
  p.a = 1.0;
  return p;
}

TEST(ExponentAndSchedule, ContinuousAcrossBoundaries) {
  Rng rng = make_stream(61, {});
  int checked = 0;
  for (int draw = 0; draw < 200 && checked < 20; ++draw) {
    RateParams p = random_params(rng);
    const RateResult probe = exponent_and_schedule(p);
    for (double thr : {probe.threshold_1, probe.threshold_2}) {
      if (!std::isfinite(thr)) continue;
      const double eps = 1e-9 * thr;
      RateParams lo = p, hi = p;
      lo.a = thr - eps;
      hi.a = thr + eps;
      const RateResult rl = exponent_and_schedule(lo), rh = exponent_and_schedule(hi);
      EXPECT_NEAR(rl.squared_error_exponent, rh.squared_error_exponent, 1e-8);
      EXPECT_NEAR(rl.lambda_exponent, rh.lambda_exponent, 1e-8);
      // Exactly on the boundary both branch formulas agree; the tie rule picks one.
      RateParams on = p;
      on.a = thr;
      EXPECT_NEAR(exponent_and_schedule(on).squared_error_exponent, rh.squared_error_exponent, 1e-8);
      ++checked;
    }
  }
  EXPECT_GE(checked, 20);
}

TEST(ExponentAndSchedule, MonotoneInAAndGamma0) {
  Rng rng = make_stream(62, {});
  for (int draw = 0; draw < 50; ++draw) {
    RateParams p = random_params(rng);
    double prev = -1.0;
    for (double a = 0.05; a < 20.0; a *= 1.3) {
      p.a = a;
      const double e = exponent_and_schedule(p).squared_error_exponent;
      EXPECT_GE(e, prev - 1e-12);
      prev = e;
    }
    p.a = 2.0;
    prev = 1e9;
    const double g1 = p.gamma1;
    for (double g0 = g1; g0 < g1 + 4.0; g0 += 0.25) {
      p.gamma0 = g0;
      const double e = exponent_and_schedule(p).squared_error_exponent;
      EXPECT_LE(e, prev + 1e-12);
      prev = e;
    }
  }
}

TEST(LowerBound, Examples) {
  RateParams p = base();
  EXPECT_NEAR(lower_bound_exponent(p), 0.5, 1e-15);
  p.beta_x = 2.0;
  p.p_x = 0.5;
  EXPECT_NEAR(lower_bound_exponent(p), exponent_and_schedule(p).squared_error_exponent, 1e-15);
  p = base();
  p.gamma0 = 2.0;
  p.gamma1 = 1.5;
  EXPECT_GT(lower_bound_exponent(p), exponent_and_schedule(p).squared_error_exponent);
}

TEST(LowerBound, MatchesUpperBoundWhenLinkIsTight) {
  Rng rng = make_stream(63, {});
  for (int draw = 0; draw < 30; ++draw) {
    RateParams p = random_params(rng);
    p.gamma0 = p.gamma1;
    p.gamma = 0.0;
    p.a = 1e6;
    EXPECT_NEAR(lower_bound_exponent(p), exponent_and_schedule(p).squared_error_exponent, 1e-12);
  }
}

}  // namespace
}  // namespace kiv
