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

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "kiv/error.hpp"

namespace kiv {

struct RateParams {
  double beta_x = 1.0;
  double p_x = 1.0;
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  int c_f = 0;
  double beta_z = 2.0;
  double p_z = 0.5;
  double alpha_z = 0.5;
  double a = 3.0;      // m = n^a
  double gamma = 0.0;  // 0: L2 error, 1: RKHS error

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(beta_x) && beta_x >= 1.0, "rate params: beta_x must be >= 1");
    require(finite(p_x) && p_x > 0.0 && p_x <= 1.0, "rate params: p_x must lie in (0, 1]");
    require(finite(gamma0) && gamma0 >= 1.0, "rate params: gamma0 must be >= 1");
    require(finite(gamma1) && gamma1 >= 1.0 && gamma1 <= gamma0, "rate params: gamma1 must lie in [1, gamma0]");
    require(c_f == 0 || c_f == 1, "rate params: c_f must be 0 or 1");
    require(finite(beta_z) && beta_z > 0.0, "rate params: beta_z must be > 0");
    require(finite(p_z) && p_z > 0.0 && p_z <= 1.0, "rate params: p_z must lie in (0, 1]");
    require(finite(alpha_z) && alpha_z >= p_z && alpha_z <= 1.0, "rate params: alpha_z must lie in [p_z, 1]");
    require(alpha_z <= beta_z, "rate params: alpha_z must not exceed beta_z");
    require(finite(a) && a > 0.0, "rate params: a must be > 0");
    require(finite(gamma) && gamma >= 0.0 && gamma <= 1.0, "rate params: gamma must lie in [0, 1]");
  }
};

enum class RateCase { A_i, A_ii, B_i, B_ii, B_iii };

inline std::string to_string(RateCase c) {
  switch (c) {
    case RateCase::A_i: return "A.i";
    case RateCase::A_ii: return "A.ii";
    case RateCase::B_i: return "B.i";
    case RateCase::B_ii: return "B.ii";
    case RateCase::B_iii: return "B.iii";
  }
  return "?";
}

struct RateResult {
  RateCase rate_case = RateCase::A_i;
  double lambda_exponent = 0.0;          // lambda = n^-lambda_exponent
  double squared_error_exponent = 0.0;   // error = n^-squared_error_exponent
  double xi_exponent_in_m = 0.0;         // xi = m^-xi_exponent_in_m
  // a-thresholds separating the branches (case A uses only the first).
  double threshold_1 = 0.0;
  double threshold_2 = 0.0;

  std::string case_label() const { return to_string(rate_case); }
};

namespace detail {
inline constexpr double kTieRelTol = 1e-12;
// a <= b, with exact ties (to relative tolerance) counted as <=.
inline bool leq(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a <= b;
  return a <= b + kTieRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Case table of the upper bound. Ties go to case A and to the lower-index
/// branch; adjacent branches agree on the boundary, so nothing is lost.
inline RateResult exponent_and_schedule(const RateParams& p) {
  p.validate();
  const double d = p.beta_x - 1.0 + 2.0 * p.gamma0 + (1.0 - p.gamma) * p.c_f;
  const double nn = p.beta_x - 1.0 + p.gamma0 + p.gamma0 * p.p_x / p.gamma1;
  const double gap = p.beta_x - p.gamma;
  const double zf = p.beta_z / (p.beta_z + p.p_z);
  RateResult r;
  r.xi_exponent_in_m = 1.0 / (p.beta_z + p.p_z);
  if (detail::leq(p.alpha_z * d, p.beta_z * nn)) {
    r.threshold_1 = (p.beta_z + p.p_z) / p.beta_z * d / nn;
    r.threshold_2 = r.threshold_1;
    if (detail::leq(r.threshold_1, p.a)) {
      r.rate_case = RateCase::A_i;
      r.lambda_exponent = p.gamma0 / nn;
      r.squared_error_exponent = gap / nn;
    } else {
      r.rate_case = RateCase::A_ii;
      r.lambda_exponent = p.a * zf * p.gamma0 / d;
      r.squared_error_exponent = p.a * zf * gap / d;
    }
    return r;
  }
  const double g = p.gamma0 * (1.0 - p.p_x / p.gamma1) + (1.0 - p.gamma) * p.c_f;
  r.threshold_1 = p.beta_z == p.alpha_z ? std::numeric_limits<double>::infinity()
                                        : (p.beta_z + p.p_z) / (p.beta_z - p.alpha_z) * g / nn;
  r.threshold_2 = (p.beta_z + p.p_z) / p.alpha_z;
  if (detail::leq(r.threshold_1, p.a)) {
    r.rate_case = RateCase::B_i;
    r.lambda_exponent = p.gamma0 / nn;
    r.squared_error_exponent = gap / nn;
  } else if (detail::leq(r.threshold_2, p.a)) {
    const double f = p.a * (p.beta_z - p.alpha_z) / (p.beta_z + p.p_z) + 1.0;
    r.rate_case = RateCase::B_ii;
    r.lambda_exponent = f * p.gamma0 / d;
    r.squared_error_exponent = f * gap / d;
  } else {
    r.rate_case = RateCase::B_iii;
    r.lambda_exponent = p.a * zf * p.gamma0 / d;
    r.squared_error_exponent = p.a * zf * gap / d;
  }
  return r;
}

/// Minimax lower-bound exponent beta_X / (beta_X + gamma1 - 1 + p_X).
inline double lower_bound_exponent(const RateParams& p) {
  p.validate();
  return p.beta_x / (p.beta_x + p.gamma1 - 1.0 + p.p_x);
}

}  // namespace kiv
