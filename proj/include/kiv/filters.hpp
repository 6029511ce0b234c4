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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kiv/error.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

enum class FilterKind { tikhonov, landweber, pcr, iterated_tikhonov, gradient_flow };

inline std::string_view to_string(FilterKind k) {
  switch (k) {
    case FilterKind::tikhonov: return "tikhonov";
    case FilterKind::landweber: return "landweber";
    case FilterKind::pcr: return "pcr";
    case FilterKind::iterated_tikhonov: return "iterated_tikhonov";
    case FilterKind::gradient_flow: return "gradient_flow";
  }
  return "?";
}

/// A spectral filter g_xi approximating x -> 1/x, with the constants of its
/// boundedness (E) and approximation (omega_rho) conditions and its
/// qualification rho.
struct FilterSpec {
  FilterKind kind = FilterKind::tikhonov;
  double step_tau = 1.0;  // landweber only
  int nu = 1;             // iterated_tikhonov only

  static FilterSpec tikhonov() { return {}; }
  static FilterSpec landweber(double tau) {
    require(tau > 0.0 && std::isfinite(tau), "landweber: step_tau must be positive");
    return {FilterKind::landweber, tau, 1};
  }
  static FilterSpec pcr() { return {FilterKind::pcr, 1.0, 1}; }
  static FilterSpec iterated_tikhonov(int nu) {
    require(nu >= 1, "iterated_tikhonov: nu must be a positive integer");
    return {FilterKind::iterated_tikhonov, 1.0, nu};
  }
  static FilterSpec gradient_flow() { return {FilterKind::gradient_flow, 1.0, 1}; }

  std::string name() const {
    switch (kind) {
      case FilterKind::landweber: {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, step_tau);
        return "landweber(tau=" + std::string(buf, res.ptr) + ")";
      }
      case FilterKind::iterated_tikhonov: return "iterated_tikhonov(nu=" + std::to_string(nu) + ")";
      default: return std::string(to_string(kind));
    }
  }

  double qualification() const {
    switch (kind) {
      case FilterKind::tikhonov: return 1.0;
      case FilterKind::iterated_tikhonov: return static_cast<double>(nu);
      default: return std::numeric_limits<double>::infinity();
    }
  }

  // g_xi(0) = nu / xi for iterated Tikhonov, so E = 1 only holds for nu = 1.
  double const_E() const { return kind == FilterKind::iterated_tikhonov ? static_cast<double>(nu) : 1.0; }

  double const_omega(double rho) const {
    switch (kind) {
      case FilterKind::landweber: return rho <= 1.0 ? 1.0 : std::pow(rho, rho);
      case FilterKind::gradient_flow: return std::max(1.0, std::pow(rho / std::exp(1.0), rho));
      default: return 1.0;
    }
  }

  /// Landweber runs k = max(1, round(1/xi)) steps.
  long landweber_steps(double xi) const {
    const double k = std::round(1.0 / xi);
    return std::max(1L, static_cast<long>(std::min(k, 1e15)));
  }

  /// The index actually realised by the filter: 1/k for landweber, xi otherwise.
  double effective_xi(double xi) const {
    return kind == FilterKind::landweber ? 1.0 / static_cast<double>(landweber_steps(xi)) : xi;
  }
};

namespace detail {
inline constexpr double kTaylorSwitch = 1e-6;
}

/// g_xi(x) for x >= 0.
inline double filter_scalar(const FilterSpec& f, double x, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw ValidationError("filter: xi must be positive (got " + std::to_string(xi) + ")");
  if (x < 0.0) throw ValidationError("filter: x must be nonnegative (got " + std::to_string(x) + ")");
  switch (f.kind) {
    case FilterKind::tikhonov: return 1.0 / (x + xi);
    case FilterKind::landweber: {
      const double tau = f.step_tau;
      const double tx = tau * x;
      if (tx > 1.0 + 1e-10)
        throw ValidationError("landweber: tau * x = " + std::to_string(tx) + " > 1, iteration diverges");
      const auto k = static_cast<double>(f.landweber_steps(xi));
      if (x == 0.0) return tau * k;
      // tau * sum_{i<k} (1 - tau x)^i = (1 - (1 - tau x)^k) / x
      return -std::expm1(k * std::log1p(-std::min(tx, 1.0))) / x;
    }
    case FilterKind::pcr: return x >= xi ? 1.0 / x : 0.0;
    case FilterKind::iterated_tikhonov: {
      const double nu = f.nu;
      const double t = x / xi;
      if (t < detail::kTaylorSwitch)
        return (nu - 0.5 * nu * (nu + 1.0) * t + nu * (nu + 1.0) * (nu + 2.0) / 6.0 * t * t) / xi;
      // ((x + xi)^nu - xi^nu) / (x (x + xi)^nu) = (1 - (1 + t)^-nu) / x
      return -std::expm1(-nu * std::log1p(t)) / x;
    }
    case FilterKind::gradient_flow: {
      const double t = x / xi;
      if (t < detail::kTaylorSwitch) return (1.0 - 0.5 * t + t * t / 6.0) / xi;
      return -std::expm1(-t) / x;
    }
  }
  return 0.0;
}

/// Residual 1 - x g_xi(x) in closed form (forming it from g loses all
/// precision where g_xi(x) x ~ 1).
inline double filter_residual(const FilterSpec& f, double x, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw ValidationError("filter: xi must be positive (got " + std::to_string(xi) + ")");
  if (x < 0.0) throw ValidationError("filter: x must be nonnegative (got " + std::to_string(x) + ")");
  switch (f.kind) {
    case FilterKind::tikhonov: return xi / (x + xi);
    case FilterKind::landweber: {
      const double tx = f.step_tau * x;
      if (tx > 1.0 + 1e-10)
        throw ValidationError("landweber: tau * x = " + std::to_string(tx) + " > 1, iteration diverges");
      return std::pow(1.0 - std::min(tx, 1.0), static_cast<double>(f.landweber_steps(xi)));
    }
    case FilterKind::pcr: return x >= xi ? 0.0 : 1.0;
    case FilterKind::iterated_tikhonov: return std::exp(-f.nu * std::log1p(x / xi));
    case FilterKind::gradient_flow: return std::exp(-x / xi);
  }
  return 1.0;
}

/// U g_xi(D) U^T for symmetric PSD M = U D U^T. Eigenvalues are PSD-clamped
/// first; when kappa_sq > 0 the spectrum must not exceed kappa_sq (1 + 1e-10).
inline Eigen::MatrixXd filter_psd(const FilterSpec& f, const linalg::SymEigen& eig, double xi,
                                  double kappa_sq = -1.0) {
  if (kappa_sq > 0.0 && eig.size() > 0 && eig.values.maxCoeff() > kappa_sq * (1.0 + 1e-10))
    throw ValidationError("filter_psd: spectrum exceeds kappa_sq = " + std::to_string(kappa_sq));
  return eig.apply([&](double v) { return filter_scalar(f, v, xi); });
}

inline Eigen::MatrixXd filter_psd(const FilterSpec& f, const Eigen::MatrixXd& m, double xi,
                                  double kappa_sq = -1.0) {
  return filter_psd(f, linalg::psd_eigen(m, -1.0, "filter_psd"), xi, kappa_sq);
}

struct FilterCheckReport {
  std::string filter;
  double const_E = 1.0;
  double rho_probe = 1.0;
  double qualification = 1.0;
  double omega = 1.0;
  double cond1_max = 0.0;
  double cond2_max = 0.0;
  bool cond1_pass = false;
  bool cond2_pass = false;
  bool pass = false;
  // rho_probe <= qualification; a probe beyond it is expected to fail.
  bool expected_pass = true;
  std::string note;
};

inline std::vector<double> log_grid(double lo, double hi, int count) {
  require(count >= 1 && lo > 0.0 && hi >= lo, "log_grid: invalid range");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = hi;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Grid check of both filter conditions:
///   cond1 = max xi^{1-theta} x^theta g_xi(x)          theta in [0, 1]
///   cond2 = max |1 - g_xi(x) x| x^theta xi^{-theta}   theta in [0, rho_probe]
/// over x in [0, kappa_sq] and the supplied xi grid.
inline FilterCheckReport verify_filter_conditions(const FilterSpec& f, double kappa_sq,
                                                  const std::vector<double>& xi_grid, int x_grid_size,
                                                  int theta_grid_size, double rho_probe) {
  require(kappa_sq > 0.0, "verify_filter_conditions: kappa_sq must be positive");
  require(!xi_grid.empty() && x_grid_size >= 2 && theta_grid_size >= 2,
          "verify_filter_conditions: grids must be nonempty");
  require(rho_probe >= 0.0 && std::isfinite(rho_probe), "verify_filter_conditions: rho_probe must be finite");

  FilterCheckReport r;
  r.filter = f.name();
  r.const_E = f.const_E();
  r.rho_probe = rho_probe;
  r.qualification = f.qualification();
  r.omega = f.const_omega(rho_probe);
  r.expected_pass = rho_probe <= r.qualification;
  if (f.kind == FilterKind::gradient_flow)
    r.note = "omega_rho taken as max(1, (rho/e)^rho)";
  if (f.kind == FilterKind::landweber) r.note = "conditions evaluated at xi_eff = 1/k";

  std::vector<double> xs;
  xs.push_back(0.0);
  for (double v : log_grid(kappa_sq * 1e-6, kappa_sq, x_grid_size - 1)) xs.push_back(v);

  for (double xi_in : xi_grid) {
    require(xi_in > 0.0, "verify_filter_conditions: xi grid must be positive");
    const double xi = f.effective_xi(xi_in);
    for (double x : xs) {
      const double g = filter_scalar(f, x, xi_in);
      const double resid = std::abs(filter_residual(f, x, xi_in));
      for (int i = 0; i < theta_grid_size; ++i) {
        const double th1 = static_cast<double>(i) / (theta_grid_size - 1);
        const double c1 = std::pow(xi, 1.0 - th1) * std::pow(x, th1) * g;
        r.cond1_max = std::max(r.cond1_max, c1);
        const double th2 = rho_probe * static_cast<double>(i) / (theta_grid_size - 1);
        const double c2 = resid * std::pow(x / xi, th2);
        r.cond2_max = std::max(r.cond2_max, c2);
      }
    }
  }
  r.cond1_pass = r.cond1_max <= r.const_E * (1.0 + 1e-9);
  r.cond2_pass = r.cond2_max <= r.omega * (1.0 + 1e-9);
  r.pass = r.cond1_pass && r.cond2_pass;
  return r;
}

}  // namespace kiv
