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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/filters.hpp"
#include "kiv/grouped.hpp"
#include "kiv/rate_theory.hpp"
#include "kiv/scenarios.hpp"
#include "kiv/stage1.hpp"

namespace kiv {

inline constexpr double kJensenTol = 1e-10;

// ---------------------------------------------------------------------------
// Helpers

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
/// write to their own slots, so the result does not depend on scheduling.
/// The first failure (lowest index) is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct SlopeFit {
  double slope = 0.0;  // decay exponent: y ~ x^-slope
  double stderr_ = 0.0;
  double intercept = 0.0;
};

/// OLS of log y on log x; returns the negated coefficient.
inline SlopeFit fit_decay_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "slope fit: size mismatch");
  require(x.size() >= 4, "slope fit: need at least 4 grid points");
  const auto k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw NumericalError("slope fit: non-positive value on a log scale at grid point " + std::to_string(i));
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  require(sxx > 0.0, "slope fit: grid has no spread");
  const double b = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - my - b * (std::log(x[i]) - mx);
    rss += r * r;
  }
  SlopeFit f;
  f.slope = -b;
  f.intercept = my - b * mx;
  f.stderr_ = std::sqrt(rss / (k - 2.0) / sxx);
  return f;
}

inline void require_grid(const std::vector<long long>& grid, std::size_t min_points, const char* what) {
  require(grid.size() >= min_points, std::string(what) + ": grid needs at least " + std::to_string(min_points) +
                                         " points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 1, std::string(what) + ": grid sizes must be >= 1");
    if (i > 0) require(grid[i] > grid[i - 1], std::string(what) + ": grid must be strictly ascending");
  }
}

inline double column_mean(const Eigen::MatrixXd& m, Eigen::Index col) { return m.col(col).mean(); }

// ---------------------------------------------------------------------------
// Rate study

struct RateStudyConfig {
  RateParams params;
  std::vector<long long> n_grid{128, 256, 512, 1024, 2048, 4096};
  int replicates = 20;
  std::uint64_t seed = 0;
  double c_xi = 1.0;
  double c_lambda = 1.0;
  FilterSpec filter = FilterSpec::tikhonov();
  unsigned threads = 0;
};

struct RateRecord {
  long long n = 0, m = 0;
  double lambda = 0.0, xi = 0.0;
  int replicate = 0;
  ExactErrors err;
};

struct RateReport {
  RateStudyConfig config;
  RateResult theory;
  std::vector<long long> m_grid;
  std::vector<double> lambda, xi;
  Eigen::MatrixXd mse;  // replicates x |n_grid|, exact L2(X) error to h*
  std::vector<RateRecord> records;
  SlopeFit fit;
  double theory_slope = 0.0;
  int jensen_violations = 0;

  std::vector<double> mean_mse() const {
    std::vector<double> out(static_cast<std::size_t>(mse.cols()));
    for (Eigen::Index g = 0; g < mse.cols(); ++g) out[static_cast<std::size_t>(g)] = column_mean(mse, g);
    return out;
  }
};

inline long long stage1_size(long long n, double a) {
  const double m = std::round(std::pow(static_cast<double>(n), a));
  require(m >= 1.0 && m < 9.0e15, "stage-1 size n^a out of range");
  return static_cast<long long>(m);
}

inline RateReport run_rate_study(const DiscreteInstance& inst, const RateStudyConfig& cfg) {
  require_grid(cfg.n_grid, 4, "rate study");
  require(cfg.replicates >= 1, "rate study: replicates must be >= 1");
  require(cfg.c_xi > 0.0 && cfg.c_lambda > 0.0, "rate study: schedule constants must be positive");
  RateReport rep;
  rep.config = cfg;
  rep.theory = exponent_and_schedule(cfg.params);
  rep.theory_slope = rep.theory.squared_error_exponent;
  const std::size_t grid = cfg.n_grid.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  for (long long n : cfg.n_grid) {
    const long long m = stage1_size(n, cfg.params.a);
    rep.m_grid.push_back(m);
    rep.xi.push_back(cfg.c_xi * std::pow(static_cast<double>(m), -rep.theory.xi_exponent_in_m));
    rep.lambda.push_back(cfg.c_lambda * std::pow(static_cast<double>(n), -rep.theory.lambda_exponent));
  }
  rep.records.resize(grid * reps);
  const GroupedEstimator est(inst);
  parallel_for(grid * reps, cfg.threads, [&](std::size_t k) {
    const std::size_t g = k / reps, r = k % reps;
    RateRecord& rec = rep.records[k];
    rec.n = cfg.n_grid[g];
    rec.m = rep.m_grid[g];
    rec.lambda = rep.lambda[g];
    rec.xi = rep.xi[g];
    rec.replicate = static_cast<int>(r);
    try {
      const CountSample s = sample_discrete_counts(inst, rec.m, rec.n, cfg.seed, {g, r});
      rec.err = exact_errors(inst, est.fit(s, cfg.filter, rec.xi, rec.lambda));
    } catch (const NumericalError& e) {
      throw NumericalError("rate study: n=" + std::to_string(rec.n) + " replicate " + std::to_string(r) + ": " +
                           e.what());
    }
  });
  rep.mse.resize(cfg.replicates, static_cast<Eigen::Index>(grid));
  for (const RateRecord& rec : rep.records) {
    const auto g = static_cast<Eigen::Index>(&rec - rep.records.data()) / cfg.replicates;
    rep.mse(rec.replicate, g) = rec.err.l2x;
    if (rec.err.pseudo > rec.err.l2x + kJensenTol) ++rep.jensen_violations;
  }
  std::vector<double> ns(cfg.n_grid.begin(), cfg.n_grid.end());
  rep.fit = fit_decay_slope(ns, rep.mean_mse());
  return rep;
}

// ---------------------------------------------------------------------------
// Minimum-norm study

struct MinNormStudyConfig {
  std::vector<long long> sizes{500, 2000, 8000};  // n = m
  int replicates = 20;
  std::uint64_t seed = 0;
  double c_xi = 1.0, xi_exponent = 0.5;          // xi = c_xi m^-xi_exponent
  double c_lambda = 1.0, lambda_exponent = 1.0 / 3.0;
  FilterSpec filter = FilterSpec::tikhonov();
  unsigned threads = 0;
};

struct MinNormRecord {
  long long size = 0;
  double lambda = 0.0, xi = 0.0;
  int replicate = 0;
  ExactErrors to_hstar;
  ExactErrors to_h0;
};

struct MinNormReport {
  MinNormStudyConfig config;
  double floor = 0.0;  // ||h0 - h*||^2 in L2(pi_X)
  std::vector<double> err_to_hstar, err_to_h0;  // per-size means
  std::vector<MinNormRecord> records;
  int jensen_violations = 0;
};

inline MinNormReport run_minnorm_study(const DiscreteInstance& inst, const MinNormStudyConfig& cfg) {
  require_grid(cfg.sizes, 1, "minnorm study");
  require(cfg.replicates >= 1, "minnorm study: replicates must be >= 1");
  const Spectra sp = covariance_spectra(inst);
  require(sp.eig_f.size() < sp.eig_x.size(),
          "minnorm study: instance is identified (rank C_F = rank C_X); the minimum-norm study needs a null space");
  MinNormReport rep;
  rep.config = cfg;
  rep.floor = exact_errors(inst, inst.h0()).l2x;
  const std::size_t grid = cfg.sizes.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  rep.records.resize(grid * reps);
  const GroupedEstimator est(inst);
  parallel_for(grid * reps, cfg.threads, [&](std::size_t k) {
    const std::size_t g = k / reps, r = k % reps;
    MinNormRecord& rec = rep.records[k];
    rec.size = cfg.sizes[g];
    const auto s = static_cast<double>(rec.size);
    rec.xi = cfg.c_xi * std::pow(s, -cfg.xi_exponent);
    rec.lambda = cfg.c_lambda * std::pow(s, -cfg.lambda_exponent);
    rec.replicate = static_cast<int>(r);
    try {
      const CountSample smp = sample_discrete_counts(inst, rec.size, rec.size, cfg.seed, {g, r});
      const Eigen::VectorXd h = est.fit(smp, cfg.filter, rec.xi, rec.lambda);
      rec.to_hstar = exact_errors(inst, h);
      rec.to_h0 = exact_errors(inst, h, inst.h0());
    } catch (const NumericalError& e) {
      throw NumericalError("minnorm study: size=" + std::to_string(rec.size) + " replicate " + std::to_string(r) +
                           ": " + e.what());
    }
  });
  rep.err_to_hstar.assign(grid, 0.0);
  rep.err_to_h0.assign(grid, 0.0);
  for (std::size_t k = 0; k < rep.records.size(); ++k) {
    const MinNormRecord& rec = rep.records[k];
    rep.err_to_hstar[k / reps] += rec.to_hstar.l2x / static_cast<double>(reps);
    rep.err_to_h0[k / reps] += rec.to_h0.l2x / static_cast<double>(reps);
    if (rec.to_hstar.pseudo > rec.to_hstar.l2x + kJensenTol) ++rep.jensen_violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Stage-1 saturation study

struct SaturationStudyConfig {
  std::vector<FilterSpec> filters{FilterSpec::tikhonov(), FilterSpec::iterated_tikhonov(3), FilterSpec::pcr()};
  std::vector<long long> m_grid{256, 512, 1024, 2048, 4096, 8192};
  int replicates = 10;
  std::uint64_t seed = 0;
  double c_xi = 1.0;
  double beta_z = 3.5, p_z = 0.5;  // xi = c_xi m^{-1/(beta_z + p_z)}
  unsigned threads = 0;
};

struct SaturationRecord {
  std::string filter;
  long long m = 0;
  double xi = 0.0;
  int replicate = 0;
  double stage1_l2 = 0.0;
};

struct SaturationReport {
  SaturationStudyConfig config;
  std::vector<double> xi;
  // filters x |m_grid| mean errors, and one slope per filter.
  std::vector<std::vector<double>> mean_error;
  std::vector<SlopeFit> fits;
  std::vector<SaturationRecord> records;  // filter-major, then grid, then replicate
};

inline SaturationReport run_saturation_study(const DiscreteInstance& inst, const SaturationStudyConfig& cfg) {
  require_grid(cfg.m_grid, 4, "saturation study");
  require(cfg.replicates >= 1, "saturation study: replicates must be >= 1");
  require(!cfg.filters.empty(), "saturation study: no filters given");
  require(cfg.beta_z > 0.0 && cfg.p_z > 0.0 && cfg.c_xi > 0.0, "saturation study: invalid xi schedule");
  SaturationReport rep;
  rep.config = cfg;
  for (long long m : cfg.m_grid)
    rep.xi.push_back(cfg.c_xi * std::pow(static_cast<double>(m), -1.0 / (cfg.beta_z + cfg.p_z)));
  const std::size_t nf = cfg.filters.size(), grid = cfg.m_grid.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  rep.records.resize(nf * grid * reps);
  const GroupedEstimator est(inst);
  // One draw per (m, replicate), shared by every filter.
  parallel_for(grid * reps, cfg.threads, [&](std::size_t k) {
    const std::size_t g = k / reps, r = k % reps;
    const CountSample s = sample_discrete_counts(inst, cfg.m_grid[g], 1, cfg.seed, {g, r});
    for (std::size_t f = 0; f < nf; ++f) {
      SaturationRecord& rec = rep.records[(f * grid + g) * reps + r];
      rec.filter = cfg.filters[f].name();
      rec.m = cfg.m_grid[g];
      rec.xi = rep.xi[g];
      rec.replicate = static_cast<int>(r);
      rec.stage1_l2 = stage1_l2_error(est.stage1_weights(s.stage1, cfg.filters[f], rec.xi), inst);
    }
  });
  std::vector<double> ms(cfg.m_grid.begin(), cfg.m_grid.end());
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> mean(grid, 0.0);
    for (std::size_t g = 0; g < grid; ++g)
      for (std::size_t r = 0; r < reps; ++r)
        mean[g] += rep.records[(f * grid + g) * reps + r].stage1_l2 / static_cast<double>(reps);
    rep.fits.push_back(fit_decay_slope(ms, mean));
    rep.mean_error.push_back(std::move(mean));
  }
  return rep;
}

}  // namespace kiv
