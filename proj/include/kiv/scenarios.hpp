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
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/grouped.hpp"
#include "kiv/kernels.hpp"

namespace kiv {

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Independent generator for (seed, path...). Streams with different paths do
/// not share state, so replicate r of a study is reproducible on its own.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = seed;
  for (std::uint64_t p : path) {
    std::uint64_t mix = p ^ 0xd1b54a32d192ed03ULL;
    state = splitmix64(state) ^ splitmix64(mix);
  }
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

enum Stream : std::uint64_t { kStage1 = 1, kStage2 = 2 };

/// Multinomial(total, probs) via sequential conditional binomials.
inline Eigen::VectorXd multinomial(Rng& rng, long long total, const Eigen::Ref<const Eigen::VectorXd>& probs) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(probs.size());
  double mass = probs.sum();
  long long left = total;
  for (Eigen::Index k = 0; k < probs.size() && left > 0; ++k) {
    if (k == probs.size() - 1) {
      out[k] = static_cast<double>(left);
      break;
    }
    const double p = mass > 0.0 ? std::clamp(probs[k] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<long long> bin(left, p);
    const long long draw = bin(rng);
    out[k] = static_cast<double>(draw);
    left -= draw;
    mass -= probs[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling from discrete instances

/// D1 = {(z_i, x_i)}_{i<m}, D2 = {(z_j, y_j)}_{j<n}; points are atom indices.
struct DiscreteSample {
  Points z1, x1;
  Points z2;
  Eigen::VectorXd y2;
};

/// Z ~ pi_Z, X | Z ~ cond for D1; Y = (T h0)(Z) + N(0, sigma(Z)^2) for D2,
/// so E[Y | Z] = T h0 (Z). D1 and D2 come from separate streams.
inline DiscreteSample sample_discrete(const DiscreteInstance& inst, long long m, long long n, std::uint64_t seed) {
  require(m >= 1 && n >= 1, "sample_discrete: m and n must be >= 1");
  std::discrete_distribution<Eigen::Index> z_dist(inst.pi_z().data(), inst.pi_z().data() + inst.dz());
  std::vector<std::discrete_distribution<Eigen::Index>> x_dist;
  x_dist.reserve(static_cast<std::size_t>(inst.dz()));
  for (Eigen::Index z = 0; z < inst.dz(); ++z) {
    const Eigen::VectorXd row = inst.cond().row(z).transpose();
    x_dist.emplace_back(row.data(), row.data() + row.size());
  }
  DiscreteSample s;
  s.z1.resize(m, 1);
  s.x1.resize(m, 1);
  Rng r1 = make_stream(seed, {kStage1});
  for (long long i = 0; i < m; ++i) {
    const Eigen::Index z = z_dist(r1);
    s.z1(i, 0) = static_cast<double>(z);
    s.x1(i, 0) = static_cast<double>(x_dist[static_cast<std::size_t>(z)](r1));
  }
  s.z2.resize(n, 1);
  s.y2.resize(n);
  Rng r2 = make_stream(seed, {kStage2});
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (long long j = 0; j < n; ++j) {
    const Eigen::Index z = z_dist(r2);
    s.z2(j, 0) = static_cast<double>(z);
    s.y2[j] = inst.r0()[z] + inst.sigma()[z] * gauss(r2);
  }
  return s;
}

/// Same law as sample_discrete, drawn directly as atom counts and y sums.
inline CountSample sample_discrete_counts(const DiscreteInstance& inst, long long m, long long n, std::uint64_t seed,
                                          std::initializer_list<std::uint64_t> path = {}) {
  require(m >= 1 && n >= 1, "sample_discrete_counts: m and n must be >= 1");
  auto stream = [&](std::uint64_t tag) {
    std::uint64_t s = seed;
    for (std::uint64_t p : path) {
      std::uint64_t mix = p + 0x632be59bd9b4e019ULL;
      s = splitmix64(s) ^ splitmix64(mix);
    }
    return make_stream(s, {tag});
  };
  CountSample cs;
  Rng r1 = stream(kStage1);
  const Eigen::VectorXd cz = multinomial(r1, m, inst.pi_z());
  cs.stage1 = Eigen::MatrixXd::Zero(inst.dx(), inst.dz());
  for (Eigen::Index z = 0; z < inst.dz(); ++z)
    if (cz[z] > 0) cs.stage1.col(z) = multinomial(r1, static_cast<long long>(cz[z]), inst.cond().row(z).transpose());
  Rng r2 = stream(kStage2);
  cs.stage2_count = multinomial(r2, n, inst.pi_z());
  cs.stage2_ysum.resize(inst.dz());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index z = 0; z < inst.dz(); ++z) {
    const double c = cs.stage2_count[z];
    cs.stage2_ysum[z] = c * inst.r0()[z] + (c > 0 ? std::sqrt(c) * inst.sigma()[z] * gauss(r2) : 0.0);
  }
  return cs;
}

// ---------------------------------------------------------------------------
// Instance catalogue

/// Three X atoms, two Z atoms, rank-2 T with null space (1, -1, 1):
/// h0 = (2, -1, 0), h* = (1, 0, -1).
inline DiscreteInstance reference_instance(double sigma = 1.0) {
  InstanceData d;
  d.name = "reference";
  d.pi_z = Eigen::Vector2d(0.5, 0.5);
  d.cond.resize(2, 3);
  d.cond << 0.5, 0.5, 0.0, 0.0, 0.5, 0.5;
  d.h0 = Eigen::Vector3d(2.0, -1.0, 0.0);
  d.sigma = Eigen::VectorXd::Constant(2, sigma);
  return DiscreteInstance(std::move(d));
}

/// X = Z on d atoms with uniform mass.
inline DiscreteInstance identity_instance(Eigen::Index d, Eigen::MatrixXd gram_x, Eigen::VectorXd h0, double sigma,
                                          std::string name = "identity") {
  InstanceData inst;
  inst.name = std::move(name);
  inst.pi_z = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  inst.cond = Eigen::MatrixXd::Identity(d, d);
  inst.h0 = std::move(h0);
  inst.sigma = Eigen::VectorXd::Constant(d, sigma);
  inst.gram_z = gram_x;
  inst.gram_x = std::move(gram_x);
  return DiscreteInstance(std::move(inst));
}

/// Signed frequency of DFT index j on d points.
inline double dft_frequency(Eigen::Index j, Eigen::Index d) {
  return static_cast<double>(j <= d / 2 ? j : j - d);
}

/// Circulant Gram on Z_d with K[a, b] = sum_j mu_j cos(2 pi j (a - b) / d).
/// Under the uniform law the covariance K / d has eigenvalues mu_j.
inline Eigen::MatrixXd circulant_gram(const Eigen::Ref<const Eigen::VectorXd>& mu) {
  const Eigen::Index d = mu.size();
  Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j)
      row[k] += mu[j] * std::cos(2.0 * std::numbers::pi * dft_frequency(j, d) * static_cast<double>(k) /
                                 static_cast<double>(d));
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) g(a, b) = row[((a - b) % d + d) % d];
  return g;
}

/// Probability row on Z_d with real Fourier coefficients c_hat (c_hat[0] = 1).
inline Eigen::VectorXd circulant_row(const Eigen::Ref<const Eigen::VectorXd>& c_hat) {
  const Eigen::Index d = c_hat.size();
  Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index j = 0; j < d; ++j)
      row[k] += c_hat[j] * std::cos(2.0 * std::numbers::pi * dft_frequency(j, d) * static_cast<double>(k) /
                                    static_cast<double>(d));
    row[k] /= static_cast<double>(d);
  }
  require((row.array() >= -1e-12).all(), "circulant_row: coefficients do not give a probability vector");
  row = row.cwiseMax(0.0);
  return row / row.sum();
}

inline Eigen::MatrixXd circulant_from_row(const Eigen::Ref<const Eigen::VectorXd>& row) {
  const Eigen::Index d = row.size();
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index z = 0; z < d; ++z)
    for (Eigen::Index x = 0; x < d; ++x) c(z, x) = row[((x - z) % d + d) % d];
  return c;
}

/// Rate-study instance: X = Z on a 200-cycle, Fourier spectrum mu_j = 0.5 / (1 + |j|)
/// (p_X ~ 1), and an h0 whose coefficients sit at the beta_X = 1 boundary.
inline DiscreteInstance rate_instance(Eigen::Index d = 200, double sigma = 1.0, std::uint64_t phase_seed = 5) {
  Eigen::VectorXd mu(d);
  for (Eigen::Index j = 0; j < d; ++j) mu[j] = 0.5 / (1.0 + std::abs(dft_frequency(j, d)));
  Rng rng = make_stream(phase_seed, {0x68300ULL});
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXd h0 = Eigen::VectorXd::Zero(d);
  for (Eigen::Index j = 1; j < d / 2; ++j) {
    const double amp = std::sqrt(mu[j] / 0.5) / std::sqrt(static_cast<double>(j));
    const double ph = phase(rng);
    for (Eigen::Index x = 0; x < d; ++x)
      h0[x] += amp * std::cos(2.0 * std::numbers::pi * static_cast<double>(j * x) / static_cast<double>(d) + ph);
  }
  return identity_instance(d, circulant_gram(mu), std::move(h0), sigma, "rate");
}

/// Stage-1 saturation instance: circulant conditional law with Fourier
/// coefficients (1 + |j|)^-4, K_X = I and K_Z with spectrum 0.5 (1 + |j|)^-2.
/// The embedding is far smoother than Tikhonov's qualification can exploit.
inline DiscreteInstance saturation_instance(Eigen::Index d = 51) {
  Eigen::VectorXd c_hat(d), mu_z(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double f = std::abs(dft_frequency(j, d));
    c_hat[j] = std::pow(1.0 + f, -4.0);
    mu_z[j] = 0.5 * std::pow(1.0 + f, -2.0);
  }
  InstanceData inst;
  inst.name = "saturation";
  inst.pi_z = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  inst.cond = circulant_from_row(circulant_row(c_hat));
  inst.h0 = Eigen::VectorXd::Zero(d);
  inst.gram_z = circulant_gram(mu_z);
  return DiscreteInstance(std::move(inst));
}

/// Instance with C_F = C_X^2 exactly: lazy-walk conditional law on a d-cycle
/// (c_hat_j = 0.6 + 0.4 cos(2 pi j / d)) and K_X with Fourier spectrum
/// d |c_hat_j|^2 off the constant mode, 0 on it.
inline DiscreteInstance link_square_instance(Eigen::Index d = 7) {
  require(d >= 3 && d % 2 == 1, "link_square_instance: d must be odd and >= 3");
  Eigen::VectorXd c_hat(d), mu(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    c_hat[j] = 0.6 + 0.4 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(d));
    mu[j] = j == 0 ? 0.0 : c_hat[j] * c_hat[j];
  }
  InstanceData inst;
  inst.name = "link-square";
  inst.pi_z = Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
  inst.cond = circulant_from_row(circulant_row(c_hat));
  inst.gram_x = circulant_gram(mu);
  // h0 in the range of K_X (orthogonal to constants).
  inst.h0 = inst.gram_x.col(0);
  return DiscreteInstance(std::move(inst));
}

/// Random instance for property checks: Dirichlet(1) rows and pi_Z, K_X = B B^T
/// normalised to max diagonal 0.9, Gaussian h0.
inline DiscreteInstance random_instance(Rng& rng, Eigen::Index dx, Eigen::Index dz, double sigma = 1.0) {
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  InstanceData d;
  d.name = "random";
  d.pi_z.resize(dz);
  for (Eigen::Index z = 0; z < dz; ++z) d.pi_z[z] = expo(rng) + 1e-3;
  d.pi_z /= d.pi_z.sum();
  d.cond.resize(dz, dx);
  for (Eigen::Index z = 0; z < dz; ++z) {
    for (Eigen::Index x = 0; x < dx; ++x) d.cond(z, x) = expo(rng);
    d.cond.row(z) /= d.cond.row(z).sum();
  }
  Eigen::MatrixXd b(dx, dx);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = gauss(rng);
  Eigen::MatrixXd k = b * b.transpose() + 0.05 * Eigen::MatrixXd::Identity(dx, dx);
  k *= 0.9 / k.diagonal().maxCoeff();
  d.gram_x = 0.5 * (k + k.transpose());
  d.h0.resize(dx);
  for (Eigen::Index x = 0; x < dx; ++x) d.h0[x] = gauss(rng);
  d.sigma = Eigen::VectorXd::Constant(dz, sigma);
  return DiscreteInstance(std::move(d));
}

// ---------------------------------------------------------------------------
// Continuous confounded design

struct ContinuousDemoParams {
  long long n = 1000;
  long long m = 1000;
  std::uint64_t seed = 0;
  double confounding_strength = 1.0;
};

/// h0 on [-3, 3]: ln(|16u - 8| + 1) sign(u - 0.5) with u = (x + 3) / 6.
inline double demo_h0(double x) {
  const double u = (x + 3.0) / 6.0;
  const double s = u > 0.5 ? 1.0 : (u < 0.5 ? -1.0 : 0.0);
  return std::log(std::abs(16.0 * u - 8.0) + 1.0) * s;
}

/// Smooth clip to (-3, 3).
inline double softclip(double t) { return 3.0 * std::tanh(t / 3.0); }

struct ContinuousDemo {
  Points z1, x1;
  Points z2, x2;
  Eigen::VectorXd y2;
  double (*h0)(double) = &demo_h0;
};

/// Z ~ U[-3, 3], V ~ N(0, 1), X = softclip(Z + V), U = s V + N(0, 0.1^2),
/// Y = h0(X) + U. E[U | Z] = 0 while U and X are correlated through V.
inline ContinuousDemo continuous_demo(const ContinuousDemoParams& p) {
  require(p.n >= 1 && p.m >= 1, "continuous_demo: sizes must be >= 1");
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ContinuousDemo out;
  auto draw = [&](Rng& rng, long long count, Points& z, Points& x, Eigen::VectorXd* y) {
    z.resize(count, 1);
    x.resize(count, 1);
    if (y) y->resize(count);
    for (long long i = 0; i < count; ++i) {
      const double zi = unif(rng);
      const double v = gauss(rng);
      const double xi = softclip(zi + v);
      const double u = p.confounding_strength * v + 0.1 * gauss(rng);
      z(i, 0) = zi;
      x(i, 0) = xi;
      if (y) (*y)[i] = demo_h0(xi) + u;
    }
  };
  Rng r1 = make_stream(p.seed, {kStage1});
  draw(r1, p.m, out.z1, out.x1, nullptr);
  Rng r2 = make_stream(p.seed, {kStage2});
  draw(r2, p.n, out.z2, out.x2, &out.y2);
  return out;
}

}  // namespace kiv
