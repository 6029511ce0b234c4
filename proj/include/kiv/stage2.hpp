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
#include <iostream>
#include <limits>

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/kernels.hpp"
#include "kiv/stage1.hpp"

namespace kiv {

/// h(x) = sum_i alpha_i k_X(x_i, x) over the stage-1 x points.
struct NpivEstimator {
  Points anchors;
  KernelSpec kernel_x;
  Eigen::VectorXd alpha;
  double lambda = 0.0;
  double xi = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index n = 0;

  Eigen::VectorXd predict(const Points& x_query) const {
    if (x_query.rows() == 0) return Eigen::VectorXd(0);
    return gram(kernel_x, x_query, anchors) * alpha;
  }

  double rkhs_norm_sq() const { return std::max(0.0, alpha.dot(gram(kernel_x, anchors) * alpha)); }
};

inline Eigen::VectorXd predict(const NpivEstimator& est, const Points& x_query) { return est.predict(x_query); }

namespace detail {

// Solves (S) c = y for SPD S; one retry with 1e-10 * trace / n on the diagonal.
inline Eigen::VectorXd spd_solve(Eigen::MatrixXd s, const Eigen::VectorXd& y, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-10 * s.trace() / static_cast<double>(s.rows());
    std::clog << "kiv: " << what << ": Cholesky failed, retrying with diagonal jitter " << jitter << "\n";
    s.diagonal().array() += jitter;
    llt.compute(s);
    if (llt.info() != Eigen::Success)
      throw NumericalError(std::string(what) + ": system is not positive definite (upstream PSD violation?)");
  }
  return llt.solve(y);
}

}  // namespace detail

/// Stage-2 Tikhonov fit from embedding weights J (m x n, column j = F(z_j)):
///   alpha = J [J^T K_XX J + n lambda I]^{-1} y.
inline NpivEstimator fit_npiv_weights(const Points& anchors, const KernelSpec& kernel_x, const Eigen::MatrixXd& j,
                                      const Eigen::VectorXd& y, double lambda) {
  require(lambda > 0.0, "fit_npiv: lambda must be positive");
  require(y.size() >= 1, "fit_npiv: need at least one stage-2 sample");
  require(j.cols() == y.size(), "fit_npiv: weight columns and y length differ");
  require(j.rows() == anchors.rows(), "fit_npiv: weight rows and anchor count differ");
  const auto n = static_cast<double>(y.size());
  const Eigen::MatrixXd kxx = gram(kernel_x, anchors);
  Eigen::MatrixXd s = j.transpose() * kxx * j;
  s = 0.5 * (s + s.transpose());
  s.diagonal().array() += n * lambda;
  const Eigen::VectorXd c = detail::spd_solve(std::move(s), y, "fit_npiv");
  NpivEstimator est{anchors, kernel_x, j * c, lambda, std::numeric_limits<double>::quiet_NaN(), y.size()};
  return est;
}

inline NpivEstimator fit_npiv(const Stage1Model& model, const Points& z, const Eigen::VectorXd& y, double lambda) {
  require(z.rows() == y.size(), "fit_npiv: z and y sample counts differ");
  require(z.rows() >= 1, "fit_npiv: need at least one stage-2 sample");
  NpivEstimator est = fit_npiv_weights(model.x_points, model.kernel_x, embed_weights(model, z), y, lambda);
  est.xi = model.xi;
  return est;
}

/// Kernel ridge regression in H_F, k_F(z, z') = <F*(z), F*(z')>_{H_X}, using the
/// true conditional law; the exact-stage-1 reference for fit_npiv.
/// Returns an estimator anchored on the X support atoms.
inline NpivEstimator krr_in_HF_oracle(const DiscreteInstance& inst, const Points& z, const Eigen::VectorXd& y,
                                      double lambda) {
  require(lambda > 0.0, "krr_in_HF_oracle: lambda must be positive");
  require(z.rows() == y.size() && z.rows() >= 1, "krr_in_HF_oracle: z and y sample counts differ or are empty");
  require(z.cols() == 1, "krr_in_HF_oracle: z points must be atom indices");
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd p(n, inst.dx());  // row j = p(. | z_j)
  for (Eigen::Index j = 0; j < n; ++j)
    p.row(j) = inst.cond().row(detail::atom_index(z(j, 0), inst.dz(), "krr_in_HF_oracle"));
  const Eigen::MatrixXd kp = inst.gram_x() * p.transpose();  // column j = F*(z_j) evaluated on the support
  Eigen::MatrixXd kf = p * kp;
  kf = 0.5 * (kf + kf.transpose());
  kf.diagonal().array() += static_cast<double>(n) * lambda;
  const Eigen::VectorXd c = detail::spd_solve(std::move(kf), y, "krr_in_HF_oracle");
  // h = sum_j c_j F*(z_j) = K_X P^T c, so the anchor coefficients are P^T c.
  NpivEstimator est{inst.x_points(), inst.kernel_x(), p.transpose() * c, lambda, 0.0, n};
  return est;
}

/// Plain kernel ridge regression of y on x (the confounded baseline).
inline NpivEstimator fit_kernel_ridge(const KernelSpec& kernel, const Points& x, const Eigen::VectorXd& y,
                                      double lambda) {
  require(lambda > 0.0, "fit_kernel_ridge: lambda must be positive");
  require(x.rows() == y.size() && x.rows() >= 1, "fit_kernel_ridge: x and y sample counts differ or are empty");
  Eigen::MatrixXd k = gram(kernel, x);
  k.diagonal().array() += static_cast<double>(x.rows()) * lambda;
  return {x, kernel, detail::spd_solve(std::move(k), y, "fit_kernel_ridge"), lambda,
          std::numeric_limits<double>::quiet_NaN(), x.rows()};
}

}  // namespace kiv
