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

#include <map>
#include <string>

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/filters.hpp"
#include "kiv/kernels.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

/// Eigendecomposition of K_ZZ / m for a stage-1 sample, reusable across a
/// sweep of xi values.
struct Stage1Spectrum {
  Points z_points;
  Points x_points;
  KernelSpec kernel_z;
  KernelSpec kernel_x;
  linalg::SymEigen eig;

  Eigen::Index m() const { return z_points.rows(); }
};

inline Stage1Spectrum stage1_spectrum(const Points& z, const Points& x, const KernelSpec& kernel_z,
                                      const KernelSpec& kernel_x) {
  require(z.rows() >= 1, "fit_stage1: need at least one stage-1 sample");
  require(z.rows() == x.rows(), "fit_stage1: z and x sample counts differ");
  const auto m = static_cast<double>(z.rows());
  const Eigen::MatrixXd k = gram(kernel_z, z) / m;
  return {z, x, kernel_z, kernel_x, linalg::psd_eigen(k, kernel_z.kappa_sq(), "stage-1 Gram")};
}

/// Fitted conditional mean embedding F_xi(z) = sum_i w_i(z) phi_X(x_i) with
/// w(z) = dual * k_Z(z_i, z) and dual = g_xi(K_ZZ / m) / m.
struct Stage1Model {
  Points z_points;
  Points x_points;
  Eigen::MatrixXd dual;
  double xi = 0.0;
  KernelSpec kernel_z;
  KernelSpec kernel_x;
  FilterSpec filter;

  Eigen::Index m() const { return z_points.rows(); }
};

inline void check_landweber_step(const FilterSpec& filter, double kappa_sq) {
  if (filter.kind == FilterKind::landweber && filter.step_tau * kappa_sq > 1.0 + 1e-12)
    throw ValidationError("landweber: step_tau * kappa_sq(Z) = " + std::to_string(filter.step_tau * kappa_sq) +
                          " exceeds 1");
}

inline Stage1Model fit_stage1(const Stage1Spectrum& spec, const FilterSpec& filter, double xi) {
  require(xi > 0.0, "fit_stage1: xi must be positive");
  check_landweber_step(filter, spec.kernel_z.kappa_sq());
  const auto m = static_cast<double>(spec.m());
  Eigen::MatrixXd dual = filter_psd(filter, spec.eig, xi, spec.kernel_z.kappa_sq()) / m;
  return {spec.z_points, spec.x_points, std::move(dual), xi, spec.kernel_z, spec.kernel_x, filter};
}

inline Stage1Model fit_stage1(const Points& z, const Points& x, const KernelSpec& kernel_z,
                              const KernelSpec& kernel_x, const FilterSpec& filter, double xi) {
  require(xi > 0.0, "fit_stage1: xi must be positive");
  check_landweber_step(filter, kernel_z.kappa_sq());
  return fit_stage1(stage1_spectrum(z, x, kernel_z, kernel_x), filter, xi);
}

/// m x q weight matrix; column j expresses F_xi(z_query[j]) over the stage-1 x points.
inline Eigen::MatrixXd embed_weights(const Stage1Model& model, const Points& z_query) {
  if (z_query.rows() == 0) return Eigen::MatrixXd(model.m(), 0);
  return model.dual * gram(model.kernel_z, model.z_points, z_query);
}

namespace detail {

// Stage-1 points of an oracle-backed model are atom indices.
inline Eigen::Index atom_index(double v, Eigen::Index size, const char* what) {
  const auto idx = static_cast<Eigen::Index>(std::llround(v));
  if (v != static_cast<double>(idx) || idx < 0 || idx >= size)
    throw ValidationError(std::string(what) + ": point " + std::to_string(v) + " is not an atom of the instance support");
  return idx;
}

}  // namespace detail

/// Weights of F_xi(z) for every Z atom, summed per X atom (d_x x d_z).
inline Eigen::MatrixXd aggregate_weights(const Stage1Model& model, const DiscreteInstance& inst) {
  require(model.x_points.cols() == 1 && model.z_points.cols() == 1,
          "stage1_l2_error: model points must be 1-d atom indices");
  const Eigen::MatrixXd w = embed_weights(model, inst.z_points());
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(inst.dx(), inst.dz());
  for (Eigen::Index i = 0; i < model.m(); ++i) {
    const Eigen::Index x = detail::atom_index(model.x_points(i, 0), inst.dx(), "stage1_l2_error");
    agg.row(x) += w.row(i);
  }
  return agg;
}

/// Exact ||F_xi - F*||^2 in L2(Z; H_X) from aggregated weights.
inline double stage1_l2_error(const Eigen::MatrixXd& agg_weights, const DiscreteInstance& inst) {
  require(agg_weights.rows() == inst.dx() && agg_weights.cols() == inst.dz(),
          "stage1_l2_error: weight matrix does not match the instance support");
  const Eigen::MatrixXd diff = agg_weights - inst.cond().transpose();
  const Eigen::MatrixXd kd = inst.gram_x() * diff;
  double err = 0.0;
  for (Eigen::Index z = 0; z < inst.dz(); ++z) err += inst.pi_z()[z] * diff.col(z).dot(kd.col(z));
  return std::max(0.0, err);
}

inline double stage1_l2_error(const Stage1Model& model, const DiscreteInstance& inst) {
  return stage1_l2_error(aggregate_weights(model, inst), inst);
}

}  // namespace kiv
