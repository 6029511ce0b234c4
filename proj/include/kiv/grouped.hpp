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

#include <Eigen/Dense>

#include "kiv/discrete.hpp"
#include "kiv/error.hpp"
#include "kiv/filters.hpp"
#include "kiv/linalg.hpp"
#include "kiv/stage1.hpp"

namespace kiv {

/// Sufficient statistics of a two-stage sample from a discrete instance.
struct CountSample {
  Eigen::MatrixXd stage1;        // d_x x d_z: #{i : x_i = x, z_i = z}
  Eigen::VectorXd stage2_count;  // d_z
  Eigen::VectorXd stage2_ysum;   // d_z: sum of y over stage-2 draws at z

  double m() const { return stage1.sum(); }
  double n() const { return stage2_count.sum(); }
};

/// Closed-form estimator evaluated on atom counts instead of raw samples.
///
/// With S the one-hot stage-1 design and A = S K_Z^{1/2} / sqrt(m),
/// g(A A^T) A = A g(A^T A), so the per-atom sums of the stage-1 weights are
///   W = N K_Z^{1/2} g(K_Z^{1/2} diag(c) K_Z^{1/2} / m) K_Z^{1/2} / m,
/// identical to summing the columns of g(K/m) K_{Z z} / m over duplicate points.
/// Stage 2 is then solved in the d_x-dimensional primal
///   ((1/n) W diag(n_z) W^T K_X + lambda I) beta = W s / n,   h = K_X beta.
class GroupedEstimator {
 public:
  explicit GroupedEstimator(const DiscreteInstance& inst)
      : inst_(&inst), kz_half_(linalg::psd_sqrt(inst.gram_z())) {}

  const DiscreteInstance& instance() const { return *inst_; }

  /// d_x x d_z aggregated stage-1 weights.
  Eigen::MatrixXd stage1_weights(const Eigen::MatrixXd& counts, const FilterSpec& filter, double xi) const {
    require(counts.rows() == inst_->dx() && counts.cols() == inst_->dz(), "grouped: count matrix shape mismatch");
    const double m = counts.sum();
    require(m >= 1.0, "grouped: need at least one stage-1 sample");
    require(xi > 0.0, "grouped: xi must be positive");
    const double kappa = inst_->kernel_z().kappa_sq();
    check_landweber_step(filter, kappa);
    const Eigen::VectorXd c = counts.colwise().sum().transpose();
    Eigen::MatrixXd mm = kz_half_ * c.asDiagonal() * kz_half_ / m;
    mm = 0.5 * (mm + mm.transpose());
    const Eigen::MatrixXd g = filter_psd(filter, linalg::psd_eigen(mm, kappa, "grouped stage-1"), xi, kappa);
    return counts * kz_half_ * g * kz_half_ / m;
  }

  /// Structural-function values on the X support.
  Eigen::VectorXd stage2_fit(const Eigen::MatrixXd& weights, const Eigen::VectorXd& count, const Eigen::VectorXd& ysum,
                             double lambda) const {
    require(lambda > 0.0, "grouped: lambda must be positive");
    require(count.size() == inst_->dz() && ysum.size() == inst_->dz(), "grouped: stage-2 statistics shape mismatch");
    const double n = count.sum();
    require(n >= 1.0, "grouped: need at least one stage-2 sample");
    const Eigen::MatrixXd g = weights * count.asDiagonal() * weights.transpose();
    Eigen::MatrixXd a = g * inst_->gram_x() / n;
    a.diagonal().array() += lambda;
    const Eigen::VectorXd beta = a.partialPivLu().solve(weights * ysum / n);
    return inst_->gram_x() * beta;
  }

  Eigen::VectorXd fit(const CountSample& s, const FilterSpec& filter, double xi, double lambda) const {
    return stage2_fit(stage1_weights(s.stage1, filter, xi), s.stage2_count, s.stage2_ysum, lambda);
  }

 private:
  const DiscreteInstance* inst_;
  Eigen::MatrixXd kz_half_;
};

}  // namespace kiv
