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
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kiv/error.hpp"
#include "kiv/kernels.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

/// Raw description of a finite-support NPIV population. Atoms are addressed
/// by index; the support vectors only carry display labels.
struct InstanceData {
  std::string name = "instance";
  Eigen::VectorXd x_labels;  // empty: 0..d_x-1
  Eigen::VectorXd z_labels;  // empty: 0..d_z-1
  Eigen::VectorXd pi_z;
  Eigen::MatrixXd cond;      // d_z x d_x, cond(z, x) = P(X = x | Z = z)
  Eigen::VectorXd h0;
  Eigen::VectorXd sigma;     // noise sd per Z atom; empty: all zero
  Eigen::MatrixXd gram_x;    // empty: identity
  Eigen::MatrixXd gram_z;    // empty: identity
};

/// A validated discrete instance together with its exact derived quantities:
/// pi_X, r0 = T h0 and the minimum-norm solution h*.
class DiscreteInstance {
 public:
  explicit DiscreteInstance(InstanceData d) : d_(std::move(d)) {
    const Eigen::Index dz = d_.cond.rows(), dx = d_.cond.cols();
    require(dx >= 1 && dz >= 1, "instance: cond must be non-empty");
    require(d_.pi_z.size() == dz, "instance: pi_z length must equal the number of cond rows");
    require(d_.h0.size() == dx, "instance: h0 length must equal the number of cond columns");
    require((d_.pi_z.array() >= 0.0).all(), "instance: pi_z entries must be nonnegative");
    require(std::abs(d_.pi_z.sum() - 1.0) <= 1e-12, "instance: pi_z must sum to 1");
    require((d_.cond.array() >= 0.0).all(), "instance: cond entries must be nonnegative");
    for (Eigen::Index z = 0; z < dz; ++z)
      require(std::abs(d_.cond.row(z).sum() - 1.0) <= 1e-12,
              "instance: cond row " + std::to_string(z) + " must sum to 1");
    if (d_.x_labels.size() == 0) d_.x_labels = Eigen::VectorXd::LinSpaced(dx, 0.0, static_cast<double>(dx - 1));
    if (d_.z_labels.size() == 0) d_.z_labels = Eigen::VectorXd::LinSpaced(dz, 0.0, static_cast<double>(dz - 1));
    require(d_.x_labels.size() == dx && d_.z_labels.size() == dz, "instance: support label lengths mismatch");
    if (d_.sigma.size() == 0) d_.sigma = Eigen::VectorXd::Zero(dz);
    require(d_.sigma.size() == dz && (d_.sigma.array() >= 0.0).all(),
            "instance: sigma must have one nonnegative entry per Z atom");
    if (d_.gram_x.size() == 0) d_.gram_x = Eigen::MatrixXd::Identity(dx, dx);
    if (d_.gram_z.size() == 0) d_.gram_z = Eigen::MatrixXd::Identity(dz, dz);
    require(d_.gram_x.rows() == dx && d_.gram_x.cols() == dx, "instance: gram_x must be d_x x d_x");
    require(d_.gram_z.rows() == dz && d_.gram_z.cols() == dz, "instance: gram_z must be d_z x d_z");
    kernel_x_ = KernelSpec::precomputed(d_.gram_x);
    kernel_z_ = KernelSpec::precomputed(d_.gram_z);
    d_.gram_x = kernel_x_->gram();
    d_.gram_z = kernel_z_->gram();

    gram_x_pinv_ = linalg::pinv(d_.gram_x);
    pi_x_ = d_.cond.transpose() * d_.pi_z;
    r0_ = d_.cond * d_.h0;
    h_star_ = compute_min_norm();
  }

  const InstanceData& data() const { return d_; }
  const std::string& name() const { return d_.name; }
  Eigen::Index dx() const { return d_.cond.cols(); }
  Eigen::Index dz() const { return d_.cond.rows(); }
  const Eigen::VectorXd& pi_z() const { return d_.pi_z; }
  const Eigen::VectorXd& pi_x() const { return pi_x_; }
  const Eigen::MatrixXd& cond() const { return d_.cond; }
  const Eigen::VectorXd& h0() const { return d_.h0; }
  const Eigen::VectorXd& sigma() const { return d_.sigma; }
  const Eigen::MatrixXd& gram_x() const { return d_.gram_x; }
  const Eigen::MatrixXd& gram_z() const { return d_.gram_z; }
  const KernelSpec& kernel_x() const { return *kernel_x_; }
  const KernelSpec& kernel_z() const { return *kernel_z_; }
  const Eigen::MatrixXd& gram_x_pinv() const { return gram_x_pinv_; }
  const Eigen::VectorXd& r0() const { return r0_; }
  const Eigen::VectorXd& h_star() const { return h_star_; }
  Points x_points() const { return index_points(dx()); }
  Points z_points() const { return index_points(dz()); }

 private:
  // v* = K T^T (T K T^T)^+ r0 over the Z atoms with positive mass.
  Eigen::VectorXd compute_min_norm() const {
    std::vector<Eigen::Index> active;
    for (Eigen::Index z = 0; z < dz(); ++z)
      if (d_.pi_z[z] > 0.0) active.push_back(z);
    Eigen::MatrixXd t(static_cast<Eigen::Index>(active.size()), dx());
    Eigen::VectorXd r(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      t.row(i) = d_.cond.row(active[static_cast<std::size_t>(i)]);
      r[i] = r0_[active[static_cast<std::size_t>(i)]];
    }
    const Eigen::MatrixXd ktt = d_.gram_x * t.transpose();
    const Eigen::VectorXd v = ktt * (linalg::pinv(t * ktt) * r);
    const double resid = (t * v - r).norm();
    if (resid > 1e-8 * std::max(1.0, r.norm()))
      throw NumericalError("min_norm_solution: constraint T v = r0 infeasible (residual " + std::to_string(resid) +
                           "); h0 may have a component outside the RKHS");
    return v;
  }

  InstanceData d_;
  std::optional<KernelSpec> kernel_x_, kernel_z_;
  Eigen::MatrixXd gram_x_pinv_;
  Eigen::VectorXd pi_x_, r0_, h_star_;
};

/// T as a d_z x d_x matrix: (T h)(z) = sum_x cond(z, x) h(x).
inline const Eigen::MatrixXd& operator_T(const DiscreteInstance& inst) { return inst.cond(); }

inline const Eigen::VectorXd& min_norm_solution(const DiscreteInstance& inst) { return inst.h_star(); }

struct Spectra {
  Eigen::VectorXd eig_x;  // descending, nonzero
  Eigen::VectorXd eig_f;
};

namespace detail {

inline Eigen::VectorXd nonzero_descending(const linalg::SymEigen& e) {
  std::vector<double> v(e.values.data(), e.values.data() + e.values.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  const double top = v.empty() ? 0.0 : v.front();
  std::vector<double> keep;
  for (double x : v)
    if (x > 1e-12 * top && x > 0.0) keep.push_back(x);
  return Eigen::Map<Eigen::VectorXd>(keep.data(), static_cast<Eigen::Index>(keep.size()));
}

}  // namespace detail

/// C_X and C_F conjugated by K_X^{1/2}, so their eigenvalues are the
/// H_X-operator spectra.
struct CovarianceOperators {
  Eigen::MatrixXd c_x;
  Eigen::MatrixXd c_f;
};

inline CovarianceOperators covariance_operators(const DiscreteInstance& inst) {
  const Eigen::MatrixXd kh = linalg::psd_sqrt(inst.gram_x());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(inst.dx(), inst.dx());
  for (Eigen::Index z = 0; z < inst.dz(); ++z) {
    const Eigen::VectorXd p = inst.cond().row(z).transpose();
    b.noalias() += inst.pi_z()[z] * p * p.transpose();
  }
  CovarianceOperators ops;
  ops.c_x = kh * inst.pi_x().asDiagonal() * kh;
  ops.c_f = kh * b * kh;
  ops.c_x = 0.5 * (ops.c_x + ops.c_x.transpose());
  ops.c_f = 0.5 * (ops.c_f + ops.c_f.transpose());
  return ops;
}

inline Spectra covariance_spectra(const DiscreteInstance& inst) {
  const CovarianceOperators ops = covariance_operators(inst);
  return {detail::nonzero_descending(linalg::psd_eigen(ops.c_x, -1.0, "C_X")),
          detail::nonzero_descending(linalg::psd_eigen(ops.c_f, -1.0, "C_F"))};
}

/// Smoothness metadata a scenario may attach; not estimated from the instance.
struct SmoothnessMeta {
  double beta_x = 1.0, p_x = 1.0, beta_z = 1.0, p_z = 1.0, alpha_z = 1.0;
};

struct InstanceTheory {
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  int c_f = 0;
  Eigen::VectorXd eig_x;
  Eigen::VectorXd eig_f;
  // C_X and C_F do not commute, so the paired-eigenvalue envelope only
  // approximates the operator inequalities.
  bool shared_basis_approximation = false;
  std::optional<SmoothnessMeta> smoothness;
};

/// Certified envelopes over paired sorted eigenvalues (i < rank C_F):
///   gamma1 = largest g with mu_F,i <= mu_X,i^g,  gamma0 = smallest g with mu_X,i^g <= mu_F,i.
inline InstanceTheory link_parameters(const DiscreteInstance& inst) {
  const CovarianceOperators ops = covariance_operators(inst);
  InstanceTheory th;
  th.eig_x = detail::nonzero_descending(linalg::psd_eigen(ops.c_x, -1.0, "C_X"));
  th.eig_f = detail::nonzero_descending(linalg::psd_eigen(ops.c_f, -1.0, "C_F"));
  require(th.eig_x.size() >= 2 && th.eig_f.size() >= 2,
          "link_parameters: need at least two nonzero eigenvalues in C_X and C_F");
  require(th.eig_x[0] < 1.0, "link_parameters: C_X has an eigenvalue >= 1 (" + std::to_string(th.eig_x[0]) +
                                 "); rescale K_X so the log-ratio diagnostic is defined");
  th.c_f = th.eig_f.size() < th.eig_x.size() ? 1 : 0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index i = 0; i < th.eig_f.size(); ++i) {
    const double ratio = std::log(th.eig_f[i]) / std::log(th.eig_x[i]);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  th.gamma1 = std::max(1.0, lo);
  th.gamma0 = std::max(th.gamma1, hi);
  const Eigen::MatrixXd comm = ops.c_x * ops.c_f - ops.c_f * ops.c_x;
  th.shared_basis_approximation = comm.norm() > 1e-9 * std::max(1e-300, ops.c_x.norm() * ops.c_f.norm());
  return th;
}

/// N(lambda) = sum_i mu_i / (mu_i + lambda).
inline double effective_dimension(const Eigen::Ref<const Eigen::VectorXd>& eigs, double lambda) {
  require(lambda > 0.0, "effective_dimension: lambda must be positive");
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) s += eigs[i] / (eigs[i] + lambda);
  return s;
}

struct ExactErrors {
  double l2x = 0.0;     // ||h - h*||^2 in L2(pi_X)
  double pseudo = 0.0;  // ||T (h - h*)||^2 in L2(pi_Z)
  double rkhs = 0.0;    // ||h - h*||^2 in H_X
};

inline ExactErrors exact_errors(const DiscreteInstance& inst, const Eigen::Ref<const Eigen::VectorXd>& h,
                                const Eigen::Ref<const Eigen::VectorXd>& reference) {
  require(h.size() == inst.dx() && reference.size() == inst.dx(), "exact_errors: dimension mismatch");
  const Eigen::VectorXd d = h - reference;
  ExactErrors e;
  e.l2x = inst.pi_x().dot(d.cwiseProduct(d));
  const Eigen::VectorXd td = inst.cond() * d;
  e.pseudo = inst.pi_z().dot(td.cwiseProduct(td));
  e.rkhs = d.dot(inst.gram_x_pinv() * d);
  return e;
}

inline ExactErrors exact_errors(const DiscreteInstance& inst, const Eigen::Ref<const Eigen::VectorXd>& h) {
  return exact_errors(inst, h, inst.h_star());
}

}  // namespace kiv
