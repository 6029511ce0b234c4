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
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "kiv/error.hpp"
#include "kiv/linalg.hpp"

namespace kiv {

enum class KernelFamily { gaussian, laplace, matern, linear, precomputed };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::matern: return "matern";
    case KernelFamily::linear: return "linear";
    case KernelFamily::precomputed: return "precomputed";
  }
  return "?";
}

/// A positive-definite kernel with its almost-sure bound kappa_sq >= k(x, x).
///
/// Stationary families are normalised so k(x, x) = 1. The `precomputed`
/// family indexes a fixed finite point set: each point is a 1-d row holding
/// an integer index into the stored Gram matrix.
class KernelSpec {
 public:
  static KernelSpec gaussian(double lengthscale) { return stationary(KernelFamily::gaussian, lengthscale); }
  static KernelSpec laplace(double lengthscale) { return stationary(KernelFamily::laplace, lengthscale); }

  /// `order` must be one of 0.5, 1.5, 2.5.
  static KernelSpec matern(double order, double lengthscale) {
    require(order == 0.5 || order == 1.5 || order == 2.5,
            "matern kernel: order must be 1/2, 3/2 or 5/2 (got " + std::to_string(order) + ")");
    KernelSpec k = stationary(KernelFamily::matern, lengthscale);
    k.order_ = order;
    return k;
  }

  /// Dot-product kernel; kappa_sq bounds ||x||^2 over the data and is enforced.
  static KernelSpec linear(double kappa_sq = 1.0) {
    require(kappa_sq > 0.0, "linear kernel: kappa_sq must be positive");
    KernelSpec k;
    k.family_ = KernelFamily::linear;
    k.kappa_sq_ = kappa_sq;
    return k;
  }

  static KernelSpec precomputed(Eigen::MatrixXd gram) {
    require(gram.rows() >= 1, "precomputed kernel: empty Gram matrix");
    linalg::check_symmetric(gram, "precomputed kernel");
    KernelSpec k;
    k.family_ = KernelFamily::precomputed;
    k.kappa_sq_ = gram.diagonal().maxCoeff();
    require(k.kappa_sq_ > 0.0, "precomputed kernel: Gram diagonal must be positive somewhere");
    // Throws on eigenvalues below -1e-10 * kappa_sq.
    linalg::psd_eigen(gram, k.kappa_sq_, "precomputed kernel");
    k.gram_ = std::make_shared<const Eigen::MatrixXd>(0.5 * (gram + gram.transpose()));
    return k;
  }

  KernelFamily family() const { return family_; }
  double lengthscale() const { return lengthscale_; }
  double matern_order() const { return order_; }
  double kappa_sq() const { return kappa_sq_; }
  const Eigen::MatrixXd& gram() const {
    require(gram_ != nullptr, "kernel has no stored Gram matrix");
    return *gram_;
  }
  Eigen::Index support_size() const { return gram_ ? gram_->rows() : 0; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (family_ == KernelFamily::precomputed) return (*gram_)(index_of(x), index_of(y));
    if (x.size() != y.size())
      throw ValidationError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                            std::to_string(y.size()) + ")");
    switch (family_) {
      case KernelFamily::gaussian: {
        const double r2 = (x - y).squaredNorm();
        return std::exp(-r2 / (2.0 * lengthscale_ * lengthscale_));
      }
      case KernelFamily::laplace: return std::exp(-(x - y).norm() / lengthscale_);
      case KernelFamily::matern: return matern_value((x - y).norm() / lengthscale_);
      case KernelFamily::linear: {
        const double v = x.dot(y);
        if (x.squaredNorm() > kappa_sq_ * (1.0 + 1e-12) || y.squaredNorm() > kappa_sq_ * (1.0 + 1e-12))
          throw ValidationError("linear kernel: point norm exceeds the declared kappa_sq bound");
        return v;
      }
      case KernelFamily::precomputed: break;
    }
    return 0.0;
  }

 private:
  KernelSpec() = default;

  static KernelSpec stationary(KernelFamily f, double lengthscale) {
    require(lengthscale > 0.0 && std::isfinite(lengthscale),
            std::string(to_string(f)) + " kernel: lengthscale must be positive");
    KernelSpec k;
    k.family_ = f;
    k.lengthscale_ = lengthscale;
    k.kappa_sq_ = 1.0;
    return k;
  }

  double matern_value(double r) const {
    if (order_ == 0.5) return std::exp(-r);
    if (order_ == 1.5) {
      const double s = std::sqrt(3.0) * r;
      return (1.0 + s) * std::exp(-s);
    }
    const double s = std::sqrt(5.0) * r;
    return (1.0 + s + s * s / 3.0) * std::exp(-s);
  }

  Eigen::Index index_of(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    if (p.size() != 1) throw ValidationError("precomputed kernel: points must be 1-d indices");
    const double v = p[0];
    const auto idx = static_cast<Eigen::Index>(std::llround(v));
    if (v != static_cast<double>(idx) || idx < 0 || idx >= gram_->rows())
      throw ValidationError("precomputed kernel: index " + std::to_string(v) + " out of range [0, " +
                            std::to_string(gram_->rows()) + ")");
    return idx;
  }

  KernelFamily family_ = KernelFamily::gaussian;
  double lengthscale_ = 1.0;
  double order_ = 1.5;
  double kappa_sq_ = 1.0;
  std::shared_ptr<const Eigen::MatrixXd> gram_;
};

inline double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  return k(x, y);
}

/// Index points 0..n-1 as a column, for use with precomputed kernels.
inline Points index_points(Eigen::Index n) {
  Points p(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) p(i, 0) = static_cast<double>(i);
  return p;
}

/// M[i, j] = k(rows[i], cols[j]). Column counts must match.
inline Eigen::MatrixXd gram(const KernelSpec& k, const Points& rows, const Points& cols) {
  require(rows.rows() >= 1 && cols.rows() >= 1, "gram: empty point list");
  require(rows.cols() == cols.cols(), "gram: point dimension mismatch");
  Eigen::MatrixXd m(rows.rows(), cols.rows());
  for (Eigen::Index j = 0; j < cols.rows(); ++j)
    for (Eigen::Index i = 0; i < rows.rows(); ++i) m(i, j) = k(rows.row(i).transpose(), cols.row(j).transpose());
  return m;
}

/// Symmetric Gram: upper triangle evaluated, lower mirrored (exact symmetry).
inline Eigen::MatrixXd gram(const KernelSpec& k, const Points& pts) {
  require(pts.rows() >= 1, "gram: empty point list");
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = k(pts.row(i).transpose(), pts.row(j).transpose());
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace kiv
