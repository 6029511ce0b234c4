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
#include <string>

#include <Eigen/Dense>

#include "kiv/error.hpp"

namespace kiv {

// Rows are points.
using Points = Eigen::MatrixXd;

namespace linalg {

inline constexpr double kPsdClampTol = 1e-10;
inline constexpr double kAsymmetryTol = 1e-10;
inline constexpr double kRankCutoff = 1e-10;

// Eigendecomposition of a symmetric PSD matrix, eigenvalues ascending.
struct SymEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  Eigen::Index size() const { return values.size(); }

  template <class F>
  Eigen::MatrixXd apply(F&& f) const {
    Eigen::VectorXd g = values.unaryExpr(f);
    return vectors * g.asDiagonal() * vectors.transpose();
  }
};

inline double max_abs_diag(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.diagonal().cwiseAbs().maxCoeff();
}

inline void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols())
    throw ValidationError(std::string(what) + ": matrix is not square (" + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()) + ")");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTol * scale)
    throw ValidationError(std::string(what) + ": matrix is not symmetric (max |M - M^T| = " +
                          std::to_string(asym) + ")");
}

// Eigenvalues in [-tol*scale, 0) are clamped to zero; anything more negative
// is a PSD violation. `scale` defaults to the largest diagonal magnitude.
inline SymEigen psd_eigen(const Eigen::MatrixXd& m, double scale = -1.0, const char* what = "psd_eigen") {
  check_symmetric(m, what);
  if (scale < 0.0) scale = max_abs_diag(m);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigensolver failed");
  SymEigen out{es.eigenvalues(), es.eigenvectors()};
  const double floor = -kPsdClampTol * scale;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    double& v = out.values[i];
    if (v < 0.0) {
      if (v < floor)
        throw NumericalError(std::string(what) + ": matrix is not positive semi-definite (eigenvalue " +
                             std::to_string(v) + ")");
      v = 0.0;
    }
  }
  return out;
}

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  return psd_eigen(m, -1.0, "psd_sqrt").apply([](double v) { return std::sqrt(v); });
}

// Moore-Penrose pseudo-inverse with relative singular-value cutoff.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_cutoff = kRankCutoff) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut = rel_cutoff * (s.size() ? s[0] : 0.0);
  Eigen::VectorXd inv = s.unaryExpr([cut](double v) { return v > cut ? 1.0 / v : 0.0; });
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline Eigen::Index numerical_rank(const Eigen::MatrixXd& a, double rel_cutoff = kRankCutoff) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cut = rel_cutoff * s[0];
  return (s.array() > cut).count();
}

}  // namespace linalg
}  // namespace kiv
