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

#include <cmath>

#include <gtest/gtest.h>

#include "kiv/kernels.hpp"
#include "kiv/linalg.hpp"
#include "test_util.hpp"

namespace kiv {
namespace {

Eigen::VectorXd pt(std::initializer_list<double> v) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

TEST(KernelEval, GaussianAtZeroDistanceIsOne) {
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::gaussian(1.0), pt({0.0}), pt({0.0})), 1.0);
}

TEST(KernelEval, GaussianHalfHeight) {
  EXPECT_NEAR(kernel_eval(KernelSpec::gaussian(1.0), pt({0.0}), pt({std::sqrt(2.0 * std::log(2.0))})), 0.5, 1e-15);
}

TEST(KernelEval, LinearIsDotProduct) {
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::linear(10.0), pt({1.0, 2.0}), pt({3.0, -1.0})), 1.0);
}

TEST(KernelEval, ClosedFormsAtUnitDistance) {
  EXPECT_NEAR(kernel_eval(KernelSpec::laplace(1.0), pt({0.0}), pt({1.0})), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(kernel_eval(KernelSpec::matern(0.5, 1.0), pt({0.0}), pt({1.0})), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(kernel_eval(KernelSpec::matern(1.5, 1.0), pt({0.0}), pt({1.0})), 0.4833577245965077, 1e-15);
  EXPECT_NEAR(kernel_eval(KernelSpec::matern(2.5, 1.0), pt({0.0}), pt({1.0})), 0.5239941088318203, 1e-15);
}

TEST(KernelEval, Symmetric) {
  Rng rng = make_stream(1, {});
  const Points p = testing::random_points(rng, 10, 3);
  for (const KernelSpec& k : {KernelSpec::gaussian(0.7), KernelSpec::laplace(1.3), KernelSpec::matern(2.5, 0.4)})
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.rows(); ++j)
        EXPECT_EQ(k(p.row(i).transpose(), p.row(j).transpose()), k(p.row(j).transpose(), p.row(i).transpose()));
}

TEST(KernelEval, Errors) {
  EXPECT_THROW(kernel_eval(KernelSpec::gaussian(1.0), pt({0.0}), pt({0.0, 1.0})), ValidationError);
  const KernelSpec pre = KernelSpec::precomputed(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(pre(pt({3.0}), pt({0.0})), ValidationError);
  EXPECT_THROW(pre(pt({0.5}), pt({0.0})), ValidationError);
  EXPECT_THROW(KernelSpec::linear(1.0)(pt({1.0, 1.0}), pt({0.0, 0.0})), ValidationError);
  EXPECT_THROW(KernelSpec::gaussian(0.0), ValidationError);
  EXPECT_THROW(KernelSpec::matern(1.0, 1.0), ValidationError);
}

TEST(KernelSpecTest, PrecomputedValidation) {
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(KernelSpec::precomputed(asym), ValidationError);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(KernelSpec::precomputed(indefinite), NumericalError);
  Eigen::MatrixXd g(2, 2);
  g << 2.0, 1.0, 1.0, 0.5;
  EXPECT_DOUBLE_EQ(KernelSpec::precomputed(g).kappa_sq(), 2.0);
}

TEST(Gram, SinglePoint) {
  const Eigen::MatrixXd g = gram(KernelSpec::gaussian(1.0), Points::Zero(1, 1));
  ASSERT_EQ(g.rows(), 1);
  EXPECT_EQ(g(0, 0), 1.0);
}

TEST(Gram, ExactlySymmetricWithBoundedEntries) {
  Rng rng = make_stream(2, {});
  for (int trial = 0; trial < 5; ++trial) {
    const Points p = testing::random_points(rng, 25, 2);
    for (const KernelSpec& k : {KernelSpec::gaussian(0.5), KernelSpec::laplace(2.0), KernelSpec::matern(1.5, 1.0)}) {
      const Eigen::MatrixXd g = gram(k, p);
      EXPECT_TRUE((g.array() == g.transpose().array()).all());
      EXPECT_LE(g.diagonal().maxCoeff(), k.kappa_sq() + 1e-12);
      EXPECT_GE(g.minCoeff(), 0.0);
      EXPECT_LE(g.maxCoeff(), 1.0);
    }
  }
}

TEST(Gram, LaplacePsdOnRandomPoints) {
  Rng rng = make_stream(3, {});
  const Points p = testing::random_points(rng, 20, 1);
  const Eigen::MatrixXd g = gram(KernelSpec::laplace(1.0), p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Gram, RectangularMatchesPointwise) {
  Rng rng = make_stream(4, {});
  const Points a = testing::random_points(rng, 4, 2), b = testing::random_points(rng, 3, 2);
  const KernelSpec k = KernelSpec::gaussian(0.8);
  const Eigen::MatrixXd g = gram(k, a, b);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(g(i, j), k(a.row(i).transpose(), b.row(j).transpose()));
}

TEST(Gram, RejectsEmptyAndMismatchedInputs) {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  EXPECT_THROW(gram(k, Points(0, 1)), ValidationError);
  EXPECT_THROW(gram(k, Points::Zero(2, 1), Points(0, 1)), ValidationError);
  EXPECT_THROW(gram(k, Points::Zero(2, 1), Points::Zero(2, 2)), ValidationError);
}

TEST(Linalg, PsdClampAndRejection) {
  Eigen::MatrixXd m = Eigen::Vector2d(1.0, -5e-11).asDiagonal();
  const linalg::SymEigen e = linalg::psd_eigen(m, 1.0);
  EXPECT_EQ(e.values.minCoeff(), 0.0);
  m(1, 1) = -1e-6;
  EXPECT_THROW(linalg::psd_eigen(m, 1.0), NumericalError);
}

}  // namespace
}  // namespace kiv
