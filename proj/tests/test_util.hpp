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

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "kiv/kernels.hpp"
#include "kiv/scenarios.hpp"

namespace kiv::testing {

inline Eigen::MatrixXd random_psd(Rng& rng, Eigen::Index d, Eigen::Index rank = -1) {
  if (rank < 0) rank = d;
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd b(d, rank);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = g(rng);
  Eigen::MatrixXd m = b * b.transpose() / static_cast<double>(std::max<Eigen::Index>(rank, 1));
  return 0.5 * (m + m.transpose());
}

inline Points random_points(Rng& rng, Eigen::Index n, Eigen::Index dim, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Points p(n, dim);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Atom counts of a per-sample discrete draw.
inline CountSample counts_of(const DiscreteInstance& inst, const DiscreteSample& s) {
  CountSample c;
  c.stage1 = Eigen::MatrixXd::Zero(inst.dx(), inst.dz());
  for (Eigen::Index i = 0; i < s.z1.rows(); ++i)
    c.stage1(static_cast<Eigen::Index>(s.x1(i, 0)), static_cast<Eigen::Index>(s.z1(i, 0))) += 1.0;
  c.stage2_count = Eigen::VectorXd::Zero(inst.dz());
  c.stage2_ysum = Eigen::VectorXd::Zero(inst.dz());
  for (Eigen::Index j = 0; j < s.z2.rows(); ++j) {
    const auto z = static_cast<Eigen::Index>(s.z2(j, 0));
    c.stage2_count[z] += 1.0;
    c.stage2_ysum[z] += s.y2[j];
  }
  return c;
}

}  // namespace kiv::testing
