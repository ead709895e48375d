// Copyright 2026 The synthaug Authors. All Rights Reserved.
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

#include "synthaug/metrics/fid.hpp"

#include <cmath>
#include <sstream>

#include "synthaug/common/error.hpp"
#include "synthaug/common/util.hpp"

namespace synthaug::metrics {

GaussianStats gaussian_stats(const Eigen::MatrixXd& features, bool unbiased) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw ArgumentError("gaussian_stats needs at least 2 samples, got " + std::to_string(n));
  GaussianStats s;
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.sigma = (centered.transpose() * centered) / double(unbiased ? n - 1 : n);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
  return s;
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols()) throw ArgumentError("matrix_sqrt_psd: matrix is not square");
  if (m.size() == 0) return m;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > sym_tol * scale) {
    std::ostringstream os;
    os << "matrix_sqrt_psd: input is not symmetric (max |m - m^T| = " << asym << ")";
    throw ArgumentError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double fid(const GaussianStats& real, const GaussianStats& synth) {
  if (real.dim() != synth.dim() || real.sigma.rows() != real.dim() || synth.sigma.rows() != synth.dim()) {
    throw ArgumentError("fid: dimension mismatch (" + std::to_string(real.dim()) + " vs " +
                        std::to_string(synth.dim()) + ")");
  }
  const double mean_term = (real.mu - synth.mu).squaredNorm();
  const Eigen::MatrixXd root_r = matrix_sqrt_psd(real.sigma, 1e-6);
  Eigen::MatrixXd inner = root_r * synth.sigma * root_r;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = mean_term + real.sigma.trace() + synth.sigma.trace() - 2.0 * cross;
  if (value < 0.0) {
    if (value < -1e-6) {
      std::ostringstream os;
      os << "fid: clamped negative value " << value << " to 0";
      log_warn(os.str());
    }
    return 0.0;
  }
  return value;
}

}  // namespace synthaug::metrics
