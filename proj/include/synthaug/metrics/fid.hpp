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

#pragma once

#include <Eigen/Dense>

namespace synthaug::metrics {

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;

  int dim() const { return static_cast<int>(mu.size()); }
};

// Rows are samples. Covariance divides by n-1 when unbiased, else by n.
GaussianStats gaussian_stats(const Eigen::MatrixXd& features, bool unbiased = true);

// Symmetric eigendecomposition with negative eigenvalues clamped to zero.
// Raises ArgumentError when m deviates from symmetry by more than sym_tol
// (relative to its largest entry).
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m, double sym_tol = 1e-9);

// ||mu_r - mu_s||^2 + tr(S_r) + tr(S_s) - 2 tr((S_r S_s)^{1/2}), where the
// last trace is taken as tr(sqrt(sqrt(S_r) S_s sqrt(S_r))). Tiny negative
// results are clamped to 0.
double fid(const GaussianStats& real, const GaussianStats& synth);

}  // namespace synthaug::metrics
