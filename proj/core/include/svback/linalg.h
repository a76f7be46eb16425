// Copyright 2026 The svback Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVBACK_LINALG_H_
#define SVBACK_LINALG_H_

#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace svback {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// (A + A^T) / 2.
Matrix symmetrize(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol);
bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

// Cholesky factorization of a symmetric matrix. If the plain factorization
// fails, retries once with eps * (trace / D) * I added to the diagonal.
// Throws Error naming `what` when both attempts fail.
Eigen::LLT<Matrix> factor_spd(const Matrix& a, std::string_view what,
                              double eps = 1e-10);

// Strict check: Cholesky succeeds without jitter.
bool is_spd(const Matrix& a);

double log_det(const Eigen::LLT<Matrix>& llt);

// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
Matrix spd_inverse(const Matrix& a, std::string_view what);

// Extreme eigenvalues of a symmetric matrix.
double min_eigenvalue(const Matrix& a);
double max_eigenvalue(const Matrix& a);

}  // namespace svback

#endif  // SVBACK_LINALG_H_
