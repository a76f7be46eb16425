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

#include "svback/linalg.h"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "svback/error.h"

namespace svback {

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

Eigen::LLT<Matrix> factor_spd(const Matrix& a, std::string_view what,
                              double eps) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw Error(std::string(what) + ": matrix is not square");
  if (!a.allFinite())
    throw Error(std::string(what) + ": matrix has non-finite entries");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;

  const double scale = a.trace() / static_cast<double>(a.rows());
  if (scale > 0.0) {
    Matrix jittered = a;
    jittered.diagonal().array() += eps * scale;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw Error(std::string(what) +
              ": matrix is not positive definite (Cholesky failed after "
              "jitter; trace/D = " + std::to_string(scale) + ")");
}

bool is_spd(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0 || !a.allFinite()) return false;
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  const Matrix& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) sum += std::log(l(i, i));
  return 2.0 * sum;
}

Matrix spd_inverse(const Matrix& a, std::string_view what) {
  const auto llt = factor_spd(a, what);
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace svback
