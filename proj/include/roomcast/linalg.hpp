/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include "roomcast/common.hpp"

namespace roomcast::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct OlsFit {
  Vector coefficients;
  Vector residuals;
  double ssr = 0.0;      ///< residual sum of squares
  Matrix xtx_inverse;    ///< (X'X)^-1, for standard errors
  std::size_t nobs = 0;
};

/// Ordinary least squares through a column-pivoted QR; rank deficiency is a
/// NumericError.
inline OlsFit ols(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw NumericError("ols: dimension mismatch");
  if (x.rows() < x.cols()) throw NumericError("ols: fewer observations than regressors");
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < x.cols()) throw NumericError("ols: singular regression matrix");
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;
  fit.ssr = fit.residuals.squaredNorm();
  fit.nobs = static_cast<std::size_t>(x.rows());
  // R^-1 R^-T, permuted back.
  const auto k = x.cols();
  const Matrix r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Matrix r_inv = r.template triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
  const Matrix inv_perm = r_inv * r_inv.transpose();
  fit.xtx_inverse = qr.colsPermutation() * inv_perm * qr.colsPermutation().transpose();
  return fit;
}

/// Solves the symmetric positive (semi)definite system a * x = b. A singular
/// matrix is a NumericError.
inline Vector solve_symmetric(const Matrix& a, const Vector& b) {
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericError("solve: factorization failed");
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const auto d = ldlt.vectorD();
  if (d.size() > 0 && d.cwiseAbs().minCoeff() <= 1e-12 * scale)
    throw NumericError("solve: singular system");
  Vector x = ldlt.solve(b);
  if (!x.allFinite()) throw NumericError("solve: non-finite solution");
  return x;
}

}  // namespace roomcast::linalg
