// Copyright 2026 The cbfqp Authors
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

#include "cbfqp/lqr.hpp"

#include <algorithm>
#include <complex>
#include <sstream>

#include "cbfqp/errors.hpp"

namespace cbfqp {
namespace {

double care_residual(const Matrix& A, const Matrix& S, const Matrix& Q,
                     const Matrix& P) {
  return (A.transpose() * P + P * A - P * S * P + Q).norm();
}

// Solves A^T X + X A = -C through the Kronecker form. Only used for the
// small systems this library targets.
Matrix lyapunov(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix L = Matrix::Zero(n * n, n * n);
  // vec(A^T X) = (I kron A^T) vec(X); vec(X A) = (A^T kron I) vec(X)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      L.block(i * n, j * n, n, n) += I(i, j) * A.transpose();
      L.block(i * n, j * n, n, n) += A(j, i) * I;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(C.data(), n * n);
  const Vector x = L.partialPivLu().solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

}  // namespace

int controllability_rank(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  Matrix C(n, n * B.cols());
  Matrix block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    C.middleCols(i * B.cols(), B.cols()) = block;
    block = A * block;
  }
  Eigen::FullPivLU<Matrix> lu(C);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

double spectral_abscissa(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                        const Matrix& R, double tol) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw ConstructionError("solve_care: dimension mismatch");
  }
  if (controllability_rank(A, B) < n) {
    throw ConstructionError("solve_care: (A, B) is not controllable");
  }
  Eigen::LLT<Matrix> r_llt(R);
  if (r_llt.info() != Eigen::Success) {
    throw ConstructionError("solve_care: R is not positive definite");
  }
  const Matrix S = B * r_llt.solve(B.transpose());

  Matrix Hm(2 * n, 2 * n);
  Hm << A, -S, -Q, -A.transpose();
  Eigen::ComplexEigenSolver<Matrix> es(Hm);
  if (es.info() != Eigen::Success) {
    throw EvaluationError("solve_care: Hamiltonian eigen-decomposition failed");
  }
  Eigen::MatrixXcd U(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < 2 * n && k < n; ++i) {
    if (es.eigenvalues()[i].real() < 0.0) U.col(k++) = es.eigenvectors().col(i);
  }
  if (k != n) {
    throw EvaluationError(
        "solve_care: Hamiltonian has eigenvalues on the imaginary axis");
  }
  const Eigen::MatrixXcd Pc =
      U.bottomRows(n) * U.topRows(n).partialPivLu().inverse();
  Matrix P = Pc.real();
  P = 0.5 * (P + P.transpose());

  CareSolution out;
  const double scale = std::max(Q.norm(), 1e-300);
  out.residual_history.push_back(care_residual(A, S, Q, P));
  for (int it = 0; it < 20; ++it) {
    const Matrix K = r_llt.solve(B.transpose() * P);
    const Matrix Acl = A - B * K;
    if (spectral_abscissa(Acl) >= 0.0) break;
    const Matrix next = lyapunov(Acl, Q + K.transpose() * R * K);
    const double res = care_residual(A, S, Q, next);
    if (!(res < out.residual_history.back())) break;
    P = next;
    out.residual_history.push_back(res);
    if (res <= 1e-14 * scale) break;
  }
  out.P = P;
  out.K = r_llt.solve(B.transpose() * P);
  out.residual = out.residual_history.back();
  if (!(out.residual <= tol * scale)) {
    std::ostringstream os;
    os << "solve_care: residual did not converge; history:";
    for (double r : out.residual_history) os << ' ' << r;
    throw EvaluationError(os.str());
  }
  return out;
}

}  // namespace cbfqp
