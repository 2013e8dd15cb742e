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

#pragma once

#include <vector>

#include "cbfqp/system_model.hpp"

namespace cbfqp {

struct CareSolution {
  Matrix P;
  Matrix K;  // R^{-1} B^T P
  double residual = 0.0;  // ||A^T P + P A - P B R^{-1} B^T P + Q||_F
  std::vector<double> residual_history;
};

// Continuous-time algebraic Riccati equation via the stable invariant
// subspace of the Hamiltonian, refined with Newton-Kleinman steps.
// Throws ConstructionError if (A, B) is not controllable and
// EvaluationError (with the residual history) if the residual stays above
// tol * ||Q||_F.
CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                        const Matrix& R, double tol = 1e-6);

// Largest real part of the eigenvalues of M.
double spectral_abscissa(const Matrix& M);

int controllability_rank(const Matrix& A, const Matrix& B);

}  // namespace cbfqp
