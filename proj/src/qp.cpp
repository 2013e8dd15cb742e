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

#include "cbfqp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbfqp/errors.hpp"

namespace cbfqp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Clamp used by the closed form: r for r <= 0, zero otherwise.
double omega(double r) { return r > 0.0 ? 0.0 : r; }

Eigen::LLT<Matrix> factor(const Matrix& H) {
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    throw ConstructionError("QP cost matrix is not positive definite");
  }
  return llt;
}

std::string condition_warning(const QpProblem& p) {
  const double cond = p.condition_number();
  if (cond >= 1e12) {
    std::ostringstream os;
    os << "warning: cost matrix condition number " << cond;
    return os.str();
  }
  return {};
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kDegenerate:
      return "degenerate";
  }
  return "unknown";
}

QpProblem::QpProblem(Matrix H, Vector F)
    : H_(std::move(H)), F_(std::move(F)), A_(0, H_.cols()), b_(0) {
  if (H_.rows() == 0 || H_.rows() != H_.cols() || F_.size() != H_.rows()) {
    throw ConstructionError("QP: inconsistent cost dimensions");
  }
  if (!H_.allFinite() || !F_.allFinite()) {
    throw ConstructionError("QP: non-finite cost");
  }
  const double scale = std::max(H_.cwiseAbs().maxCoeff(), 1e-300);
  if ((H_ - H_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConstructionError("QP: cost matrix is not symmetric");
  }
  factor(H_);
}

void QpProblem::add_row(const Vector& a, double b) {
  if (a.size() != dim()) throw ConstructionError("QP: row dimension mismatch");
  if (!a.allFinite() || !std::isfinite(b)) {
    throw ConstructionError("QP: non-finite constraint row");
  }
  A_.conservativeResize(A_.rows() + 1, Eigen::NoChange);
  A_.row(A_.rows() - 1) = a.transpose();
  b_.conservativeResize(b_.size() + 1);
  b_[b_.size() - 1] = b;
}

double QpProblem::condition_number() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H_, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return ev.maxCoeff() / ev.minCoeff();
}

GramData assemble_h_inner_product(const QpProblem& problem) {
  if (problem.num_rows() != 2) {
    throw ConstructionError("closed form requires exactly two rows");
  }
  const auto llt = factor(problem.H());
  const Vector y1 = problem.row(0);
  const Vector y2 = problem.row(1);
  GramData g;
  g.u_bar = -llt.solve(problem.F());
  g.y_bar1 = llt.solve(y1);
  g.y_bar2 = llt.solve(y2);
  g.p_bar1 = problem.b()[0] - y1.dot(g.u_bar);
  g.p_bar2 = problem.b()[1] - y2.dot(g.u_bar);
  // <y_bar_i, y_bar_j> = y_bar_i' H y_bar_j = y_i' H^{-1} y_j
  g.G(0, 0) = y1.dot(g.y_bar1);
  g.G(1, 1) = y2.dot(g.y_bar2);
  g.G(0, 1) = 0.5 * (y1.dot(g.y_bar2) + y2.dot(g.y_bar1));
  g.G(1, 0) = g.G(0, 1);
  return g;
}

ClosedFormBranch select_branch(const GramData& gram) {
  const auto& G = gram.G;
  if (G(1, 0) * omega(gram.p_bar2) - G(1, 1) * gram.p_bar1 < 0.0) {
    return ClosedFormBranch::kFirstInactive;
  }
  if (G(0, 1) * omega(gram.p_bar1) - G(0, 0) * gram.p_bar2 < 0.0) {
    return ClosedFormBranch::kSecondInactive;
  }
  return ClosedFormBranch::kBothActive;
}

Eigen::Vector2d branch_multipliers(const GramData& gram,
                                   ClosedFormBranch branch) {
  const auto& G = gram.G;
  switch (branch) {
    case ClosedFormBranch::kFirstInactive:
      return {0.0, omega(gram.p_bar2) / G(1, 1)};
    case ClosedFormBranch::kSecondInactive:
      return {omega(gram.p_bar1) / G(0, 0), 0.0};
    case ClosedFormBranch::kBothActive: {
      const double det = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
      return {omega(G(1, 1) * gram.p_bar1 - G(1, 0) * gram.p_bar2) / det,
              omega(G(0, 0) * gram.p_bar2 - G(0, 1) * gram.p_bar1) / det};
    }
  }
  return Eigen::Vector2d::Zero();
}

QpSolution solve_two_constraint_closed_form(const QpProblem& problem) {
  const GramData gram = assemble_h_inner_product(problem);
  QpSolution sol;
  sol.diagnostics = condition_warning(problem);
  const auto& G = gram.G;
  const double det = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
  const double trace = G(0, 0) + G(1, 1);
  if (!(std::abs(det) > 1e-12 * trace * trace / 4.0)) {
    sol.status = QpStatus::kDegenerate;
    sol.z = gram.u_bar;
    sol.multipliers = Vector::Zero(2);
    sol.diagnostics += (sol.diagnostics.empty() ? "" : "; ");
    sol.diagnostics += "rows dependent under the H inner product";
    return sol;
  }
  const Eigen::Vector2d lambda = branch_multipliers(gram, select_branch(gram));
  sol.z = gram.u_bar + lambda[0] * gram.y_bar1 + lambda[1] * gram.y_bar2;
  sol.multipliers = lambda;
  for (int i = 0; i < 2; ++i) {
    if (lambda[i] < 0.0) sol.active_set.push_back(i);
  }
  sol.status = QpStatus::kOptimal;
  return sol;
}

QpSolution solve_active_set(const QpProblem& problem,
                            const ActiveSetOptions& options) {
  const int n = problem.dim();
  const int m = problem.num_rows();
  const auto llt = factor(problem.H());

  // Work with unit-length rows; multipliers are rescaled on exit.
  Matrix A = problem.A();
  Vector b = problem.b();
  Vector row_norm(m);
  for (int i = 0; i < m; ++i) {
    row_norm[i] = A.row(i).norm();
    if (row_norm[i] > 0.0) {
      A.row(i) /= row_norm[i];
      b[i] /= row_norm[i];
    }
  }
  const Matrix HinvAt = llt.solve(A.transpose());  // n x m

  QpSolution sol;
  sol.diagnostics = condition_warning(problem);
  Vector z = -llt.solve(problem.F());
  Vector mu = Vector::Zero(m);  // >= 0, stationarity Hz + F + A'mu = 0
  std::vector<int> active;
  const double feas_tol = 1e-12;

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.z = z;
    sol.multipliers = Vector::Zero(m);
    for (int i = 0; i < m; ++i) {
      if (row_norm[i] > 0.0) sol.multipliers[i] = -mu[i] / row_norm[i];
    }
    sol.active_set = active;
    std::sort(sol.active_set.begin(), sol.active_set.end());
    return sol;
  };

  // Zero rows: feasible iff b >= 0.
  for (int i = 0; i < m; ++i) {
    if (row_norm[i] == 0.0 && problem.b()[i] < 0.0) {
      sol.infeasibility_certificate = Vector::Zero(m);
      sol.infeasibility_certificate[i] = 1.0;
      sol.diagnostics += "row " + std::to_string(i) + " reads 0 <= negative";
      return finish(QpStatus::kInfeasible);
    }
  }

  int iterations = 0;
  while (true) {
    // Most violated inactive row; ties resolve to the lowest index.
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (row_norm[i] == 0.0) continue;
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = A.row(i).dot(z) - b[i];
      if (s > feas_tol * (1.0 + std::abs(b[i])) && s > worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      sol.iterations = iterations;
      return finish(QpStatus::kOptimal);
    }

    double mu_p = 0.0;
    while (true) {
      if (++iterations > options.max_iterations) {
        sol.iterations = iterations;
        sol.diagnostics += (sol.diagnostics.empty() ? "" : "; ");
        sol.diagnostics += "iteration cap " +
                           std::to_string(options.max_iterations) +
                           " exceeded with " + std::to_string(active.size()) +
                           " active rows";
        return finish(QpStatus::kDegenerate);
      }
      const int q = static_cast<int>(active.size());
      const Vector ap = A.row(p).transpose();
      Vector d = HinvAt.col(p);  // primal direction: z <- z - t d
      Vector r = Vector::Zero(q);  // dual direction: mu_W <- mu_W - t r
      if (q > 0) {
        Matrix N(n, q);
        Matrix HinvN(n, q);
        for (int j = 0; j < q; ++j) {
          N.col(j) = A.row(active[j]).transpose();
          HinvN.col(j) = HinvAt.col(active[j]);
        }
        const Matrix M = N.transpose() * HinvN;
        r = M.ldlt().solve(HinvN.transpose() * ap);
        d -= HinvN * r;
      }
      const double curvature = ap.dot(d);
      const double slack = ap.dot(z) - b[p];

      // With n active rows the primal direction is zero up to roundoff.
      double t2 = kInf;
      if (q < n && curvature > 1e-12 * ap.dot(HinvAt.col(p))) t2 = slack / curvature;

      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] > 0.0) {
          const double ratio = mu[active[j]] / r[j];
          if (ratio < t1 ||
              (drop >= 0 && ratio == t1 && active[j] < active[drop])) {
            t1 = ratio;
            drop = j;
          }
        }
      }

      if (t1 == kInf && t2 == kInf) {
        Vector cert = Vector::Zero(m);
        cert[p] = 1.0 / row_norm[p];
        for (int j = 0; j < q; ++j) {
          cert[active[j]] = -r[j] / row_norm[active[j]];
        }
        sol.infeasibility_certificate = cert;
        sol.iterations = iterations;
        sol.diagnostics += (sol.diagnostics.empty() ? "" : "; ");
        sol.diagnostics += "row " + std::to_string(p) +
                           " cannot be satisfied together with the active rows";
        return finish(QpStatus::kInfeasible);
      }

      const double t = std::min(t1, t2);
      if (t2 < kInf) z -= t * d;
      for (int j = 0; j < q; ++j) mu[active[j]] -= t * r[j];
      mu_p += t;

      if (t2 <= t1) {
        mu[p] = mu_p;
        active.push_back(p);
        break;
      }
      mu[active[drop]] = 0.0;
      active.erase(active.begin() + drop);
    }
  }
}

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol) {
  KktResiduals out;
  const int m = problem.num_rows();
  const Vector Hz = problem.H() * sol.z;
  Vector combo = Vector::Zero(problem.dim());
  double combo_scale = 0.0;
  double lambda_scale = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vector a = problem.row(i);
    combo += sol.multipliers[i] * a;
    combo_scale += std::abs(sol.multipliers[i]) * a.norm();
    lambda_scale = std::max(lambda_scale, std::abs(sol.multipliers[i]) * a.norm());
  }
  const Vector stat = Hz + problem.F() - combo;
  const double stat_scale = Hz.norm() + problem.F().norm() + combo_scale;
  out.stationarity = stat_scale > 0.0 ? stat.norm() / stat_scale : 0.0;

  const double z_scale = 1.0 + sol.z.norm();
  for (int i = 0; i < m; ++i) {
    const Vector a = problem.row(i);
    const double norm = a.norm();
    if (norm == 0.0) continue;
    const double slack = (a.dot(sol.z) - problem.b()[i]) / norm;
    out.primal = std::max(out.primal, std::max(0.0, slack) / z_scale);
    const double lam = sol.multipliers[i] * norm;
    if (lambda_scale > 0.0) {
      out.dual = std::max(out.dual, std::max(0.0, lam) / lambda_scale);
      out.complementarity = std::max(
          out.complementarity, std::abs(lam * slack) / (lambda_scale * z_scale));
    }
  }
  return out;
}

}  // namespace cbfqp
