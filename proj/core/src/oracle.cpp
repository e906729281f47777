#include "skm/oracle.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace skm {
namespace {

// Candidates are accepted as feasible up to this absolute slack; instances
// inside the enumeration budget are desk-scale, so no rescaling is applied.
constexpr double kFeasTol = 1e-9;
constexpr double kConsistencyTol = 1e-8;
// An inequality counts as active at the winner within this slack.
constexpr double kActiveTol = 1e-8;
// Multipliers below this are treated as genuinely negative and their row is
// dropped from the certificate's support.
constexpr double kNegativeMultiplier = 1e-9;

// Minimum-norm least-squares solve via SVD with the usual rank cutoff.
Vector pinv_solve(const Matrix& M, const Vector& rhs) {
  if (M.rows() == 0 || M.cols() == 0) return Vector::Zero(M.cols());
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double tau = static_cast<double>(std::max(M.rows(), M.cols())) *
                     std::numeric_limits<double>::epsilon() *
                     (sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > tau) ++rank;
  return svd.matrixV().leftCols(rank) *
         (svd.matrixU().leftCols(rank).transpose() * rhs).cwiseQuotient(sv.head(rank));
}

}  // namespace

ProjectionCertificate project_exact(const ConstraintSystem& system, const Vector& y0) {
  if (auto violations = validate(system); !violations.empty())
    throw ValidationError(std::move(violations));

  const Index n = system.num_vars();
  const Index p = system.num_inequalities();
  const Index q = system.num_equalities();
  if (n > kOracleMaxVars || p > kOracleMaxIneq)
    throw BudgetExceeded("instance exceeds the exact-projection enumeration budget");
  if (y0.size() != n) throw std::invalid_argument("y0 has the wrong dimension");

  Vector best;
  double best_dist2 = std::numeric_limits<double>::infinity();
  bool found = false;

  // Each mask proposes an active set; project onto its affine hull (together
  // with all equalities) and keep the nearest candidate that is feasible.
  const std::uint32_t mask_end = std::uint32_t{1} << p;
  for (std::uint32_t mask = 0; mask < mask_end; ++mask) {
    const Index k = std::popcount(mask);
    if (k > n) continue;  // dependent rows; a smaller mask spans the same set

    Vector z;
    if (q + k == 0) {
      z = y0;
    } else {
      Matrix G(q + k, n);
      Vector h(q + k);
      G.topRows(q) = system.C;
      h.head(q) = system.d;
      Index r = q;
      for (Index i = 0; i < p; ++i) {
        if (mask >> i & 1u) {
          G.row(r) = system.A.row(i);
          h(r) = system.b(i);
          ++r;
        }
      }
      z = y0 - pinv_solve(G, G * y0 - h);
      const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
      if ((G * z - h).cwiseAbs().maxCoeff() > kConsistencyTol * scale)
        continue;  // the proposed active set is contradictory
    }

    if (p > 0 && (system.A * z - system.b).maxCoeff() > kFeasTol) continue;
    if (q > 0 && (system.C * z - system.d).cwiseAbs().maxCoeff() > kFeasTol) continue;

    const double dist2 = (z - y0).squaredNorm();
    if (!found || dist2 < best_dist2) {
      found = true;
      best_dist2 = dist2;
      best = z;
    }
  }

  if (!found) throw Infeasible("the constraint system has no feasible point");

  ProjectionCertificate cert;
  cert.point = best;

  std::vector<int> active;
  for (Index i = 0; i < p; ++i) {
    if (system.A.row(i).dot(best) - system.b(i) >= -kActiveTol)
      active.push_back(static_cast<int>(i));
  }

  // Stationarity: y0 - z = C^T nu + A_act^T lambda with lambda >= 0.  Solve
  // min-norm least squares on the measured support and drop rows whose
  // multiplier comes out genuinely negative (borderline-active rows).
  const Vector target = y0 - best;
  Vector x;
  while (true) {
    const Index a = static_cast<Index>(active.size());
    Matrix M(n, q + a);
    M.leftCols(q) = system.C.transpose();
    for (Index j = 0; j < a; ++j) M.col(q + j) = system.A.row(active[static_cast<std::size_t>(j)]).transpose();
    x = pinv_solve(M, target);

    Index worst = -1;
    double worst_val = -kNegativeMultiplier;
    for (Index j = 0; j < a; ++j) {
      if (x(q + j) < worst_val) {
        worst_val = x(q + j);
        worst = j;
      }
    }
    if (worst < 0) {
      cert.kkt_residual = (best - y0 + M * x).cwiseAbs().maxCoeff();
      break;
    }
    active.erase(active.begin() + worst);
  }

  cert.active_set = std::move(active);
  cert.eq_multipliers = x.head(q);
  cert.ineq_multipliers = x.tail(static_cast<Index>(cert.active_set.size()));
  return cert;
}

double distance_to_feasible(const ConstraintSystem& system, const Vector& y0) {
  return (project_exact(system, y0).point - y0).norm();
}

}  // namespace skm
