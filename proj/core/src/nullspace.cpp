#include "skm/nullspace.hpp"

#include <Eigen/SVD>

#include <limits>
#include <sstream>

namespace skm {
namespace {

// Residual thresholds are relative to the right-hand side scale but never
// tighter than the absolute value, so zero right-hand sides stay testable.
constexpr double kConsistencyTol = 1e-8;
constexpr double kFullRankFeasTol = 1e-8;

double scale_of(const Vector& v) {
  return std::max(1.0, v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace

EqualityFactorization factorize_equalities(const Matrix& C) {
  const Index q = C.rows();
  const Index n = C.cols();

  EqualityFactorization eq;
  eq.cols = n;
  if (q == 0) {
    // No equalities: the null space is all of R^n.
    eq.N = Matrix::Identity(n, n);
    eq.pinv = Matrix(n, 0);
    eq.rank = 0;
    return eq;
  }

  Eigen::BDCSVD<Matrix> svd(C, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  const double tau = static_cast<double>(std::max(q, n)) *
                     std::numeric_limits<double>::epsilon() * sigma_max;

  Index rank = 0;
  while (rank < sv.size() && sv(rank) > tau) ++rank;

  eq.rank = rank;
  eq.N = svd.matrixV().rightCols(n - rank);
  eq.pinv = svd.matrixV().leftCols(rank) *
            sv.head(rank).cwiseInverse().asDiagonal() *
            svd.matrixU().leftCols(rank).transpose();
  return eq;
}

TransformedSystem transform(const ConstraintSystem& system) {
  if (auto violations = validate(system); !violations.empty())
    throw ValidationError(std::move(violations));

  const Index n = system.num_vars();
  if (system.num_equalities() == 0) {
    // Nothing to eliminate; skip the SVD and the A * N product entirely.
    TransformedSystem t;
    t.N = Matrix::Identity(n, n);
    t.z_proj = system.start_point();
    t.A_new = system.A;
    t.b_new = system.b - system.A * t.z_proj;
    t.rank_C = 0;
    return t;
  }
  return transform(system, factorize_equalities(system.C));
}

TransformedSystem transform(const ConstraintSystem& system, const EqualityFactorization& eq) {
  if (auto violations = validate(system); !violations.empty())
    throw ValidationError(std::move(violations));
  if (eq.cols != system.num_vars() || eq.pinv.cols() != system.num_equalities())
    throw std::invalid_argument("factorization does not match the system's shape");

  const Vector y = system.start_point();

  TransformedSystem t;
  t.N = eq.N;
  t.rank_C = eq.rank;
  t.z_proj = y - eq.pinv * (system.C * y - system.d);

  if (system.num_equalities() > 0) {
    const double resid = (system.C * t.z_proj - system.d).cwiseAbs().maxCoeff();
    if (resid > kConsistencyTol * scale_of(system.d)) {
      std::ostringstream msg;
      msg << "equalities have no solution (best residual " << resid << ")";
      throw InconsistentEqualities(msg.str());
    }
  }

  t.A_new = system.A * t.N;
  t.b_new = system.b - system.A * t.z_proj;

  if (t.num_free() == 0 && t.b_new.size() > 0) {
    // The equalities determine z completely; any inequality slack deficit
    // means the feasible set is empty.
    const double violation = std::max(0.0, (-t.b_new).maxCoeff());
    if (violation > kFullRankFeasTol * scale_of(system.b)) {
      std::ostringstream msg;
      msg << "equalities pin z to a point violating the inequalities by " << violation;
      throw InfeasibleFullRank(msg.str());
    }
  }
  return t;
}

Vector recover(const TransformedSystem& t, const Vector& w) {
  if (w.size() != t.num_free())
    throw std::invalid_argument("reduced iterate has the wrong dimension");
  return t.z_proj + t.N * w;
}

}  // namespace skm
