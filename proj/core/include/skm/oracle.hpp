#pragma once

#include <vector>

#include "skm/types.hpp"

namespace skm {

/// Enumeration budget for the exact projection: at most this many variables
/// and this many inequality rows (the subset loop is 2^p).
inline constexpr Index kOracleMaxVars = 16;
inline constexpr Index kOracleMaxIneq = 16;

/// Exact Euclidean projection of y0 onto {z : A z <= b, C z = d}, found by
/// enumerating candidate active sets, together with a KKT certificate at the
/// measured active set.
struct ProjectionCertificate {
  Vector point;
  std::vector<int> active_set;  // inequality rows tight at the point, ascending
  Vector ineq_multipliers;      // one per active row; >= 0 up to roundoff
  Vector eq_multipliers;        // one per equality row
  /// || (point - y0) + A_act^T lambda + C^T nu ||_inf, the stationarity gap.
  double kkt_residual = 0.0;
};

/// Throws BudgetExceeded when the instance is over the enumeration budget and
/// Infeasible when no active-set candidate satisfies all constraints.
ProjectionCertificate project_exact(const ConstraintSystem& system, const Vector& y0);

/// Euclidean distance from y0 to the feasible set (via project_exact).
double distance_to_feasible(const ConstraintSystem& system, const Vector& y0);

}  // namespace skm
