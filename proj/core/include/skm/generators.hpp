#pragma once

#include <cstdint>

#include "skm/types.hpp"

namespace skm {

/// Stateless seed mixing (splitmix64 style): stretches one base seed into
/// well-separated streams for instances, start points and solver runs.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a, std::uint64_t salt_b = 0);

/// Random mixed system with a certified strictly interior witness.  Rows of
/// A and C are unit norm, d is chosen so the witness satisfies the
/// equalities exactly, and b leaves at least `margin` of slack at the
/// witness on every inequality.  The witness is stored as y0.
///
/// Requires n >= 1, p >= 0, 0 <= q < n and margin >= 0.
ConstraintSystem gen_feasible_mixed(Index n, Index p, Index q, std::uint64_t seed,
                                    double margin = 0.1);

/// Start point whose maximum constraint violation (inequality excess or
/// absolute equality residual) lands in [0.5, 2] x violation_scale, found by
/// walking a random ray from the system's feasible witness (y0) and
/// bisecting.  violation_scale = 0 returns the witness itself.
Vector gen_infeasible_start(const ConstraintSystem& system, std::uint64_t seed,
                            double violation_scale = 100.0);

/// Data of a parametric quadratic program
///
///   min_y 1/2 y^T Q y + p_vec^T y   s.t.   G y <= h,  A y = x
///
/// whose constraint block feeds the repair pipeline.  Q is symmetric
/// positive definite, rows of A and G are unit norm and `witness` strictly
/// satisfies the inequalities.
struct QpFamily {
  Matrix Q;
  Vector p_vec;
  Matrix A;  // n_eq x n_var
  Matrix G;  // n_ineq x n_var
  Vector h;
  Vector witness;
};

QpFamily gen_qp_family(Index n_var, Index n_eq, Index n_ineq, std::uint64_t seed);

/// Constraint system of the family at parameter x: G y <= h, A y = x.
ConstraintSystem qp_constraint_system(const QpFamily& family, const Vector& x);

}  // namespace skm
