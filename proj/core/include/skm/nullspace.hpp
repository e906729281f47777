#pragma once

#include "skm/types.hpp"

namespace skm {

/// SVD factorization of an equality matrix, reusable across transforms that
/// share the same C (e.g. a parametric family where only d changes).
struct EqualityFactorization {
  Matrix N;     // n x (n - rank) orthonormal basis of null(C)
  Matrix pinv;  // n x q Moore-Penrose pseudoinverse of C
  Index rank = 0;
  Index cols = 0;  // n

  /// Orthogonal projector onto null(C): I - pinv * C applied as N N^T.
  Matrix null_projector() const { return N * N.transpose(); }
};

EqualityFactorization factorize_equalities(const Matrix& C);

/// Eliminates the equality block of a validated system.  Writing
/// z = z_proj + N w turns A z <= b into (A N) w <= (b - A z_proj) while
/// C z = d holds for every w.  z_proj is the solution of C z = d nearest to
/// the start point, so the reduced problem starts at w = 0.
///
/// Throws InconsistentEqualities when d is not in the range of C, and
/// InfeasibleFullRank when rank(C) = n pins down a point that breaks an
/// inequality.
TransformedSystem transform(const ConstraintSystem& system);
TransformedSystem transform(const ConstraintSystem& system, const EqualityFactorization& eq);

/// Maps a reduced iterate back to the original coordinates: z_proj + N w.
Vector recover(const TransformedSystem& t, const Vector& w);

}  // namespace skm
