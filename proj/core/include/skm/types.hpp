#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Below this squared norm a constraint row cannot define a usable
/// half-space: validate() flags such rows in the input, and the iteration
/// leaves rows of a transformed system alone when they shrink under it.
inline constexpr double kZeroRowFloor = 1e-24;

/// Mixed linear constraint system
///
///   A z <= b   (p inequality rows)
///   C z  = d   (q equality rows)
///
/// together with an optional start point y0 that is to be repaired onto the
/// feasible set.  Either block may be empty; an empty block should still
/// carry n columns so the variable count stays recoverable, but num_vars()
/// falls back to the other fields when it does not.
struct ConstraintSystem {
  Matrix A;
  Vector b;
  Matrix C;
  Vector d;
  std::optional<Vector> y0;

  Index num_vars() const;
  Index num_inequalities() const { return A.rows(); }
  Index num_equalities() const { return C.rows(); }

  /// y0 when present, otherwise the origin.
  Vector start_point() const;
};

/// One broken invariant reported by validate().
struct Violation {
  enum class Code {
    DimensionMismatch,  // row/column counts disagree across fields
    ZeroInequalityRow,  // inequality row with numerically zero norm
    NonFiniteEntry,     // NaN or infinity somewhere in the data
  };

  Code code;
  std::string field;  // "A", "b", "C", "d" or "y0"
  Index index = -1;   // offending row, -1 when not row specific

  std::string describe() const;
};

/// Checks shape consistency, finiteness and that no inequality row is
/// (numerically) the zero row.  Returns every violation found; an empty
/// result means the system is usable.
std::vector<Violation> validate(const ConstraintSystem& system);

/// Reformulated system after eliminating the equalities: with
/// z = z_proj + N w every C z = d holds identically and the inequalities
/// become A_new w <= b_new over the reduced variable w.
struct TransformedSystem {
  Matrix N;       // n x m orthonormal basis of null(C)
  Vector z_proj;  // solution of C z = d closest to the start point
  Matrix A_new;   // A * N
  Vector b_new;   // b - A * z_proj
  Index rank_C = 0;

  Index num_vars() const { return N.rows(); }
  Index num_free() const { return N.cols(); }
};

enum class Termination {
  Converged,        // violation dropped below tolerance
  IterationCap,     // max_iters reached first
  AlreadyFeasible,  // the start point needed no repair
};

std::string_view to_string(Termination t);

/// Outcome of a repair run.
struct SolveResult {
  Vector z_star;   // repaired point in the original coordinates
  Vector w_final;  // final iterate in the reduced coordinates
  std::int64_t iterations = 0;
  double max_ineq_violation = 0.0;  // max(0, max_i a_i^T z* - b_i)
  double max_eq_violation = 0.0;    // max_j |c_j^T z* - d_j|
  Termination termination = Termination::Converged;
  double distance_moved = 0.0;  // ||z* - y0||
  /// Max violation at every convergence checkpoint, when tracing was on.
  std::optional<std::vector<double>> residual_trace;
};

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Input text could not be parsed as a problem description.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constraint system failed validate(); carries the individual findings.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The equality block C z = d has no solution (d outside the range of C).
class InconsistentEqualities : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// rank(C) = n pins z down to a single point and that point breaks an
/// inequality, so the feasible set is empty.
class InfeasibleFullRank : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact projection: the feasible region is empty.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact projection: instance too large for subset enumeration.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skm
