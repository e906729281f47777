#pragma once

#include <span>
#include <string>
#include <vector>

#include "skm/nullspace.hpp"
#include "skm/solver.hpp"
#include "skm/types.hpp"

namespace skm {

/// Repairs the start point against the mixed system: eliminate the
/// equalities, iterate on the reduced inequalities, map the result back.
/// Convergence is judged on the recovered point against the *original*
/// system, so Converged always means the reported violations are within
/// config.tolerance.
SolveResult solve(const ConstraintSystem& system, const SkmConfig& config);

/// Same, reusing a precomputed factorization of the equality block.
SolveResult solve(const ConstraintSystem& system, const SkmConfig& config,
                  const EqualityFactorization& eq);

/// Ablation baseline: every equality c^T z = d is split into the pair
/// c^T z <= d, -c^T z <= -d and the iteration runs in the original
/// coordinates starting from y0.  Same result contract as solve().
SolveResult naive_solve(const ConstraintSystem& system, const SkmConfig& config);

enum class SolveMode { Nullspace, Naive };

struct BatchOutcome {
  std::optional<SolveResult> result;
  std::string error;  // what() of the failure when result is empty

  bool ok() const { return result.has_value(); }
};

/// Solves every system independently on up to `workers` threads.  Item i
/// runs with seed ^ i, so outcomes depend only on the slot, never on thread
/// scheduling.  Per-item failures are captured, not propagated.
std::vector<BatchOutcome> batch_solve(std::span<const ConstraintSystem> systems,
                                      const SkmConfig& config, int workers,
                                      SolveMode mode = SolveMode::Nullspace);

double max_inequality_violation(const ConstraintSystem& system, const Vector& z);
double max_equality_violation(const ConstraintSystem& system, const Vector& z);

}  // namespace skm
