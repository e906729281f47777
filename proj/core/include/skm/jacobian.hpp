#pragma once

#include <utility>
#include <vector>

#include "skm/nullspace.hpp"
#include "skm/solver.hpp"
#include "skm/types.hpp"

namespace skm {

/// Derivative of one basic iteration with respect to the iterate, for a row
/// with normal a: the identity when the row did not move the iterate, and
/// I - delta * a a^T / ||a||^2 when it did.
Matrix step_jacobian(const Vector& a, double delta, bool active);

/// One recorded iteration of a sampling path.
struct PathStep {
  std::vector<int> sample;  // index set drawn for this step
  int row = -1;             // selected row
  double residual = 0.0;    // its signed residual at selection time
  double margin = std::numeric_limits<double>::infinity();
  bool moved = false;
  double gain = 0.0;         // delta * ||db_row/dy0|| / ||a_row|| when moved, else 0
  double sensitivity = 0.0;  // ||d residual_row / d y0|| at selection time

  /// Exactly on a nondifferentiability set: tied argmax among violated rows
  /// or an active row with residual 0.
  bool at_boundary() const {
    return (moved && margin == 0.0) || (residual == 0.0 && sensitivity > 0.0);
  }

  /// Within `eps` of a selection or activation flip, where the path
  /// derivative would be one-sided.  The activation test scales with the
  /// residual's sensitivity to y0: a residual that is identically zero as a
  /// function of y0 (common after an exact delta = 1 projection) cannot flip
  /// and is not fragile.  Selection margins only matter for steps that
  /// moved; swapping two satisfied rows changes nothing.
  bool fragile(double eps) const {
    return (moved && margin <= eps) || std::abs(residual) < eps * sensitivity;
  }
};

/// Derivative of the whole repair map y0 -> z* along one frozen sampling
/// path, by the chain rule through z_proj, b_new and every iteration.
struct PathJacobian {
  Matrix J;  // n x n
  std::vector<PathStep> steps;
  double gain_total = 0.0;  // sum of per-step gains; ||J|| <= 1 + gain_total

  int fragile_count(double eps) const {
    int count = 0;
    for (const auto& s : steps) count += s.fragile(eps) ? 1 : 0;
    return count;
  }
  bool fragile(double eps) const { return fragile_count(eps) > 0; }
  bool at_boundary() const {
    for (const auto& s : steps) if (s.at_boundary()) return true;
    return false;
  }
};

/// Solves like solve() while differentiating the path.  Only the Basic
/// variant is supported.  On IterationCap the differentiated end point is
/// the final iterate (the K-step map), not the best checkpoint.
std::pair<SolveResult, PathJacobian> path_jacobian(const ConstraintSystem& system,
                                                   const SkmConfig& config);

/// Re-runs a recorded path with the same index sets but a different start
/// point: selections are re-evaluated, termination checks are skipped, and
/// exactly steps.size() iterations are taken.  This is the fixed-sampling
/// map that the path Jacobian differentiates.  When `followed` is given it
/// reports whether every replayed step selected the recorded row with the
/// recorded activity; false means the new start point lies in a different
/// linear cell of the map.  Steps whose action displaces the iterate by no
/// more than benign_floor (relative to the row norm) are not counted as
/// divergence: after an exact delta = 1 projection the same row re-evaluates
/// to a residual of a few ulp with arbitrary sign, and those flips move the
/// iterate by less than any finite difference can resolve.
Vector replay_path(const ConstraintSystem& system, const SkmConfig& config,
                   const std::vector<PathStep>& steps, const Vector& y0_override,
                   const EqualityFactorization* eq = nullptr, bool* followed = nullptr,
                   double benign_floor = 0.0);

/// Monte Carlo check that the mean analytic path derivative matches central
/// finite differences along `probe`, path by path with common random
/// numbers.  Paths are skipped when the forward run lands exactly on a
/// selection tie or activation boundary (the recorded branch is only a
/// subgradient there), or when either displaced replay departs from the
/// recorded selections (the two-sided difference would straddle a kink
/// within eps of the probe).
struct GradientCheckReport {
  Vector analytic_mean;  // mean over paths of J_path * probe
  Vector fd_mean;        // mean over paths of (z*(y0+eps u) - z*(y0-eps u)) / 2 eps
  Vector diff_mean;      // analytic_mean - fd_mean
  Vector diff_sem;       // per-coordinate standard error of the difference
  int paths_used = 0;
  int paths_excluded = 0;
  double eps = 0.0;

  struct PathCheck {
    int path = 0;
    bool excluded = false;
    double rel_error = 0.0;  // ||analytic - fd|| / max(1, ||fd||)
  };
  std::vector<PathCheck> per_path;

  /// Every coordinate within sigmas * SEM plus eps_slack * eps of zero.
  bool passed(double sigmas = 3.0, double eps_slack = 10.0) const;
};

GradientCheckReport expected_gradient_check(const ConstraintSystem& system,
                                            const SkmConfig& config, int num_paths,
                                            const Vector& probe, double eps);

}  // namespace skm
