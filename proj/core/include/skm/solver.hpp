#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "skm/types.hpp"

namespace skm {

enum class Variant {
  Basic,  // plain sampled Kaczmarz-Motzkin update
  Gskm,   // post-step averaging with the previous iterate
  Nskm,   // Nesterov look-ahead before selecting the row
  Mskm,   // heavy-ball momentum added after the update
};

enum class Sampling {
  WithReplacement,
  WithoutReplacement,
};

/// Tunables for the sampled Kaczmarz-Motzkin iteration.
struct SkmConfig {
  double delta = 1.0;       // relaxation step length, must lie in (0, 2)
  std::optional<int> beta;  // rows sampled per step; empty = max(10, round(sqrt(p)))
  std::int64_t max_iters = 100000;
  double tolerance = 1e-6;        // max violation accepted at termination
  std::int64_t check_every = 10;  // iterations between violation scans
  Variant variant = Variant::Basic;
  double gskm_xi = -0.25;  // averaging weight; negative values extrapolate
  double momentum = 0.25;  // factor for the Nskm / Mskm variants, in [0, 1)
  Sampling sampling = Sampling::WithReplacement;
  std::uint64_t seed = 0;
  std::optional<Vector> w0;  // start iterate; empty = zero vector
  bool record_trace = false;

  /// Throws std::invalid_argument when a parameter is out of range.
  void check() const;
};

/// Sample size actually used for p inequality rows: the explicit value when
/// given, otherwise max(10, round(sqrt(p))), in both cases clamped to [1, p].
int resolve_beta(const std::optional<int>& beta, Index p);

/// Mutable per-solve state.  Two states built from the same configuration
/// and shapes replay bit-identical trajectories.
struct SkmState {
  Vector w;
  Vector w_prev;
  std::int64_t k = 0;  // completed iterations
  std::mt19937_64 rng;
  std::vector<int> pool;    // scratch permutation for without-replacement draws
  std::vector<int> sample;  // indices drawn for the current step
};

SkmState make_state(const SkmConfig& config, Index m, Index p);

/// Draws the next index set into state.sample and returns a view of it.
std::span<const int> sample_indices(SkmState& state, Index p, int beta, Sampling mode);

/// Row chosen from a sampled index set: the one with the largest positive
/// part of a_i^T w - b_i, ties broken towards the smallest row index.
struct Selection {
  int row = -1;
  double residual = 0.0;  // signed residual of the chosen row
  /// Positive-part gap to the runner-up among *distinct* sampled rows;
  /// infinity when the sample holds a single distinct row.  Zero means an
  /// exact tie, tiny values mean the argmax is numerically fragile.
  double margin = std::numeric_limits<double>::infinity();
};

Selection select_most_violated(const Matrix& A, const Vector& b, const Vector& w,
                               std::span<const int> sample);

/// What one iteration did, for observers and path replay.
struct StepInfo {
  int row = -1;
  double residual = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  bool moved = false;  // false when the chosen row was already satisfied
};

/// Advances the iterate by one step.  Pass forced_sample to reuse a recorded
/// index set instead of drawing from the generator (the selection itself is
/// re-evaluated at the current iterate).
StepInfo skm_step(SkmState& state, const Matrix& A, const Vector& b,
                  const SkmConfig& config, std::span<const int> forced_sample = {});

/// max(0, max_i a_i^T w - b_i); zero when there are no rows.
double max_violation(const Matrix& A, const Vector& b, const Vector& w);

struct RunResult {
  Vector w;
  std::int64_t iterations = 0;
  Termination termination = Termination::IterationCap;
  double max_violation = 0.0;        // at the returned iterate
  std::vector<double> trace;         // violation at each checkpoint, k = 0 first
};

/// Replaces the built-in violation scan, e.g. to measure the recovered point
/// against the original system instead of the reduced one.
using ViolationFn = std::function<double(const Vector&)>;
using StepObserver = std::function<void(const SkmState&, const StepInfo&)>;

/// Runs the iteration from w0 until the (possibly overridden) violation drops
/// to config.tolerance or max_iters is exhausted.  Violations are scanned at
/// k = 0, every check_every steps and at the cap; on IterationCap the best
/// iterate seen at a checkpoint is returned rather than the last one.
RunResult run(const Matrix& A, const Vector& b, const SkmConfig& config,
              const ViolationFn& violation_override = {},
              const StepObserver& on_step = {});

}  // namespace skm
