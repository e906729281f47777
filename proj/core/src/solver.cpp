#include "skm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace skm {
namespace {

// Uniform draw from [0, n) by rejection, so the result depends only on the
// generator sequence and not on library-specific distribution internals.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

// The basic relaxed projection onto the half-space of `row`.  Returns false
// when the row is satisfied (or unusable) and the iterate stays put.
bool apply_basic(Vector& w, const Matrix& A, const Vector& b, double delta,
                 int row, double residual) {
  if (residual <= 0.0) return false;
  const double n2 = A.row(row).squaredNorm();
  if (n2 <= kZeroRowFloor) return false;
  w.noalias() -= (delta * residual / n2) * A.row(row).transpose();
  return true;
}

}  // namespace

void SkmConfig::check() const {
  if (!(delta > 0.0 && delta < 2.0))
    throw std::invalid_argument("delta must be in (0,2)");
  if (beta && *beta < 1)
    throw std::invalid_argument("beta must be at least 1");
  if (max_iters < 0)
    throw std::invalid_argument("max_iters must be nonnegative");
  if (!(tolerance >= 0.0))
    throw std::invalid_argument("tolerance must be nonnegative");
  if (check_every < 1)
    throw std::invalid_argument("check_every must be at least 1");
  if (!(gskm_xi > -1.0 && gskm_xi < 1.0))
    throw std::invalid_argument("gskm_xi must be in (-1, 1)");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("momentum must be in [0, 1)");
  if (w0 && !w0->allFinite())
    throw std::invalid_argument("w0 must be finite");
}

int resolve_beta(const std::optional<int>& beta, Index p) {
  if (p < 1) throw std::invalid_argument("resolve_beta needs at least one row");
  const Index want =
      beta ? static_cast<Index>(*beta)
           : std::max<Index>(10, std::lround(std::sqrt(static_cast<double>(p))));
  return static_cast<int>(std::clamp<Index>(want, 1, p));
}

SkmState make_state(const SkmConfig& config, Index m, Index p) {
  config.check();
  if (config.w0 && config.w0->size() != m)
    throw std::invalid_argument("w0 has the wrong dimension");

  SkmState state;
  state.w = config.w0 ? *config.w0 : Vector::Zero(m);
  state.w_prev = state.w;
  state.rng.seed(config.seed);
  state.pool.resize(static_cast<std::size_t>(p));
  std::iota(state.pool.begin(), state.pool.end(), 0);
  state.sample.reserve(static_cast<std::size_t>(p));
  return state;
}

std::span<const int> sample_indices(SkmState& state, Index p, int beta, Sampling mode) {
  state.sample.resize(static_cast<std::size_t>(beta));
  if (mode == Sampling::WithReplacement) {
    for (int i = 0; i < beta; ++i)
      state.sample[static_cast<std::size_t>(i)] =
          static_cast<int>(bounded(state.rng, static_cast<std::uint64_t>(p)));
  } else {
    // Partial Fisher-Yates over a persistent pool: the first beta entries
    // become a uniformly random beta-subset in draw order.
    for (int i = 0; i < beta; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     bounded(state.rng, static_cast<std::uint64_t>(p - i));
      std::swap(state.pool[static_cast<std::size_t>(i)], state.pool[j]);
      state.sample[static_cast<std::size_t>(i)] = state.pool[static_cast<std::size_t>(i)];
    }
  }
  return {state.sample.data(), state.sample.size()};
}

Selection select_most_violated(const Matrix& A, const Vector& b, const Vector& w,
                               std::span<const int> sample) {
  Selection sel;
  double best_plus = -1.0;
  double second_plus = -std::numeric_limits<double>::infinity();
  for (const int idx : sample) {
    if (idx == sel.row) continue;  // duplicate of the current best
    const double residual = A.row(idx).dot(w) - b(idx);
    const double plus = std::max(residual, 0.0);
    if (plus > best_plus || (plus == best_plus && idx < sel.row)) {
      if (sel.row >= 0) second_plus = std::max(second_plus, best_plus);
      sel.row = idx;
      sel.residual = residual;
      best_plus = plus;
    } else {
      second_plus = std::max(second_plus, plus);
    }
  }
  sel.margin = std::isinf(second_plus) ? std::numeric_limits<double>::infinity()
                                       : best_plus - second_plus;
  return sel;
}

StepInfo skm_step(SkmState& state, const Matrix& A, const Vector& b,
                  const SkmConfig& config, std::span<const int> forced_sample) {
  const Index p = A.rows();
  std::span<const int> sample = forced_sample;
  if (sample.empty())
    sample = sample_indices(state, p, resolve_beta(config.beta, p), config.sampling);

  const Vector old = state.w;
  StepInfo info;

  switch (config.variant) {
    case Variant::Basic: {
      const Selection sel = select_most_violated(A, b, state.w, sample);
      info = {sel.row, sel.residual, sel.margin,
              apply_basic(state.w, A, b, config.delta, sel.row, sel.residual)};
      break;
    }
    case Variant::Gskm: {
      const Selection sel = select_most_violated(A, b, state.w, sample);
      Vector z = state.w;
      const bool moved = apply_basic(z, A, b, config.delta, sel.row, sel.residual);
      // Averaging identical points is the identity, so skip the arithmetic
      // when the basic step did not move (keeps no-ops bit-exact).
      if (moved) state.w = (1.0 - config.gskm_xi) * z + config.gskm_xi * old;
      info = {sel.row, sel.residual, sel.margin, moved};
      break;
    }
    case Variant::Mskm: {
      const Selection sel = select_most_violated(A, b, state.w, sample);
      Vector z = state.w;
      const bool moved = apply_basic(z, A, b, config.delta, sel.row, sel.residual);
      state.w = z + config.momentum * (old - state.w_prev);
      info = {sel.row, sel.residual, sel.margin, moved};
      break;
    }
    case Variant::Nskm: {
      // Row choice and residual are both evaluated at the look-ahead point.
      Vector v = state.w + config.momentum * (state.w - state.w_prev);
      const Selection sel = select_most_violated(A, b, v, sample);
      const bool moved = apply_basic(v, A, b, config.delta, sel.row, sel.residual);
      state.w = std::move(v);
      info = {sel.row, sel.residual, sel.margin, moved};
      break;
    }
  }

  state.w_prev = old;
  ++state.k;
  return info;
}

double max_violation(const Matrix& A, const Vector& b, const Vector& w) {
  if (A.rows() == 0) return 0.0;
  return std::max(0.0, (A * w - b).maxCoeff());
}

RunResult run(const Matrix& A, const Vector& b, const SkmConfig& config,
              const ViolationFn& violation_override, const StepObserver& on_step) {
  config.check();
  const Index p = A.rows();
  const Index m = A.cols();

  auto violation_at = [&](const Vector& w) {
    return violation_override ? violation_override(w) : max_violation(A, b, w);
  };

  RunResult out;
  if (p == 0) {
    out.w = config.w0 ? *config.w0 : Vector::Zero(m);
    out.max_violation = violation_at(out.w);
    out.trace.push_back(out.max_violation);
    out.termination = out.max_violation <= config.tolerance ? Termination::AlreadyFeasible
                                                            : Termination::IterationCap;
    return out;
  }

  SkmState state = make_state(config, m, p);

  const double v0 = violation_at(state.w);
  out.trace.push_back(v0);
  if (v0 <= config.tolerance) {
    out.w = state.w;
    out.termination = Termination::AlreadyFeasible;
    out.max_violation = v0;
    return out;
  }

  double best_violation = v0;
  Vector best_w = state.w;

  while (state.k < config.max_iters) {
    const StepInfo info = skm_step(state, A, b, config);
    if (on_step) on_step(state, info);

    if (state.k % config.check_every == 0 || state.k == config.max_iters) {
      const double v = violation_at(state.w);
      out.trace.push_back(v);
      if (v <= config.tolerance) {
        out.w = state.w;
        out.iterations = state.k;
        out.termination = Termination::Converged;
        out.max_violation = v;
        return out;
      }
      if (v < best_violation) {
        best_violation = v;
        best_w = state.w;
      }
    }
  }

  // Cap reached: hand back the best checkpointed iterate, not the last one.
  out.w = std::move(best_w);
  out.iterations = state.k;
  out.termination = Termination::IterationCap;
  out.max_violation = best_violation;
  return out;
}

}  // namespace skm
