#include "skm/pipeline.hpp"

#include <algorithm>

#include "skm/parallel.hpp"

namespace skm {
namespace {

SolveResult assemble(const ConstraintSystem& system, const Vector& z, const Vector& w,
                     const RunResult& out, bool record_trace) {
  SolveResult res;
  res.z_star = z;
  res.w_final = w;
  res.iterations = out.iterations;
  res.termination = out.termination;
  res.max_ineq_violation = max_inequality_violation(system, z);
  res.max_eq_violation = max_equality_violation(system, z);
  res.distance_moved = (z - system.start_point()).norm();
  if (record_trace) res.residual_trace = out.trace;
  return res;
}

SolveResult solve_transformed(const ConstraintSystem& system, const TransformedSystem& t,
                              const SkmConfig& config) {
  // Judge convergence on the recovered point so a Converged result always
  // reports violations within tolerance, with no transformed-space slack.
  ViolationFn original_violation = [&](const Vector& w) {
    const Vector z = recover(t, w);
    return std::max(max_inequality_violation(system, z),
                    max_equality_violation(system, z));
  };
  const RunResult out = run(t.A_new, t.b_new, config, original_violation);
  return assemble(system, recover(t, out.w), out.w, out, config.record_trace);
}

}  // namespace

double max_inequality_violation(const ConstraintSystem& system, const Vector& z) {
  if (system.A.rows() == 0) return 0.0;
  return std::max(0.0, (system.A * z - system.b).maxCoeff());
}

double max_equality_violation(const ConstraintSystem& system, const Vector& z) {
  if (system.C.rows() == 0) return 0.0;
  return (system.C * z - system.d).cwiseAbs().maxCoeff();
}

SolveResult solve(const ConstraintSystem& system, const SkmConfig& config) {
  return solve_transformed(system, transform(system), config);
}

SolveResult solve(const ConstraintSystem& system, const SkmConfig& config,
                  const EqualityFactorization& eq) {
  return solve_transformed(system, transform(system, eq), config);
}

SolveResult naive_solve(const ConstraintSystem& system, const SkmConfig& config) {
  if (auto violations = validate(system); !violations.empty())
    throw ValidationError(std::move(violations));

  const Index n = system.num_vars();
  const Index p = system.num_inequalities();
  const Index q = system.num_equalities();

  // Equalities become opposing half-space pairs; the row count grows to
  // p + 2q and beta resolves against that.
  Matrix D(p + 2 * q, n);
  Vector e(p + 2 * q);
  D.topRows(p) = system.A;
  e.head(p) = system.b;
  D.middleRows(p, q) = system.C;
  e.segment(p, q) = system.d;
  D.bottomRows(q) = -system.C;
  e.tail(q) = -system.d;

  SkmConfig start_at_y0 = config;
  start_at_y0.w0 = system.start_point();

  const RunResult out = run(D, e, start_at_y0);
  return assemble(system, out.w, out.w, out, config.record_trace);
}

std::vector<BatchOutcome> batch_solve(std::span<const ConstraintSystem> systems,
                                      const SkmConfig& config, int workers,
                                      SolveMode mode) {
  std::vector<BatchOutcome> outcomes(systems.size());
  parallel_for(static_cast<std::int64_t>(systems.size()), resolve_workers(workers),
               [&](std::int64_t i) {
                 SkmConfig item = config;
                 item.seed = config.seed ^ static_cast<std::uint64_t>(i);
                 try {
                   outcomes[static_cast<std::size_t>(i)].result =
                       mode == SolveMode::Naive ? naive_solve(systems[i], item)
                                                : solve(systems[i], item);
                 } catch (const std::exception& e) {
                   outcomes[static_cast<std::size_t>(i)].error = e.what();
                 }
               });
  return outcomes;
}

}  // namespace skm
