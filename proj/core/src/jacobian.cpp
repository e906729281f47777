#include "skm/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "skm/pipeline.hpp"

namespace skm {
namespace {

SolveResult make_result(const ConstraintSystem& system, const TransformedSystem& t,
                        const Vector& w, const RunResult& out, bool record_trace) {
  SolveResult res;
  res.z_star = recover(t, w);
  res.w_final = w;
  res.iterations = out.iterations;
  res.termination = out.termination;
  res.max_ineq_violation = max_inequality_violation(system, res.z_star);
  res.max_eq_violation = max_equality_violation(system, res.z_star);
  res.distance_moved = (res.z_star - system.start_point()).norm();
  if (record_trace) res.residual_trace = out.trace;
  return res;
}

void require_basic(const SkmConfig& config) {
  if (config.variant != Variant::Basic)
    throw std::invalid_argument("path derivatives support the Basic variant only");
}

}  // namespace

Matrix step_jacobian(const Vector& a, double delta, bool active) {
  const double n2 = a.squaredNorm();
  if (n2 <= kZeroRowFloor) throw std::invalid_argument("step_jacobian: zero row");
  const Index m = a.size();
  Matrix J = Matrix::Identity(m, m);
  if (!active) return J;
  J.noalias() -= (delta / n2) * a * a.transpose();
  return J;
}

std::pair<SolveResult, PathJacobian> path_jacobian(const ConstraintSystem& system,
                                                   const SkmConfig& config) {
  config.check();
  require_basic(config);
  if (auto violations = validate(system); !violations.empty())
    throw ValidationError(std::move(violations));

  const EqualityFactorization eq = factorize_equalities(system.C);
  const TransformedSystem t = transform(system, eq);
  const Index n = t.num_vars();
  const Index m = t.num_free();

  // Dependence of the reduced problem on y0: z_proj moves with the
  // projector onto null(C), and b_new = b - A z_proj follows.
  const Matrix proj = Matrix::Identity(n, n) - eq.pinv * system.C;
  const Matrix dbdy = -(system.A * proj);  // row i = d b_new_i / d y0

  PathJacobian path;
  Matrix dw = Matrix::Zero(m, n);
  Vector last_w;
  bool stepped = false;

  StepObserver record = [&](const SkmState& state, const StepInfo& info) {
    PathStep step;
    step.sample.assign(state.sample.begin(), state.sample.end());
    step.row = info.row;
    step.residual = info.residual;
    step.margin = info.margin;
    step.moved = info.moved;
    if (info.row >= 0) {
      const auto a = t.A_new.row(info.row);
      const Eigen::RowVectorXd residual_grad = a * dw - dbdy.row(info.row);
      step.sensitivity = residual_grad.norm();
      // After an exact delta = 1 projection the row's derivative cancels in
      // exact arithmetic; what survives is rounding noise from the two terms.
      // Snap it to zero so boundary tests don't see phantom sensitivity.
      const double noise = std::numeric_limits<double>::epsilon() *
                           (std::sqrt(a.squaredNorm()) * dw.norm() +
                            dbdy.row(info.row).norm());
      if (step.sensitivity <= 64.0 * noise) step.sensitivity = 0.0;
      if (info.moved) {
        const double n2 = a.squaredNorm();
        // dw <- (I - delta a a^T / n2) dw + (delta / n2) a^T db_row
        dw.noalias() -= (config.delta / n2) * a.transpose() * residual_grad;
        step.gain = config.delta * dbdy.row(info.row).norm() / std::sqrt(n2);
        path.gain_total += step.gain;
      }
    }
    path.steps.push_back(std::move(step));
    last_w = state.w;
    stepped = true;
  };

  ViolationFn original_violation = [&](const Vector& w) {
    const Vector z = recover(t, w);
    return std::max(max_inequality_violation(system, z),
                    max_equality_violation(system, z));
  };

  const RunResult out = run(t.A_new, t.b_new, config, original_violation, record);

  // The Jacobian tracks the full path, so on a cap the differentiated end
  // point is the last iterate rather than run()'s best checkpoint.
  const Vector w_end =
      (out.termination == Termination::IterationCap && stepped) ? last_w : out.w;

  path.J = proj + t.N * dw;
  return {make_result(system, t, w_end, out, config.record_trace), std::move(path)};
}

Vector replay_path(const ConstraintSystem& system, const SkmConfig& config,
                   const std::vector<PathStep>& steps, const Vector& y0_override,
                   const EqualityFactorization* eq, bool* followed, double benign_floor) {
  config.check();
  require_basic(config);

  ConstraintSystem moved = system;
  moved.y0 = y0_override;
  const TransformedSystem t = eq ? transform(moved, *eq) : transform(moved);

  // A step's action is negligible when it stays put or its displacement,
  // delta * |residual| / ||a||, is below benign_floor.
  const auto negligible = [&](bool acted, int row, double residual) {
    if (!acted) return true;
    if (row < 0) return true;
    return std::abs(residual) <= benign_floor * std::sqrt(t.A_new.row(row).squaredNorm());
  };

  bool same_cell = true;
  SkmState state = make_state(config, t.num_free(), t.A_new.rows());
  for (const auto& step : steps) {
    const StepInfo info = skm_step(state, t.A_new, t.b_new, config, step.sample);
    if (info.row == step.row && info.moved == step.moved) continue;
    if (negligible(step.moved, step.row, step.residual) &&
        negligible(info.moved, info.row, info.residual))
      continue;
    same_cell = false;
  }
  if (followed) *followed = same_cell;
  return recover(t, state.w);
}

bool GradientCheckReport::passed(double sigmas, double eps_slack) const {
  if (paths_used == 0) return false;
  for (Index j = 0; j < diff_mean.size(); ++j) {
    if (std::abs(diff_mean[j]) > sigmas * diff_sem[j] + eps_slack * eps) return false;
  }
  return true;
}

GradientCheckReport expected_gradient_check(const ConstraintSystem& system,
                                            const SkmConfig& config, int num_paths,
                                            const Vector& probe, double eps) {
  config.check();
  require_basic(config);
  if (num_paths < 1) throw std::invalid_argument("num_paths must be at least 1");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const Index n = system.num_vars();
  if (probe.size() != n) throw std::invalid_argument("probe has the wrong dimension");

  const EqualityFactorization eq = factorize_equalities(system.C);
  const Vector y0 = system.start_point();
  const Vector y_plus = y0 + eps * probe;
  const Vector y_minus = y0 - eps * probe;

  GradientCheckReport report;
  report.eps = eps;
  report.analytic_mean = Vector::Zero(n);
  report.fd_mean = Vector::Zero(n);
  Vector diff_sum = Vector::Zero(n);
  Vector diff_sq_sum = Vector::Zero(n);

  for (int i = 0; i < num_paths; ++i) {
    SkmConfig per_path = config;
    per_path.seed = config.seed ^ static_cast<std::uint64_t>(i);

    const PathJacobian path = path_jacobian(system, per_path).second;
    GradientCheckReport::PathCheck check;
    check.path = i;
    bool followed_plus = true;
    bool followed_minus = true;
    Vector z_plus, z_minus;
    const bool boundary = path.at_boundary();
    if (!boundary) {
      // Branch flips that displace the iterate by less than this leave the
      // central difference error two orders under the per-path tolerance.
      const double benign = 1e-7 * eps;
      z_plus = replay_path(system, per_path, path.steps, y_plus, &eq, &followed_plus,
                           benign);
      z_minus = replay_path(system, per_path, path.steps, y_minus, &eq, &followed_minus,
                            benign);
    }
    if (boundary || !followed_plus || !followed_minus) {
      check.excluded = true;
      ++report.paths_excluded;
      report.per_path.push_back(check);
      continue;
    }

    const Vector analytic = path.J * probe;
    const Vector fd = (z_plus - z_minus) / (2.0 * eps);
    const Vector diff = analytic - fd;

    check.rel_error = diff.norm() / std::max(1.0, fd.norm());
    report.per_path.push_back(check);

    report.analytic_mean += analytic;
    report.fd_mean += fd;
    diff_sum += diff;
    diff_sq_sum += diff.cwiseProduct(diff);
    ++report.paths_used;
  }

  const double u = static_cast<double>(report.paths_used);
  if (report.paths_used > 0) {
    report.analytic_mean /= u;
    report.fd_mean /= u;
  }
  report.diff_mean = report.analytic_mean - report.fd_mean;
  report.diff_sem = Vector::Zero(n);
  if (report.paths_used > 1) {
    for (Index j = 0; j < n; ++j) {
      const double mean = diff_sum[j] / u;
      const double var =
          std::max(0.0, (diff_sq_sum[j] - u * mean * mean) / (u - 1.0));
      report.diff_sem[j] = std::sqrt(var / u);
    }
  }
  return report;
}

}  // namespace skm
