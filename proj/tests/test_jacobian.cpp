#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include <skm/generators.hpp>
#include <skm/jacobian.hpp>
#include <skm/pipeline.hpp>

#include "test_util.hpp"

using namespace skm;
using testutil::mat;
using testutil::vec;

namespace {

double spectral_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()[0];
}

ConstraintSystem small_mixed(std::uint64_t seed, double scale = 1.0) {
  ConstraintSystem sys = gen_feasible_mixed(6, 6, 2, derive_seed(400, seed));
  sys.y0 = gen_infeasible_start(sys, derive_seed(400, seed, 1), scale);
  return sys;
}

SkmConfig grad_config(std::uint64_t seed) {
  SkmConfig c;
  c.tolerance = 1e-2;  // loose stop keeps late residuals clear of the FD band
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("jacobian") {
  TEST_CASE("step jacobian matches the closed forms") {
    const Matrix active = step_jacobian(vec({1, 0}), 1.0, true);
    CHECK((active - mat({{0, 0}, {0, 1}})).cwiseAbs().maxCoeff() == 0.0);

    const Matrix half = step_jacobian(vec({1, 0}), 0.5, true);
    CHECK((half - mat({{0.5, 0}, {0, 1}})).cwiseAbs().maxCoeff() == 0.0);

    const Matrix inactive = step_jacobian(vec({1, 0}), 1.0, false);
    CHECK((inactive - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(step_jacobian(vec({0, 0}), 1.0, true), std::invalid_argument);
  }

  TEST_CASE("active step norm is max(|1 - delta|, 1) for random rows") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 25; ++trial) {
      Vector a(5);
      for (Index i = 0; i < a.size(); ++i) a[i] = normal(rng);
      for (const double delta : {0.1, 0.5, 1.0, 1.5, 1.9}) {
        const double norm = spectral_norm(step_jacobian(a, delta, true));
        CHECK(std::abs(norm - std::max(std::abs(1.0 - delta), 1.0)) < 1e-10);
      }
    }
  }

  TEST_CASE("half-space path derivative is the hand formula") {
    ConstraintSystem sys;
    sys.A = mat({{1, 0}});
    sys.b = vec({0});
    sys.C.resize(0, 2);
    sys.d.resize(0);
    sys.y0 = vec({2, 0});

    const auto [res, path] = path_jacobian(sys, grad_config(0));
    CHECK(testutil::max_abs_diff(res.z_star, vec({0, 0})) == 0.0);
    CHECK((path.J - mat({{0, 0}, {0, 1}})).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE(!path.steps.empty());
    CHECK(path.steps.front().moved);
    CHECK(path.steps.front().residual == doctest::Approx(2.0));
  }

  TEST_CASE("a feasible start without equalities has identity sensitivity") {
    ConstraintSystem sys = testutil::box2d();
    sys.y0 = vec({0.2, 0.3});
    const auto [res, path] = path_jacobian(sys, grad_config(1));
    CHECK(res.termination == Termination::AlreadyFeasible);
    CHECK(path.steps.empty());
    CHECK((path.J - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("replaying the recorded path reproduces z* bit-exactly") {
    const ConstraintSystem sys = small_mixed(3);
    const SkmConfig c = grad_config(3);

    const auto [res, path] = path_jacobian(sys, c);
    REQUIRE(res.termination == Termination::Converged);
    bool followed = false;
    const Vector replay = replay_path(sys, c, path.steps, *sys.y0, nullptr, &followed);
    CHECK(followed);
    CHECK(testutil::max_abs_diff(replay, res.z_star) == 0.0);
  }

  TEST_CASE("on a cap the differentiated point is the final iterate") {
    const ConstraintSystem sys = small_mixed(4, 100.0);
    SkmConfig c = grad_config(4);
    c.delta = 0.5;  // under-relaxation never lands exactly on a boundary
    c.tolerance = 1e-12;
    c.max_iters = 7;  // forces the cap

    const auto [res, path] = path_jacobian(sys, c);
    REQUIRE(res.termination == Termination::IterationCap);
    CHECK(path.steps.size() == 7);
    const Vector replay = replay_path(sys, c, path.steps, *sys.y0);
    CHECK(testutil::max_abs_diff(replay, res.z_star) == 0.0);
  }

  TEST_CASE("path jacobian matches fixed-path central differences") {
    const double eps = 1e-6;
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const ConstraintSystem sys = small_mixed(seed);
      const SkmConfig c = grad_config(seed);
      const auto [res, path] = path_jacobian(sys, c);
      if (path.at_boundary()) continue;

      const Index n = sys.num_vars();
      Matrix fd(n, n);
      bool in_cell = true;
      for (Index j = 0; j < n; ++j) {
        Vector e = Vector::Zero(n);
        e[j] = eps;
        bool fp = true, fm = true;
        const Vector zp = replay_path(sys, c, path.steps, *sys.y0 + e, nullptr, &fp, 1e-13);
        const Vector zm = replay_path(sys, c, path.steps, *sys.y0 - e, nullptr, &fm, 1e-13);
        fd.col(j) = (zp - zm) / (2.0 * eps);
        in_cell = in_cell && fp && fm;
      }
      if (!in_cell) continue;

      const double rel = (path.J - fd).cwiseAbs().maxCoeff() /
                         std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK(rel <= 1e-5);
      ++checked;
    }
    CHECK(checked >= 6);  // most seeds must actually exercise the comparison
  }

  TEST_CASE("spectral norm stays within the recorded gain budget") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const ConstraintSystem sys = small_mixed(seed, 5.0);
      const auto [res, path] = path_jacobian(sys, grad_config(seed));
      CHECK(spectral_norm(path.J) <= 1.0 + path.gain_total + 1e-9);

      // The b-sensitivity contribution grows at most linearly in the number
      // of steps: each moved step adds one bounded gain term.
      double max_gain = 0.0;
      for (const auto& s : path.steps) max_gain = std::max(max_gain, s.gain);
      CHECK(path.gain_total <= static_cast<double>(path.steps.size()) * max_gain + 1e-12);
    }
  }

  TEST_CASE("deterministic regime: one path equals the finite difference") {
    // beta = p removes sampling randomness, so a single path is the whole
    // expectation.
    ConstraintSystem sys = small_mixed(6);
    SkmConfig c = grad_config(6);
    c.beta = 6;

    const Vector probe = Vector::Ones(6).normalized();
    const GradientCheckReport report =
        expected_gradient_check(sys, c, 1, probe, 1e-6);
    REQUIRE(report.paths_used == 1);
    CHECK(report.per_path.front().rel_error <= 1e-5);
    CHECK(report.passed());
  }

  TEST_CASE("expected gradient check passes on a random mixed instance") {
    const ConstraintSystem sys = small_mixed(7);
    const Vector probe = Vector::Ones(6).normalized();
    const GradientCheckReport report =
        expected_gradient_check(sys, grad_config(7), 200, probe, 1e-6);
    CHECK(report.paths_used + report.paths_excluded == 200);
    CHECK(report.paths_used > 100);
    CHECK(report.passed());
  }

  TEST_CASE("gradient variance is finite and stable under doubling") {
    const ConstraintSystem sys = small_mixed(8);
    const SkmConfig base = grad_config(8);
    const Vector probe = Vector::Ones(6).normalized();

    auto variance_of = [&](int paths) {
      std::vector<Vector> grads;
      for (int i = 0; i < paths; ++i) {
        SkmConfig c = base;
        c.seed = base.seed ^ static_cast<std::uint64_t>(i);
        grads.push_back(path_jacobian(sys, c).second.J * probe);
      }
      Vector mean = Vector::Zero(6);
      for (const auto& g : grads) mean += g;
      mean /= static_cast<double>(grads.size());
      double var = 0.0;
      for (const auto& g : grads) var += (g - mean).squaredNorm();
      return var / static_cast<double>(grads.size() - 1);
    };

    const double v250 = variance_of(250);
    const double v500 = variance_of(500);
    CHECK(std::isfinite(v250));
    CHECK(std::isfinite(v500));
    // Stable estimate: doubling the sample moves the value by < 3x.
    if (v250 > 1e-12 && v500 > 1e-12) {
      CHECK(v500 / v250 < 3.0);
      CHECK(v250 / v500 < 3.0);
    }
  }

  TEST_CASE("momentum variants have no path derivatives") {
    ConstraintSystem sys = small_mixed(9);
    SkmConfig c = grad_config(9);
    c.variant = Variant::Mskm;
    CHECK_THROWS_AS(path_jacobian(sys, c), std::invalid_argument);
    CHECK_THROWS_AS(
        expected_gradient_check(sys, c, 10, Vector::Ones(6).normalized(), 1e-6),
        std::invalid_argument);
  }

  TEST_CASE("gradient check validates its own inputs") {
    ConstraintSystem sys = small_mixed(10);
    const SkmConfig c = grad_config(10);
    const Vector probe = Vector::Ones(6).normalized();
    CHECK_THROWS_WITH_AS(expected_gradient_check(sys, c, 10, probe, 0.0),
                         "eps must be positive", std::invalid_argument);
    CHECK_THROWS_AS(expected_gradient_check(sys, c, 0, probe, 1e-6),
                    std::invalid_argument);
    CHECK_THROWS_AS(expected_gradient_check(sys, c, 10, Vector::Ones(3), 1e-6),
                    std::invalid_argument);
  }
}
