#include "skm/generators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace skm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Gaussian draws via Box-Muller on top of the raw mt19937_64 stream, so the
// generated data does not depend on library-specific distribution internals.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(rng_() >> 11) * 0x1p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = normal();
    return m;
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

void normalize_rows(Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (norm > 1e-12) {
      m.row(r) /= norm;
    } else {
      // Practically unreachable for Gaussian rows; keep the function total.
      m.row(r).setZero();
      m(r, r % m.cols()) = 1.0;
    }
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a, std::uint64_t salt_b) {
  return splitmix64(base ^ splitmix64(salt_a ^ splitmix64(salt_b)));
}

ConstraintSystem gen_feasible_mixed(Index n, Index p, Index q, std::uint64_t seed,
                                    double margin) {
  if (n < 1) throw std::invalid_argument("need at least one variable");
  if (p < 0 || q < 0) throw std::invalid_argument("row counts must be nonnegative");
  if (q >= n) throw std::invalid_argument("q must be smaller than n");
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be nonnegative");

  Draw draw(seed);
  const Vector witness = draw.normal_vector(n);

  ConstraintSystem sys;
  sys.C = draw.normal_matrix(q, n);
  normalize_rows(sys.C);
  sys.d = sys.C * witness;  // equalities hold exactly at the witness

  sys.A = draw.normal_matrix(p, n);
  normalize_rows(sys.A);
  sys.b = Vector(p);
  for (Index i = 0; i < p; ++i)
    sys.b[i] = sys.A.row(i).dot(witness) + margin + draw.uniform();

  sys.y0 = witness;
  return sys;
}

Vector gen_infeasible_start(const ConstraintSystem& system, std::uint64_t seed,
                            double violation_scale) {
  if (violation_scale < 0.0) throw std::invalid_argument("violation_scale must be nonnegative");
  const Vector anchor = system.start_point();
  if (violation_scale == 0.0) return anchor;
  if (system.num_inequalities() + system.num_equalities() == 0)
    throw std::invalid_argument("system has no constraints to violate");

  Draw draw(seed);
  Vector dir = draw.normal_vector(anchor.size());
  const double norm = dir.norm();
  if (norm > 1e-12) dir /= norm;
  else dir = Vector::Unit(anchor.size(), 0);

  auto violation_at = [&](double t) {
    const Vector z = anchor + t * dir;
    double v = 0.0;
    if (system.num_inequalities() > 0)
      v = std::max(v, (system.A * z - system.b).maxCoeff());
    if (system.num_equalities() > 0)
      v = std::max(v, (system.C * z - system.d).cwiseAbs().maxCoeff());
    return v;
  };

  // Walk outward until the violation clears the lower band edge, then
  // bisect into [0.75, 1.5] x scale (comfortably inside the promised
  // [0.5, 2] x scale).
  const double band_lo = 0.75 * violation_scale;
  const double band_hi = 1.5 * violation_scale;

  double hi = 1.0;
  int guard = 0;
  while (violation_at(hi) < band_lo) {
    hi *= 2.0;
    if (++guard > 200)
      throw std::runtime_error("direction does not reach the requested violation");
  }

  double lo = 0.0;
  double t = hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double v = violation_at(t);
    if (v >= band_lo && v <= band_hi) break;
    if (v < band_lo) lo = t;
    else hi = t;
    t = 0.5 * (lo + hi);
  }
  return anchor + t * dir;
}

QpFamily gen_qp_family(Index n_var, Index n_eq, Index n_ineq, std::uint64_t seed) {
  if (n_var < 1) throw std::invalid_argument("need at least one variable");
  if (n_eq < 0 || n_ineq < 0) throw std::invalid_argument("row counts must be nonnegative");
  if (n_eq >= n_var) throw std::invalid_argument("n_eq must be smaller than n_var");

  Draw draw(seed);
  QpFamily fam;

  // Gram matrix plus a ridge keeps Q safely positive definite at any size.
  const Matrix F = draw.normal_matrix(n_var, n_var);
  fam.Q = F.transpose() * F / static_cast<double>(n_var) +
          0.5 * Matrix::Identity(n_var, n_var);
  fam.p_vec = draw.normal_vector(n_var);
  fam.witness = draw.normal_vector(n_var);

  fam.A = draw.normal_matrix(n_eq, n_var);
  normalize_rows(fam.A);
  fam.G = draw.normal_matrix(n_ineq, n_var);
  normalize_rows(fam.G);
  fam.h = Vector(n_ineq);
  for (Index i = 0; i < n_ineq; ++i)
    fam.h[i] = fam.G.row(i).dot(fam.witness) + 0.1 + draw.uniform();
  return fam;
}

ConstraintSystem qp_constraint_system(const QpFamily& family, const Vector& x) {
  if (x.size() != family.A.rows())
    throw std::invalid_argument("parameter x has the wrong dimension");
  ConstraintSystem sys;
  sys.A = family.G;
  sys.b = family.h;
  sys.C = family.A;
  sys.d = x;
  sys.y0 = family.witness;
  return sys;
}

}  // namespace skm
