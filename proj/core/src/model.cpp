#include "skm/types.hpp"

#include <algorithm>
#include <sstream>

namespace skm {
namespace {

bool all_finite(const Matrix& m) { return m.size() == 0 || m.allFinite(); }

}  // namespace

Index ConstraintSystem::num_vars() const {
  // The constraint blocks own the variable count; y0 is only consulted when
  // both blocks are completely absent, so a missized y0 is reported as such.
  const Index from_blocks = std::max(A.cols(), C.cols());
  if (from_blocks > 0) return from_blocks;
  return y0 ? y0->size() : 0;
}

Vector ConstraintSystem::start_point() const {
  return y0 ? *y0 : Vector::Zero(num_vars());
}

std::string Violation::describe() const {
  std::ostringstream out;
  switch (code) {
    case Code::DimensionMismatch:
      out << "dimension mismatch in " << field;
      break;
    case Code::ZeroInequalityRow:
      out << "zero inequality row";
      break;
    case Code::NonFiniteEntry:
      out << "non-finite entry in " << field;
      break;
  }
  if (index >= 0) out << " (row " << index << ")";
  return out.str();
}

std::vector<Violation> validate(const ConstraintSystem& system) {
  std::vector<Violation> found;
  const Index n = system.num_vars();

  auto mismatch = [&](const std::string& field) {
    found.push_back({Violation::Code::DimensionMismatch, field, -1});
  };

  if (system.A.rows() != system.b.size()) mismatch("b");
  if (system.C.rows() != system.d.size()) mismatch("d");
  // Any nonempty block must agree on the variable count.
  if (system.A.rows() > 0 && system.A.cols() != n) mismatch("A");
  if (system.C.rows() > 0 && system.C.cols() != n) mismatch("C");
  if (system.y0 && system.y0->size() != n) mismatch("y0");

  if (!all_finite(system.A)) found.push_back({Violation::Code::NonFiniteEntry, "A", -1});
  if (!all_finite(system.b)) found.push_back({Violation::Code::NonFiniteEntry, "b", -1});
  if (!all_finite(system.C)) found.push_back({Violation::Code::NonFiniteEntry, "C", -1});
  if (!all_finite(system.d)) found.push_back({Violation::Code::NonFiniteEntry, "d", -1});
  if (system.y0 && !all_finite(*system.y0))
    found.push_back({Violation::Code::NonFiniteEntry, "y0", -1});

  if (system.A.allFinite()) {
    for (Index i = 0; i < system.A.rows(); ++i) {
      if (system.A.row(i).squaredNorm() <= kZeroRowFloor)
        found.push_back({Violation::Code::ZeroInequalityRow, "A", i});
    }
  }
  return found;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::IterationCap:
      return "iteration_cap";
    case Termination::AlreadyFeasible:
      return "already_feasible";
  }
  return "unknown";
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error([&violations] {
        std::string msg = "invalid constraint system:";
        for (const auto& v : violations) msg += " [" + v.describe() + "]";
        return msg;
      }()),
      violations_(std::move(violations)) {}

}  // namespace skm
