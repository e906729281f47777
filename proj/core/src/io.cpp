#include "skm/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace skm {
namespace {

using nlohmann::json;

json to_json_array(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json_rows(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json_array(m.row(i)));
  return out;
}

double as_number(const json& j, const char* field) {
  if (!j.is_number()) throw ParseError(std::string(field) + ": expected a number");
  return j.get<double>();
}

Vector parse_vector(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string(field) + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& elem : j) v[i++] = as_number(elem, field);
  return v;
}

// Rows-of-numbers layout; [] is accepted as an empty block whose column
// count is fixed up by the caller once the variable count is known.
Matrix parse_matrix(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string(field) + ": expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Matrix m(rows, 0);
  for (Index r = 0; r < rows; ++r) {
    Vector row = parse_vector(j[r], field);
    if (r == 0) {
      m.resize(rows, row.size());
    } else if (row.size() != m.cols()) {
      throw ParseError(std::string(field) + ": rows of unequal length");
    }
    m.row(r) = row;
  }
  return m;
}

const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing required key \"") + key + "\"");
  return *it;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("error while reading " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.good()) throw IoError("error while writing " + path.string());
}

}  // namespace

ConstraintSystem system_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level must be an object");

  ConstraintSystem sys;
  sys.A = parse_matrix(require(doc, "A"), "A");
  sys.b = parse_vector(require(doc, "b"), "b");
  sys.C = parse_matrix(require(doc, "C"), "C");
  sys.d = parse_vector(require(doc, "d"), "d");
  if (auto it = doc.find("y0"); it != doc.end() && !it->is_null())
    sys.y0 = parse_vector(*it, "y0");

  // Give empty blocks the shared column count so downstream shape checks
  // see a consistent system.
  const Index n = sys.num_vars();
  if (sys.A.rows() == 0) sys.A.resize(0, n);
  if (sys.C.rows() == 0) sys.C.resize(0, n);

  if (auto violations = validate(sys); !violations.empty())
    throw ValidationError(std::move(violations));
  return sys;
}

std::string to_json(const ConstraintSystem& system) {
  json doc;
  doc["A"] = to_json_rows(system.A);
  doc["b"] = to_json_array(system.b);
  doc["C"] = to_json_rows(system.C);
  doc["d"] = to_json_array(system.d);
  if (system.y0) doc["y0"] = to_json_array(*system.y0);
  return doc.dump(2) + "\n";
}

std::string to_json(const SolveResult& result) {
  json doc;
  doc["z_star"] = to_json_array(result.z_star);
  doc["w_final"] = to_json_array(result.w_final);
  doc["iterations"] = result.iterations;
  doc["max_ineq_violation"] = result.max_ineq_violation;
  doc["max_eq_violation"] = result.max_eq_violation;
  doc["termination"] = std::string(to_string(result.termination));
  doc["distance_moved"] = result.distance_moved;
  if (result.residual_trace) doc["residual_trace"] = *result.residual_trace;
  return doc.dump(2) + "\n";
}

ConstraintSystem load_system(const std::filesystem::path& path) {
  return system_from_json(read_file(path));
}

void save_system(const ConstraintSystem& system, const std::filesystem::path& path) {
  write_file(path, to_json(system));
}

void save_result(const SolveResult& result, const std::filesystem::path& path) {
  write_file(path, to_json(result));
}

}  // namespace skm
