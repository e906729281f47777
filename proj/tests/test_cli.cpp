#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <skm/generators.hpp>
#include <skm/io.hpp>

#include "test_util.hpp"

using namespace skm;
using testutil::mat;
using testutil::run_process;
using testutil::TempDir;
using testutil::vec;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Blanks a CSV column (0-based) so timing fields don't break byte compares.
std::string mask_column(const std::string& csv, std::size_t column) {
  std::string out;
  std::istringstream lines(csv);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    if (header) {
      out += line + "\n";
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream cell_stream(line);
    std::string cell;
    while (std::getline(cell_stream, cell, ',')) cells.push_back(cell);
    if (column < cells.size()) cells[column] = "X";
    for (std::size_t i = 0; i < cells.size(); ++i)
      out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

ConstraintSystem toy_mixed() {
  ConstraintSystem sys;
  sys.A = mat({{-1, 0}});
  sys.b = vec({-0.8});
  sys.C = mat({{1, 1}});
  sys.d = vec({1});
  sys.y0 = vec({0, 0});
  return sys;
}

ConstraintSystem toy_halfspace() {
  ConstraintSystem sys;
  sys.A = mat({{1, 0}});
  sys.b = vec({0});
  sys.C.resize(0, 2);
  sys.d.resize(0);
  sys.y0 = vec({2, 0});
  return sys;
}

#define REQUIRE_CLI()                                   \
  do {                                                  \
    if (g_cli_path.empty()) {                           \
      MESSAGE("cli binary not built; skipping");        \
      return;                                           \
    }                                                   \
  } while (0)

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("project: feasible input returns immediately with exit 0") {
    REQUIRE_CLI();
    TempDir dir;
    ConstraintSystem sys = testutil::box2d();
    sys.y0 = vec({0.25, 0.5});
    save_system(sys, dir.file("in.json"));

    const auto res = run_process(g_cli_path + " project --input " + dir.file("in.json"));
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("termination: already_feasible") != std::string::npos);
    CHECK(res.output.find("iterations: 0") != std::string::npos);
  }

  TEST_CASE("project: solves a mixed file and writes reproducible JSON") {
    REQUIRE_CLI();
    TempDir dir;
    save_system(toy_mixed(), dir.file("in.json"));
    const std::string cmd = g_cli_path + " project --input " + dir.file("in.json") +
                            " --output " + dir.file("out.json") + " --seed 5";

    const auto first = run_process(cmd);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("termination: converged") != std::string::npos);
    const std::string json1 = read_file(dir.file("out.json"));

    const auto second = run_process(cmd);
    CHECK(second.output == first.output);
    CHECK(read_file(dir.file("out.json")) == json1);

    CHECK(json1.find("\"z_star\"") != std::string::npos);
    CHECK(json1.find("\"termination\": \"converged\"") != std::string::npos);
  }

  TEST_CASE("project: out-of-range delta exits 1 with the documented message") {
    REQUIRE_CLI();
    TempDir dir;
    save_system(toy_mixed(), dir.file("in.json"));
    const auto res = run_process(g_cli_path + " project --input " + dir.file("in.json") +
                                 " --delta 2.5");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("delta must be in (0,2)") != std::string::npos);
  }

  TEST_CASE("project: bad inputs exit 1") {
    REQUIRE_CLI();
    TempDir dir;
    const auto missing =
        run_process(g_cli_path + " project --input " + dir.file("nope.json"));
    CHECK(missing.exit_code == 1);

    std::ofstream(dir.file("broken.json")) << "{ not json";
    const auto broken =
        run_process(g_cli_path + " project --input " + dir.file("broken.json"));
    CHECK(broken.exit_code == 1);

    const auto no_cmd = run_process(g_cli_path);
    CHECK(no_cmd.exit_code != 0);

    save_system(toy_mixed(), dir.file("in.json"));
    const auto bad_variant = run_process(
        g_cli_path + " project --input " + dir.file("in.json") + " --variant turbo");
    CHECK(bad_variant.exit_code == 1);
  }

  TEST_CASE("project: hitting the cap exits 2") {
    REQUIRE_CLI();
    TempDir dir;
    ConstraintSystem sys = gen_feasible_mixed(10, 8, 3, 5);
    sys.y0 = gen_infeasible_start(sys, 6, 100.0);
    save_system(sys, dir.file("in.json"));
    const auto res = run_process(g_cli_path + " project --input " + dir.file("in.json") +
                                 " --max-iters 2 --tol 1e-12");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("termination: iteration_cap") != std::string::npos);
  }

  TEST_CASE("sweep: csv shape, oracle column and ordering") {
    REQUIRE_CLI();
    TempDir dir;
    const auto res = run_process(
        g_cli_path + " sweep --param delta --values 1.5,0.5 --dims 18,8 --trials 2" +
        " --seed 3 --csv " + dir.file("sweep.csv"));
    CHECK(res.exit_code == 0);

    const std::string csv = read_file(dir.file("sweep.csv"));
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line ==
          "param_value,dim,trial,iterations,wall_time_ns,max_violation,"
          "distance_moved,oracle_distance");

    std::vector<std::vector<std::string>> rows;
    while (std::getline(lines, line)) {
      std::vector<std::string> cells;
      std::istringstream cs(line);
      std::string cell;
      while (std::getline(cs, cell, ',')) cells.push_back(cell);
      if (cells.size() == 7) cells.push_back("");  // trailing empty oracle cell
      REQUIRE(cells.size() == 8);
      rows.push_back(cells);
    }
    REQUIRE(rows.size() == 2 * 2 * 2);  // values x dims x trials

    // Sorted by (value, dim, trial) despite the flags listing 1.5 first.
    CHECK(rows[0][0] == "0.5");
    CHECK(rows[0][1] == "8");
    CHECK(rows[0][2] == "0");
    CHECK(rows[7][0] == "1.5");
    CHECK(rows[7][1] == "18");

    for (const auto& cells : rows) {
      if (cells[1] == "8") CHECK(!cells[7].empty());   // oracle-sized
      if (cells[1] == "18") CHECK(cells[7].empty());   // beyond the oracle budget
    }
  }

  TEST_CASE("sweep: zero trials still writes the header") {
    REQUIRE_CLI();
    TempDir dir;
    const auto res = run_process(
        g_cli_path + " sweep --param delta --values 1.0 --dims 8 --trials 0 --csv " +
        dir.file("empty.csv"));
    CHECK(res.exit_code == 0);
    CHECK(read_file(dir.file("empty.csv")) ==
          "param_value,dim,trial,iterations,wall_time_ns,max_violation,"
          "distance_moved,oracle_distance\n");
  }

  TEST_CASE("sweep: range syntax expands inclusively and reruns are identical") {
    REQUIRE_CLI();
    TempDir dir;
    const std::string cmd =
        g_cli_path + " sweep --param delta --values 0.5:1.5:0.5 --dims 8 --trials 2" +
        " --seed 11 --csv " + dir.file("a.csv");
    CHECK(run_process(cmd).exit_code == 0);
    const std::string a = read_file(dir.file("a.csv"));
    CHECK(a.find("\n0.5,") != std::string::npos);
    CHECK(a.find("\n1,") != std::string::npos);
    CHECK(a.find("\n1.5,") != std::string::npos);

    const std::string cmd_b =
        g_cli_path + " sweep --param delta --values 0.5:1.5:0.5 --dims 8 --trials 2" +
        " --seed 11 --csv " + dir.file("b.csv");
    CHECK(run_process(cmd_b).exit_code == 0);
    CHECK(mask_column(a, 4) == mask_column(read_file(dir.file("b.csv")), 4));
  }

  TEST_CASE("sweep: beta values must be integral") {
    REQUIRE_CLI();
    TempDir dir;
    const auto res = run_process(
        g_cli_path + " sweep --param beta --values 1.5 --dims 8 --trials 1 --csv " +
        dir.file("x.csv"));
    CHECK(res.exit_code == 1);
  }

  TEST_CASE("bench: one row per mode on matched instances") {
    REQUIRE_CLI();
    TempDir dir;
    const std::string cmd = g_cli_path +
                            " bench --modes tskm,naive --dims 8 --trials 1 --seed 2" +
                            " --csv " + dir.file("bench.csv");
    const auto res = run_process(cmd);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("tskm: median_iterations=") != std::string::npos);
    CHECK(res.output.find("naive: median_iterations=") != std::string::npos);

    const std::string csv = read_file(dir.file("bench.csv"));
    CHECK(csv.rfind("mode,dim,trial,iterations,wall_time_ns,max_ineq_violation,"
                    "max_eq_violation\n",
                    0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

    CHECK(run_process(cmd).exit_code == 0);
    CHECK(mask_column(csv, 4) == mask_column(read_file(dir.file("bench.csv")), 4));
  }

  TEST_CASE("gradcheck: half-space toy passes exactly") {
    REQUIRE_CLI();
    TempDir dir;
    save_system(toy_halfspace(), dir.file("hs.json"));
    const std::string cmd = g_cli_path + " gradcheck --input " + dir.file("hs.json") +
                            " --paths 25 --csv " + dir.file("g.csv");
    const auto res = run_process(cmd);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("per_path_check: pass") != std::string::npos);
    CHECK(res.output.find("expectation_check: pass") != std::string::npos);
    CHECK(res.output.find("paths_excluded: 0") != std::string::npos);

    const std::string csv = read_file(dir.file("g.csv"));
    CHECK(csv.rfind("path,rel_error,excluded\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);

    CHECK(run_process(cmd).exit_code == 0);
    CHECK(read_file(dir.file("g.csv")) == csv);  // no timing column: exact bytes
  }

  TEST_CASE("gradcheck: duplicated rows are flagged and excluded") {
    REQUIRE_CLI();
    TempDir dir;
    ConstraintSystem sys;
    sys.A = mat({{1, 0}, {1, 0}});
    sys.b = vec({0, 0});
    sys.C.resize(0, 2);
    sys.d.resize(0);
    sys.y0 = vec({2, 0});
    save_system(sys, dir.file("dup.json"));

    const auto res = run_process(g_cli_path + " gradcheck --input " + dir.file("dup.json") +
                                 " --paths 40 --seed 1");
    CHECK(res.output.find("paths_excluded: 0") == std::string::npos);
    CHECK(res.output.find("paths_excluded:") != std::string::npos);
  }

  TEST_CASE("gradcheck: eps must be positive") {
    REQUIRE_CLI();
    TempDir dir;
    save_system(toy_halfspace(), dir.file("hs.json"));
    const auto res = run_process(g_cli_path + " gradcheck --input " + dir.file("hs.json") +
                                 " --eps 0");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("eps must be positive") != std::string::npos);
  }
}
