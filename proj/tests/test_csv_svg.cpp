#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "iterreg/csv.hpp"
#include "iterreg/error.hpp"
#include "iterreg/svg.hpp"
#include "test_support.hpp"

using namespace iterreg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("numbers round-trip through text") {
  auto rng = testing_support::rng_for(1);
  const Vector v = testing_support::gaussian_vector(rng, 200, 1e3);
  for (double x : v) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(NAN).empty());
}

TEST_CASE("vector and matrix files round-trip") {
  const auto dir = fs::temp_directory_path() / "iterreg_test_csv";
  fs::create_directories(dir);
  auto rng = testing_support::rng_for(2);
  const Vector v = testing_support::gaussian_vector(rng, 17);
  write_vector_csv(dir / "v.csv", v);
  CHECK(read_vector_csv(dir / "v.csv") == v);
  const RowMatrix m = testing_support::gaussian_matrix(rng, 4, 6);
  write_matrix_csv(dir / "m.csv", m);
  CHECK(read_matrix_csv(dir / "m.csv") == m);
  CHECK_THROWS_AS(read_vector_csv(dir / "absent.csv"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("tables carry the version line and header") {
  CsvTable t({"a", "b"});
  t.add_numbers({1.0, 2.5});
  t.add_row({"x", ""});
  std::ostringstream out;
  t.write(out);
  CHECK(out.str() == std::string(kCsvVersionLine) + "\na,b\n1,2.5\nx,\n");
  CHECK_THROWS_AS(t.add_numbers({1.0}), ContractViolation);
}

TEST_CASE("log CSV leaves absent columns empty") {
  IterateLog log;
  LogRow row;
  row.k = 3;
  row.res_clean = 1.0;
  row.res_noisy = 2.0;
  row.j_val = 0.25;
  row.gap = 0.5;
  log.rows.push_back(row);
  std::ostringstream out;
  write_log_csv(out, log);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kCsvVersionLine);
  std::getline(in, line);
  CHECK(line == "k,res_clean,res_noisy,j_val,dist_ref,gap,bregman,res_avg_clean,dist_avg_ref,gap_avg");
  std::getline(in, line);
  CHECK(line == "3,1,2,0.25,,0.5,,,,");
}

TEST_CASE("line plot output") {
  const std::string svg = render_line_plot({"t", "k", "d", true}, {{"curve", {1, 2, 3}, {1.0, 0.1, 0.0}, false},
                                                                   {"marks", {2}, {0.1}, true}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("curve") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  // empty and non-finite input still yields a document
  const std::string empty = render_line_plot({"t", "x", "y", false}, {{"nan", {1}, {NAN}, false}});
  CHECK(empty.find("</svg>") != std::string::npos);
  const auto path = fs::temp_directory_path() / "iterreg_test_plot.svg";
  write_line_plot(path, {"t", "k", "d", false}, {{"c", {0, 1}, {0, 1}, false}});
  CHECK(slurp(path).find("</svg>") != std::string::npos);
  fs::remove(path);
}
