#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iterreg/linop.hpp"
#include "iterreg/pdsolver.hpp"

namespace iterreg {

/// First line of every CSV the library writes for experiments and logs.
inline constexpr const char* kCsvVersionLine = "# iterreg-csv v1";

/// Plain numeric CSV; blank lines and lines starting with '#' are skipped.
RowMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const RowMatrix& m);

/// One value per line (a single-column or single-row file is accepted on read).
Vector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const std::filesystem::path& path, const Vector& v);

/// CSV of zero-based (i, j) pairs.
LinearOperator load_mask_csv(const std::filesystem::path& path, std::size_t p1, std::size_t p2);

/// Shortest text that round-trips the double; empty for NaN.
std::string format_number(double v);

/// k,res_clean,res_noisy,j_val,dist_ref,gap,bregman,res_avg_clean,dist_avg_ref,gap_avg
void write_log_csv(std::ostream& out, const IterateLog& log);
void write_log_csv(const std::filesystem::path& path, const IterateLog& log);

/// Versioned table writer: comment line, header, rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  void add_numbers(const std::vector<double>& cells);
  void write(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace iterreg
