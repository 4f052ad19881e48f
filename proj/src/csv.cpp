#include "iterreg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "iterreg/error.hpp"

namespace iterreg {

namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      if (b == std::string::npos) throw IoError(path.string() + ":" + std::to_string(lineno) + ": empty field");
      const std::string trimmed = cell.substr(b, e - b + 1);
      try {
        std::size_t used = 0;
        row.push_back(std::stod(trimmed, &used));
        if (used != trimmed.size()) throw std::invalid_argument(trimmed);
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + trimmed + "'");
      }
    }
    if (!rows.empty() && rows.front().size() != row.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

RowMatrix read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw IoError(path.string() + ": no data");
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const RowMatrix& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << "\n";
  }
}

Vector read_vector_csv(const std::filesystem::path& path) {
  const RowMatrix m = read_matrix_csv(path);
  if (m.cols() != 1 && m.rows() != 1) throw IoError(path.string() + ": expected a single row or column");
  return Eigen::Map<const Vector>(m.data(), m.size());
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
  auto out = open_out(path);
  for (double x : v) out << format_number(x) << "\n";
}

LinearOperator load_mask_csv(const std::filesystem::path& path, std::size_t p1, std::size_t p2) {
  const auto rows = read_rows(path);
  std::vector<GridIndex> observed;
  for (const auto& r : rows) {
    if (r.size() != 2) throw IoError(path.string() + ": mask rows must be i,j pairs");
    if (r[0] < 0 || r[1] < 0 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1]))
      throw IoError(path.string() + ": mask indices must be nonnegative integers");
    observed.push_back({static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1])});
  }
  return LinearOperator::mask(p1, p2, std::move(observed));
}

void write_log_csv(std::ostream& out, const IterateLog& log) {
  out << kCsvVersionLine << "\n"
      << "k,res_clean,res_noisy,j_val,dist_ref,gap,bregman,res_avg_clean,dist_avg_ref,gap_avg\n";
  for (const auto& r : log.rows) {
    out << r.k << "," << format_number(r.res_clean) << "," << format_number(r.res_noisy) << ","
        << format_number(r.j_val) << "," << opt(r.dist_ref) << "," << opt(r.gap) << "," << opt(r.bregman) << ","
        << opt(r.res_avg_clean) << "," << opt(r.dist_avg_ref) << "," << opt(r.gap_avg) << "\n";
  }
}

void write_log_csv(const std::filesystem::path& path, const IterateLog& log) {
  auto out = open_out(path);
  write_log_csv(out, log);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  require(cells.size() == header_.size(), "CsvTable: row width does not match header");
  rows_.push_back(cells);
}

void CsvTable::add_numbers(const std::vector<double>& cells) {
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (double c : cells) text.push_back(format_number(c));
  add_row(text);
}

void CsvTable::write(std::ostream& out) const {
  out << kCsvVersionLine << "\n";
  for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void CsvTable::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  write(out);
}

}  // namespace iterreg
