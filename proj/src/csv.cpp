#include "onlab/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "onlab/error.hpp"

namespace onlab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) fail(ErrorKind::IoError, "cannot open " + path + " for writing");
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::sep() {
  if (in_row_ >= columns_) fail(ErrorKind::FormatError, "too many cells in a row of " + path_);
  if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  sep();
  out_ << s;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(long long v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) fail(ErrorKind::FormatError, "short row in " + path_);
  out_ << '\n';
  in_row_ = 0;
  if (!out_) fail(ErrorKind::IoError, "write failed for " + path_);
}

void CsvWriter::close() {
  out_.close();
  if (!out_) fail(ErrorKind::IoError, "close failed for " + path_);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace onlab
