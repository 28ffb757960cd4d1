#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace onlab {

// Shortest round-trippable representation is not needed; %.17g is exact and stable.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();
  void close();

 private:
  void sep();
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace onlab
