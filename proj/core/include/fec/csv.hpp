#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace fec {

// Shortest round-trip decimal form of a double (17 significant digits);
// infinities and NaN come out as inf/-inf/nan.
std::string fmt17(double v);

// Comma-separated output with '#' metadata lines before the header.
class CsvWriter {
public:
  explicit CsvWriter(const std::string& path);

  void comment(const std::string& text);
  void header(std::span<const std::string> names);
  void row(std::span<const double> values);
  // Mixed row: leading string cells, then numbers.
  void row(std::span<const std::string> cells, std::span<const double> values);

private:
  void end_preamble();
  std::ofstream out_;
  std::string path_;
  bool header_written_ = false;
};

}  // namespace fec
