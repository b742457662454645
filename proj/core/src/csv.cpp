#include "fec/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace fec {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path), path_(path) {
  if (!out_) {
    throw std::runtime_error("cannot open output file: " + path);
  }
}

void CsvWriter::comment(const std::string& text) {
  if (header_written_) {
    throw std::logic_error("csv: comments must precede the header");
  }
  out_ << "# " << text << "\n";
}

void CsvWriter::header(std::span<const std::string> names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out_ << ',';
    out_ << names[i];
  }
  out_ << "\n";
  header_written_ = true;
}

void CsvWriter::row(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << fmt17(values[i]);
  }
  out_ << "\n";
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

void CsvWriter::row(std::span<const std::string> cells,
                    std::span<const double> values) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i || !cells.empty()) out_ << ',';
    out_ << fmt17(values[i]);
  }
  out_ << "\n";
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

}  // namespace fec
