#include "mflab/records.hpp"

#include <charconv>

namespace mflab {

std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError("parse_double: bad literal '" + s + "'");
  return v;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& metrics)
    : path_(path), out_(path), columns_(metrics.size()) {
  if (!out_) throw IoError("csv: cannot open " + path);
  out_ << "t";
  for (const auto& m : metrics) out_ << "," << m;
  out_ << "\n";
  if (!out_) throw IoError("csv: write failed for " + path);
}

void CsvWriter::row(double t, const std::vector<double>& values) {
  if (values.size() != columns_)
    throw IoError("csv: row width mismatch for " + path_);
  out_ << format_double(t);
  for (double v : values) out_ << "," << format_double(v);
  out_ << "\n";
  if (!out_) throw IoError("csv: write failed for " + path_);
}

void CsvWriter::flush() { out_.flush(); }

JsonlWriter::JsonlWriter(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw IoError("jsonl: cannot open " + path);
}

void JsonlWriter::event(const std::map<std::string, std::string>& strings,
                        const std::map<std::string, double>& numbers) {
  out_ << "{";
  bool first = true;
  for (const auto& [k, v] : strings) {
    if (!first) out_ << ",";
    first = false;
    out_ << "\"" << k << "\":\"" << v << "\"";
  }
  for (const auto& [k, v] : numbers) {
    if (!first) out_ << ",";
    first = false;
    out_ << "\"" << k << "\":" << format_double(v);
  }
  out_ << "}\n";
  if (!out_) throw IoError("jsonl: write failed for " + path_);
}

}  // namespace mflab
