#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace mflab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Streaming CSV writer for probe time series: header "t,<metrics...>",
/// full double precision via shortest round-trip formatting. O(1) memory.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& metrics);
  void row(double t, const std::vector<double>& values);
  void flush();
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
};

/// Shortest round-trip decimal formatting of a double (parse(format(x))
/// bit-identical to x).
std::string format_double(double v);
double parse_double(const std::string& s);

/// Streaming JSONL event log: one JSON object per line.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void event(const std::map<std::string, std::string>& strings,
             const std::map<std::string, double>& numbers);

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace mflab
