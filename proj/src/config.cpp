#include "mflab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mflab {

bool RunConfig::operator==(const RunConfig& o) const {
  return scenario == o.scenario && N == o.N && dt == o.dt && T == o.T &&
         grid_n == o.grid_n && L_box == o.L_box && eps == o.eps &&
         sigma == o.sigma && kappa_U == o.kappa_U && M_norm == o.M_norm &&
         seed == o.seed && workers == o.workers && out_dir == o.out_dir &&
         emit_plots == o.emit_plots;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& v, int line, const std::string& key) {
  double out;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e)
    fail(line, "value for '" + key + "' is not a number: " + v);
  return out;
}

void check_range(bool ok, int line, const std::string& key,
                 const std::string& what) {
  if (!ok)
    throw ConfigError("config line " + std::to_string(line) +
                      ": out-of-range value for '" + key + "' (" + what + ")");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  bool scenario_seen = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      // keep # inside quoted strings
      const auto q1 = line.find('"');
      if (q1 == std::string::npos || hash < q1) line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    if (val.empty()) fail(lineno, "empty value for '" + key + "'");

    auto str_value = [&]() -> std::string {
      if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
        return val.substr(1, val.size() - 2);
      fail(lineno, "expected quoted string for '" + key + "'");
    };

    if (key == "scenario") {
      c.scenario = str_value();
      scenario_seen = true;
    } else if (key == "out_dir") {
      c.out_dir = str_value();
    } else if (key == "emit_plots") {
      if (val == "true")
        c.emit_plots = true;
      else if (val == "false")
        c.emit_plots = false;
      else
        fail(lineno, "expected true/false for 'emit_plots'");
    } else if (key == "seed") {
      std::uint64_t s = 0;
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), s);
      if (ec != std::errc() || p != val.data() + val.size())
        fail(lineno, "value for 'seed' is not an unsigned integer");
      c.seed = s;
    } else if (key == "workers") {
      const double w = parse_number(val, lineno, key);
      check_range(w >= 0 && w == std::floor(w) && w <= 4096, lineno, key,
                  "integer in [0, 4096]");
      c.workers = static_cast<int>(w);
    } else if (key == "N") {
      c.N = parse_number(val, lineno, key);
      check_range(c.N >= 1 && c.N == std::floor(c.N), lineno, key,
                  "positive integer");
    } else if (key == "dt") {
      c.dt = parse_number(val, lineno, key);
      check_range(c.dt > 0, lineno, key, "must be > 0");
    } else if (key == "T") {
      c.T = parse_number(val, lineno, key);
      check_range(c.T > 0, lineno, key, "must be > 0");
    } else if (key == "grid_n") {
      c.grid_n = parse_number(val, lineno, key);
      const double n = c.grid_n;
      check_range(n >= 8 && n == std::floor(n) &&
                      (static_cast<long>(n) & (static_cast<long>(n) - 1)) == 0,
                  lineno, key, "power of two >= 8");
    } else if (key == "L_box") {
      c.L_box = parse_number(val, lineno, key);
      check_range(c.L_box > 0, lineno, key, "must be > 0");
    } else if (key == "eps") {
      c.eps = parse_number(val, lineno, key);
      check_range(c.eps >= 0, lineno, key, "must be >= 0");
    } else if (key == "sigma") {
      c.sigma = parse_number(val, lineno, key);
      check_range(c.sigma >= 0, lineno, key, "must be >= 0");
    } else if (key == "kappa_U") {
      c.kappa_U = parse_number(val, lineno, key);
      check_range(c.kappa_U > 0, lineno, key, "must be > 0");
    } else if (key == "M_norm") {
      c.M_norm = parse_number(val, lineno, key);
      check_range(c.M_norm >= 0, lineno, key, "must be >= 0");
    } else {
      fail(lineno, "unknown key '" + key + "'");
    }
  }
  if (!scenario_seen) throw ConfigError("config: required key 'scenario' missing");
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {
std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
}  // namespace

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "scenario = \"" << c.scenario << "\"\n";
  out << "N = " << fmt_double(c.N) << "\n";
  out << "dt = " << fmt_double(c.dt) << "\n";
  out << "T = " << fmt_double(c.T) << "\n";
  out << "grid_n = " << fmt_double(c.grid_n) << "\n";
  out << "L_box = " << fmt_double(c.L_box) << "\n";
  out << "eps = " << fmt_double(c.eps) << "\n";
  out << "sigma = " << fmt_double(c.sigma) << "\n";
  out << "kappa_U = " << fmt_double(c.kappa_U) << "\n";
  out << "M_norm = " << fmt_double(c.M_norm) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "workers = " << c.workers << "\n";
  out << "out_dir = \"" << c.out_dir << "\"\n";
  out << "emit_plots = " << (c.emit_plots ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace mflab
