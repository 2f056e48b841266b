#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace mflab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Run configuration parsed from TOML-style key = value text. Unknown keys
/// are rejected; every numeric field has a documented default.
struct RunConfig {
  std::string scenario;  // required
  double N = 1024;
  double dt = 1e-3;
  double T = 2.0;
  double grid_n = 128;
  double L_box = 4.0;
  double eps = 0.125;
  double sigma = 1.0;
  double kappa_U = 1.0;
  double M_norm = 1.0;  // |M| for the vortex interaction
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = all available (or MFLAB_WORKERS)
  std::string out_dir = "out";
  bool emit_plots = false;

  bool operator==(const RunConfig& o) const;
};

/// Parse from TOML-syntax text (flat key = value pairs, # comments,
/// strings in double quotes, booleans, integers, floats). Errors carry
/// line numbers; unknown keys and out-of-range values are named.
RunConfig parse_config_text(const std::string& text);

/// Parse from a file path.
RunConfig parse_config_file(const std::string& path);

/// Serialize back to the config syntax; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& c);

}  // namespace mflab
