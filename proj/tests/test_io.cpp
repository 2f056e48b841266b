#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "mflab/checkpoint.hpp"
#include "mflab/config.hpp"
#include "mflab/records.hpp"

using namespace mflab;

TEST_CASE("config: defaults, required scenario, validation") {
  CHECK_THROWS_AS(parse_config_text(""), ConfigError);

  const RunConfig c = parse_config_text("scenario = \"vortex_entropy_decay\"\n");
  CHECK(c.scenario == "vortex_entropy_decay");
  CHECK(c.dt == 1e-3);
  CHECK(c.grid_n == 128);
  CHECK(c.seed == 1);

  // out-of-range values name the key
  try {
    parse_config_text("scenario = \"x\"\ndt = -0.1\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }
  // unknown keys rejected with line number
  try {
    parse_config_text("scenario = \"x\"\nbogus = 3\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  // syntax error carries the line
  try {
    parse_config_text("scenario = \"x\"\nnot a pair\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  // comments and blank lines
  const RunConfig c2 = parse_config_text(
      "# a comment\n\nscenario = \"a\"  # trailing\nN = 256\n");
  CHECK(c2.N == 256);
}

TEST_CASE("config round-trip property") {
  // deterministic pseudo-random configs
  for (int k = 0; k < 50; ++k) {
    RunConfig c;
    c.scenario = k % 2 ? "vortex_poc_scaling" : "bakry_emery_gaussian";
    c.N = 1 + (k * 131) % 9001;
    c.dt = std::ldexp(1.0 + 1e-3 * k, -(k % 18) - 2);
    c.T = 0.25 * (1 + k % 9);
    c.grid_n = 1 << (3 + k % 6);
    c.L_box = 1.0 + 0.5 * (k % 10);
    c.eps = (k % 4) * 0.0625;
    c.sigma = 0.5 * (k % 5);
    c.kappa_U = 0.5 + 0.25 * (k % 7);
    c.M_norm = 0.25 * (k % 8);
    c.seed = 0xdeadbeefULL * (k + 1);
    c.workers = k % 9;
    c.out_dir = "out_" + std::to_string(k);
    c.emit_plots = k % 3 == 0;
    const RunConfig back = parse_config_text(serialize_config(c));
    CHECK(back == c);
  }
}

TEST_CASE("csv: header-only, round-trip values, streaming") {
  const std::string path = "/tmp/mflab_test.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.row(0.125, {1.0 / 3.0, -2.718281828459045});
    w.row(0.25, {5e-324, 1.7976931348623157e308});
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,a,b");
  std::getline(in, line);
  const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
  CHECK(parse_double(line.substr(0, c1)) == 0.125);
  const double a = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
  const double third = 1.0 / 3.0;
  CHECK(std::memcmp(&a, &third, 8) == 0);
  std::getline(in, line);
  const auto d1 = line.find(',');
  const auto d2 = line.find(',', d1 + 1);
  CHECK(parse_double(line.substr(d1 + 1, d2 - d1 - 1)) == 5e-324);
  std::filesystem::remove(path);
}

TEST_CASE("csv: empty stream leaves a header-only file") {
  const std::string path = "/tmp/mflab_empty.csv";
  { CsvWriter w(path, {"x"}); }
  std::ifstream in(path);
  std::string line;
  CHECK(std::getline(in, line));
  CHECK(line == "t,x");
  CHECK_FALSE(std::getline(in, line));
  std::filesystem::remove(path);
}

TEST_CASE("jsonl events") {
  const std::string path = "/tmp/mflab_events.jsonl";
  {
    JsonlWriter w(path);
    w.event({{"kind", "collision"}}, {{"i", 3}, {"j", 7}, {"t", 0.5}});
    w.event({{"kind", "merge"}}, {{"pair", 11}});
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("\"kind\":\"collision\"") != std::string::npos);
  CHECK(line.find("\"i\":3") != std::string::npos);
  std::getline(in, line);
  CHECK(line.find("merge") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: round-trip, magic, truncation, fixture") {
  ParticleEnsemble e(5, 2, 0x12345678);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 2; ++k) e.positions(i, k) = 0.1 * i - 0.7 * k;
  e.t = 1.5;
  e.step = 42;
  const auto bytes = encode_checkpoint(e);
  CHECK(std::memcmp(bytes.data(), "MFCK1", 5) == 0);

  const auto dec = decode_checkpoint(bytes);
  CHECK(dec.kind == 1);
  CHECK((dec.ensemble.positions.array() == e.positions.array()).all());
  CHECK(encode_checkpoint(dec.ensemble) == bytes);

  auto bad = bytes;
  bad[2] = 'Z';
  CHECK_THROWS_AS(decode_checkpoint(bad), CheckpointError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), CheckpointError);

  // committed byte-level fixture: layout stability guard
  const auto fixture = read_checkpoint_file(std::string(MFLAB_SOURCE_DIR) + "/tests/data/ensemble_fixture.mfck");
  const auto fdec = decode_checkpoint(fixture);
  CHECK(fdec.kind == 1);
  CHECK(fdec.ensemble.N == 3);
  CHECK(fdec.ensemble.d == 2);
  CHECK(fdec.ensemble.t == 0.75);
  CHECK(fdec.ensemble.rng.seed == 7);
  CHECK(fdec.ensemble.step == 5);
  CHECK(fdec.ensemble.positions(0, 0) == 0.5);
  CHECK(fdec.ensemble.positions(2, 1) == -1.25);
  // re-encoding reproduces the committed bytes exactly
  CHECK(encode_checkpoint(fdec.ensemble) == fixture);
}

TEST_CASE("checkpoint: grid density round-trip") {
  const GridSpec g{2, 16, 2.0};
  GridDensity m = gaussian_density(g, Eigen::VectorXd::Zero(2), 0.5);
  m.t = 3.25;
  const auto b = encode_checkpoint(m);
  const auto d = decode_checkpoint(b);
  CHECK(d.kind == 2);
  CHECK(d.density.spec == g);
  CHECK((d.density.v == m.v).all());
  CHECK(d.density.t == m.t);
  CHECK(describe_checkpoint(b).find("grid density") != std::string::npos);
}
