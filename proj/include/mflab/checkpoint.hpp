#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/sde.hpp"

namespace mflab {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary layout: magic "MFCK1", version u32 LE, kind tag u32 LE
// (1 = ensemble, 2 = grid density), shape, then the payload as
// little-endian 64-bit floats in row-major order. decode(encode(x)) == x
// bit-exactly.

std::vector<std::uint8_t> encode_checkpoint(const ParticleEnsemble& e);
std::vector<std::uint8_t> encode_checkpoint(const GridDensity& m);

struct DecodedCheckpoint {
  int kind = 0;  // 1 ensemble, 2 grid
  ParticleEnsemble ensemble;
  GridDensity density;
};

DecodedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::string& path,
                           const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_checkpoint_file(const std::string& path);

/// One-line human summary (kind, shape, time) for `inspect`.
std::string describe_checkpoint(const std::vector<std::uint8_t>& bytes);

}  // namespace mflab
