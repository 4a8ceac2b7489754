#pragma once

#include "dcgn/network.hpp"

#include <filesystem>
#include <iosfwd>

namespace dcgn {

inline constexpr char kCheckpointMagic[] = "CGMM1";

struct Checkpoint {
  NetworkParams network;
  MixtureParams mixture;
};

/// Binary layout: the 5-byte magic, a little-endian u32 layer count, then per
/// layer u32 rows, u32 cols, rows*cols row-major f64 weights and rows f64
/// biases; then alpha (K), mu (K x D row-major) and K covariances (D x D
/// row-major), all f64 little-endian. K and D are taken from the layers.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dcgn
