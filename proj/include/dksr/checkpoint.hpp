#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dksr::diffusion {

// Binary checkpoint: magic "DKSR", u16 version, length-prefixed UTF-8
// key=value config snapshot, u64 parameter count, then the flat f64
// parameter vector. All integers and floats little-endian.
struct Checkpoint {
  std::uint16_t version = 1;
  std::map<std::string, std::string> config;  // sorted keys, one per line
  std::vector<double> params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dksr::diffusion
