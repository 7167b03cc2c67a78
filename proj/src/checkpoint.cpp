#include "dksr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "dksr/errors.hpp"

namespace dksr::diffusion {

namespace {

constexpr char kMagic[4] = {'D', 'K', 'S', 'R'};

template <typename T>
void write_le(std::ostream& out, T value) {
  // Byte-by-byte so the file is little-endian regardless of host order.
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
#endif
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
#endif
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open checkpoint for writing: " + path);
  f.write(kMagic, 4);
  write_le<std::uint16_t>(f, ckpt.version);

  std::string cfg;
  for (const auto& [k, v] : ckpt.config) cfg += k + "=" + v + "\n";
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(cfg.size()));
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  write_le<std::uint64_t>(f, ckpt.params.size());
  for (double v : ckpt.params) write_le<double>(f, v);
  if (!f) throw data_error("short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw data_error("checkpoint magic mismatch: " + path);

  Checkpoint ckpt;
  ckpt.version = read_le<std::uint16_t>(f);
  if (ckpt.version != 1)
    throw data_error("unsupported checkpoint version " + std::to_string(ckpt.version));

  const auto cfg_len = read_le<std::uint32_t>(f);
  std::string cfg(cfg_len, '\0');
  f.read(cfg.data(), cfg_len);
  if (!f) throw data_error("truncated checkpoint config: " + path);
  std::istringstream ss(cfg);
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw data_error("malformed checkpoint config line: " + line);
    ckpt.config[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const auto count = read_le<std::uint64_t>(f);
  ckpt.params.resize(count);
  for (auto& v : ckpt.params) v = read_le<double>(f);
  if (!f) throw data_error("truncated checkpoint parameters: " + path);
  return ckpt;
}

}  // namespace dksr::diffusion
