#include "dksr/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dksr/errors.hpp"

namespace dksr::imgmath {

ImageTensor clamp01(const ImageTensor& img) {
  ImageTensor out = img;
  for (double& v : out.data) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
  }
  return out;
}

ImageTensor luminance(const ImageTensor& img) {
  if (img.channels == 1) return img;
  ImageTensor out(img.height, img.width, 1);
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = &img.data[i * 3];
    out.data[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

ImageTensor crop(const ImageTensor& img, int x0, int y0, int size) {
  if (x0 < 0 || y0 < 0 || x0 + size > img.width || y0 + size > img.height)
    throw data_error("crop out of bounds");
  ImageTensor out(size, size, img.channels);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

std::uint8_t quantize8(double v) {
  if (v < 0.0) v = 0.0;
  if (v > 1.0) v = 1.0;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

void write_image(const ImageTensor& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw data_error("write_image: unsupported channel count");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open for writing: " + path);
  f << (img.channels == 3 ? "P6" : "P5") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<std::size_t>(x) * img.channels + c] = quantize8(img.at(y, x, c));
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw data_error("short write: " + path);
}

namespace {

int read_pnm_int(std::istream& in) {
  // Skips whitespace and '#' comments per the PNM grammar.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw data_error("truncated PNM header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw data_error("malformed PNM header");
  return value;
}

}  // namespace

ImageTensor read_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open: " + path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw data_error("unsupported image format (want P5/P6 PNM): " + path);
  const int channels = (m1 == '6') ? 3 : 1;
  const int w = read_pnm_int(f);
  const int h = read_pnm_int(f);
  const int maxval = read_pnm_int(f);
  if (w <= 0 || h <= 0) throw data_error("bad PNM dimensions: " + path);
  if (maxval != 255) throw data_error("only maxval 255 supported: " + path);
  // Header ends with exactly one whitespace byte, already consumed by
  // read_pnm_int's terminating get().
  ImageTensor img(h, w, channels);
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (f.gcount() != static_cast<std::streamsize>(raw.size()))
    throw data_error("truncated pixel data: " + path);
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

}  // namespace dksr::imgmath
