#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dksr::imgmath {

// H x W x C raster, row-major, doubles in [0,1]. Intermediate resampling
// values may leave the range; clamping happens only at explicit clamp points.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;  // 1 or 3
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t size() const { return data.size(); }
};

// Pixel values clamped to [0,1].
ImageTensor clamp01(const ImageTensor& img);

// Rec.601 luma; identity for single-channel images.
ImageTensor luminance(const ImageTensor& img);

// Square crop, caller guarantees bounds.
ImageTensor crop(const ImageTensor& img, int x0, int y0, int size);

// Binary PPM (P6) / PGM (P5), maxval 255. Quantization is
// round(clamp(v,0,1) * 255), reconstruction byte / 255.
std::uint8_t quantize8(double v);
void write_image(const ImageTensor& img, const std::string& path);
ImageTensor read_image(const std::string& path);

}  // namespace dksr::imgmath
