#pragma once

#include <vector>

#include "dksr/image.hpp"
#include "dksr/rng.hpp"

namespace dksr::testing {

inline imgmath::ImageTensor random_image(int h, int w, int c, Rng& rng) {
  imgmath::ImageTensor img(h, w, c);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

inline imgmath::ImageTensor constant_image(int h, int w, int c, double value) {
  return imgmath::ImageTensor(h, w, c, value);
}

// Period-2 checkerboard between lo and hi.
inline imgmath::ImageTensor checkerboard(int h, int w, int c, double lo = 0.0,
                                         double hi = 1.0) {
  imgmath::ImageTensor img(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) = ((x + y) % 2 == 0) ? lo : hi;
  return img;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace dksr::testing
