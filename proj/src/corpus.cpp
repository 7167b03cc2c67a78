#include "dksr/corpus.hpp"

#include <cmath>
#include <string>

#include "dksr/rng.hpp"

namespace dksr::corpus {

using imgmath::ImageTensor;

ImageTensor make_image(const CorpusSpec& spec, std::uint64_t seed, int index) {
  Rng rng(derive_seed(seed, "corpus/" + std::to_string(index)));
  const int n = spec.size;
  ImageTensor img(n, n, 3);

  // Smooth background: tinted ramp along a random direction.
  const double b0 = rng.uniform(0.2, 0.8);
  const double b1 = rng.uniform(0.2, 0.8);
  const double ramp_angle = rng.uniform(0.0, 6.283185307179586);
  const double rc = std::cos(ramp_angle), rs = std::sin(ramp_angle);
  double tint[3];
  for (double& t : tint) t = rng.uniform(0.9, 1.1);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double u = 0.5 + 0.5 * ((x * rc + y * rs) / n);
      const double v = b0 + (b1 - b0) * u;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = v * tint[c];
    }

  const bool textured = rng.uniform() >= spec.flat_fraction;
  if (textured) {
    const int regions = rng.uniform_int(1, 3);
    for (int r = 0; r < regions; ++r) {
      const int rw = rng.uniform_int(n / 3, n);
      const int rh = rng.uniform_int(n / 3, n);
      const int x0 = static_cast<int>(rng.below(n - rw + 1));
      const int y0 = static_cast<int>(rng.below(n - rh + 1));

      // Oriented grating above the down4 Nyquist frequency (0.125 c/px).
      const double freq = rng.uniform(0.15, 0.35) * 6.283185307179586;
      const double theta = rng.uniform(0.0, 3.141592653589793);
      const double ct = std::cos(theta), st = std::sin(theta);
      const double phase = rng.uniform(0.0, 6.283185307179586);
      const double amp = rng.uniform(0.15, 0.3);
      double camp[3];
      for (double& a : camp) a = amp * rng.uniform(0.7, 1.0);

      for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) {
          const double s = std::sin(freq * (x * ct + y * st) + phase);
          for (int c = 0; c < 3; ++c) img.at(y, x, c) += camp[c] * s;
        }
    }
  }

  // Clamp, then snap to the 8-bit grid the PPM writer uses.
  for (double& v : img.data) v = imgmath::quantize8(v) / 255.0;
  return img;
}

std::vector<ImageTensor> make_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  std::vector<ImageTensor> images;
  images.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) images.push_back(make_image(spec, seed, i));
  return images;
}

}  // namespace dksr::corpus
