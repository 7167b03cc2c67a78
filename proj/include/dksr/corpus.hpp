#pragma once

#include <cstdint>
#include <vector>

#include "dksr/image.hpp"

namespace dksr::corpus {

struct CorpusSpec {
  int count = 200;
  int size = 64;
  double flat_fraction = 0.3;  // images with no texture at all
};

// Procedural evaluation corpus: smooth ramp backgrounds, a subset of
// images carrying one to three oriented sinusoidal texture patches whose
// frequencies sit above the 4x-downsampling Nyquist limit, so textured
// crops score poorly under the bicubic round trip while flat crops hit
// the PSNR cap. Pixels are snapped to the 8-bit grid so in-memory use and
// the PPM files on disk agree exactly.
imgmath::ImageTensor make_image(const CorpusSpec& spec, std::uint64_t seed, int index);
std::vector<imgmath::ImageTensor> make_corpus(const CorpusSpec& spec, std::uint64_t seed);

}  // namespace dksr::corpus
