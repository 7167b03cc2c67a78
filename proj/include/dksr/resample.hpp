#pragma once

#include <vector>

#include "dksr/image.hpp"

namespace dksr::imgmath {

// Cubic convolution kernel (Keys family), 4-tap support before antialias
// widening:
//   (a+2)|x|^3 - (a+3)|x|^2 + 1        for |x| <= 1
//   a|x|^3 - 5a|x|^2 + 8a|x| - 4a      for 1 < |x| < 2
//   0                                  otherwise
double cubic_kernel(double x, double a);

struct ResampleSpec {
  double scale = 1.0;     // > 0; < 1 downsamples
  double kernel_a = -0.5;
  bool antialias = true;  // widen kernel by 1/scale when downsampling
  // Boundary handling is symmetric reflection; weights are renormalized
  // to sum to 1 per output pixel after boundary folding.
};

// Per-output-pixel taps along one axis, indices already reflected into
// range and weights renormalized.
struct TapTable {
  int in_n = 0;
  int out_n = 0;
  int support = 0;                 // taps per output pixel
  std::vector<int> index;          // [out_n * support]
  std::vector<double> weight;      // [out_n * support]
};

TapTable make_taps(int in_n, const ResampleSpec& spec);

// Separable resize, width pass then height pass. Output dims are
// round(dim * scale); a degenerate output raises "output too small".
ImageTensor resample(const ImageTensor& img, const ResampleSpec& spec);

// Adjoint of resample as a linear map (same taps, scatter instead of
// gather). Used by gradient code; grad_out has the output dims of the
// matching forward resample.
ImageTensor resample_adjoint(const ImageTensor& grad_out, int in_h, int in_w,
                             const ResampleSpec& spec);

// The Eq.-1 style round trip: 4x down then 4x up.
ImageTensor down4(const ImageTensor& img, double kernel_a = -0.5, bool antialias = true);
ImageTensor up4(const ImageTensor& img, double kernel_a = -0.5);

}  // namespace dksr::imgmath
