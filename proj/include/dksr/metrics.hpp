#pragma once

#include "dksr/image.hpp"

namespace dksr::imgmath {

inline constexpr double kPsnrCap = 100.0;  // returned when MSE < 1e-10

double mse(const ImageTensor& x, const ImageTensor& y);

// 10*log10(1/MSE), peak 1.0, capped at 100 dB so flat patches sort
// deterministically. Throws on dimension mismatch.
double psnr(const ImageTensor& x, const ImageTensor& y);

// Single-scale SSIM: 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// peak 1.0, averaged over valid window positions, per channel then over
// channels. Requires min(H, W) >= 11.
double ssim(const ImageTensor& x, const ImageTensor& y);

}  // namespace dksr::imgmath
