#include "dksr/resample.hpp"

#include <cmath>
#include <string>

#include "dksr/errors.hpp"

namespace dksr::imgmath {

double cubic_kernel(double x, double a) {
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace {

// Symmetric half-sample reflection: -1 -> 0, -2 -> 1, n -> n-1, ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

TapTable make_taps(int in_n, const ResampleSpec& spec) {
  const double s = spec.scale;
  const int out_n = static_cast<int>(std::llround(in_n * s));
  if (out_n < 1) throw data_error("output too small");

  const double kscale = (s < 1.0 && spec.antialias) ? 1.0 / s : 1.0;
  const double radius = 2.0 * kscale;

  TapTable t;
  t.in_n = in_n;
  t.out_n = out_n;
  t.support = static_cast<int>(std::ceil(radius * 2.0)) + 1;
  t.index.assign(static_cast<std::size_t>(out_n) * t.support, 0);
  t.weight.assign(static_cast<std::size_t>(out_n) * t.support, 0.0);

  for (int i = 0; i < out_n; ++i) {
    const double src = (i + 0.5) / s - 0.5;
    const int lo = static_cast<int>(std::ceil(src - radius));
    double sum = 0.0;
    double* w = &t.weight[static_cast<std::size_t>(i) * t.support];
    int* idx = &t.index[static_cast<std::size_t>(i) * t.support];
    for (int k = 0; k < t.support; ++k) {
      const int j = lo + k;
      const double wk = cubic_kernel((src - j) / kscale, spec.kernel_a);
      idx[k] = reflect_index(j, in_n);
      w[k] = wk;
      sum += wk;
    }
    if (std::fabs(sum) < 1e-12) throw numeric_error("degenerate resampling kernel");
    for (int k = 0; k < t.support; ++k) w[k] /= sum;
  }
  return t;
}

ImageTensor resample(const ImageTensor& img, const ResampleSpec& spec) {
  if (spec.scale <= 0.0) throw data_error("resample: scale must be positive");
  const TapTable tx = make_taps(img.width, spec);
  const TapTable ty = make_taps(img.height, spec);
  const int C = img.channels;

  // Width pass.
  ImageTensor mid(img.height, tx.out_n, C);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < tx.out_n; ++x) {
      const int* idx = &tx.index[static_cast<std::size_t>(x) * tx.support];
      const double* w = &tx.weight[static_cast<std::size_t>(x) * tx.support];
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int k = 0; k < tx.support; ++k) acc += w[k] * img.at(y, idx[k], c);
        mid.at(y, x, c) = acc;
      }
    }
  }

  // Height pass.
  ImageTensor out(ty.out_n, tx.out_n, C);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < ty.out_n; ++y) {
    const int* idx = &ty.index[static_cast<std::size_t>(y) * ty.support];
    const double* w = &ty.weight[static_cast<std::size_t>(y) * ty.support];
    for (int x = 0; x < tx.out_n; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int k = 0; k < ty.support; ++k) acc += w[k] * mid.at(idx[k], x, c);
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

ImageTensor resample_adjoint(const ImageTensor& grad_out, int in_h, int in_w,
                             const ResampleSpec& spec) {
  const TapTable tx = make_taps(in_w, spec);
  const TapTable ty = make_taps(in_h, spec);
  if (grad_out.width != tx.out_n || grad_out.height != ty.out_n)
    throw data_error("resample_adjoint: grad shape mismatch");
  const int C = grad_out.channels;

  // Height-pass adjoint first (reverse order of the forward passes).
  // Scatter loops stay serial per column of taps; parallelism is over the
  // independent output columns / rows being gathered into.
  ImageTensor mid(in_h, tx.out_n, C, 0.0);
  for (int y = 0; y < ty.out_n; ++y) {
    const int* idx = &ty.index[static_cast<std::size_t>(y) * ty.support];
    const double* w = &ty.weight[static_cast<std::size_t>(y) * ty.support];
    for (int k = 0; k < ty.support; ++k) {
      const int sy = idx[k];
      const double wk = w[k];
      for (int x = 0; x < tx.out_n; ++x)
        for (int c = 0; c < C; ++c) mid.at(sy, x, c) += wk * grad_out.at(y, x, c);
    }
  }

  ImageTensor gin(in_h, in_w, C, 0.0);
  for (int x = 0; x < tx.out_n; ++x) {
    const int* idx = &tx.index[static_cast<std::size_t>(x) * tx.support];
    const double* w = &tx.weight[static_cast<std::size_t>(x) * tx.support];
    for (int k = 0; k < tx.support; ++k) {
      const int sx = idx[k];
      const double wk = w[k];
      for (int y = 0; y < in_h; ++y)
        for (int c = 0; c < C; ++c) gin.at(y, sx, c) += wk * mid.at(y, x, c);
    }
  }
  return gin;
}

ImageTensor down4(const ImageTensor& img, double kernel_a, bool antialias) {
  ResampleSpec spec;
  spec.scale = 0.25;
  spec.kernel_a = kernel_a;
  spec.antialias = antialias;
  return resample(img, spec);
}

ImageTensor up4(const ImageTensor& img, double kernel_a) {
  ResampleSpec spec;
  spec.scale = 4.0;
  spec.kernel_a = kernel_a;
  spec.antialias = true;  // no effect when upsampling
  return resample(img, spec);
}

}  // namespace dksr::imgmath
