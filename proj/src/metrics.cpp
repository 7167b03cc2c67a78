#include "dksr/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "dksr/errors.hpp"

namespace dksr::imgmath {

namespace {

void require_same_dims(const ImageTensor& x, const ImageTensor& y) {
  if (x.height != y.height || x.width != y.width || x.channels != y.channels)
    throw data_error("image dimension mismatch");
}

constexpr int kWin = 11;

std::array<double, kWin> gaussian11() {
  std::array<double, kWin> g{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable Gaussian: rows then columns. n_out = n - 10 per axis.
std::vector<double> gauss_valid(const std::vector<double>& in, int h, int w) {
  const auto g = gaussian11();
  const int ow = w - kWin + 1;
  const int oh = h - kWin + 1;
  std::vector<double> mid(static_cast<std::size_t>(h) * ow);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * in[static_cast<std::size_t>(y) * w + x + k];
      mid[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * mid[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mse(const ImageTensor& x, const ImageTensor& y) {
  require_same_dims(x, y);
  // Per-row partial sums, combined in row order: the result is independent
  // of the thread count.
  const int rows = x.height;
  const std::size_t stride = static_cast<std::size_t>(x.width) * x.channels;
  std::vector<double> row_sum(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* px = &x.data[r * stride];
    const double* py = &y.data[r * stride];
    double acc = 0.0;
    for (std::size_t i = 0; i < stride; ++i) {
      const double d = px[i] - py[i];
      acc += d * d;
    }
    row_sum[r] = acc;
  }
  double total = 0.0;
  for (int r = 0; r < rows; ++r) total += row_sum[r];
  return total / static_cast<double>(x.size());
}

double psnr(const ImageTensor& x, const ImageTensor& y) {
  const double m = mse(x, y);
  if (m < 1e-10) return kPsnrCap;
  return -10.0 * std::log10(m);
}

double ssim(const ImageTensor& x, const ImageTensor& y) {
  require_same_dims(x, y);
  if (x.height < kWin || x.width < kWin)
    throw data_error("image smaller than SSIM window");

  const double C1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
  const double C2 = 0.03 * 0.03;

  const int h = x.height, w = x.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const int oh = h - kWin + 1, ow = w - kWin + 1;
  const std::size_t on = static_cast<std::size_t>(oh) * ow;

  double channel_mean_sum = 0.0;
  std::vector<double> cx(n), cy(n), cxx(n), cyy(n), cxy(n);
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = x.data[i * x.channels + c];
      const double b = y.data[i * y.channels + c];
      cx[i] = a;
      cy[i] = b;
      cxx[i] = a * a;
      cyy[i] = b * b;
      cxy[i] = a * b;
    }
    const auto mu_x = gauss_valid(cx, h, w);
    const auto mu_y = gauss_valid(cy, h, w);
    const auto m_xx = gauss_valid(cxx, h, w);
    const auto m_yy = gauss_valid(cyy, h, w);
    const auto m_xy = gauss_valid(cxy, h, w);

    std::vector<double> row_sum(oh, 0.0);
#pragma omp parallel for schedule(static)
    for (int yy = 0; yy < oh; ++yy) {
      double acc = 0.0;
      for (int xx = 0; xx < ow; ++xx) {
        const std::size_t i = static_cast<std::size_t>(yy) * ow + xx;
        const double ux = mu_x[i], uy = mu_y[i];
        const double vx = m_xx[i] - ux * ux;
        const double vy = m_yy[i] - uy * uy;
        const double vxy = m_xy[i] - ux * uy;
        acc += ((2.0 * ux * uy + C1) * (2.0 * vxy + C2)) /
               ((ux * ux + uy * uy + C1) * (vx + vy + C2));
      }
      row_sum[yy] = acc;
    }
    double total = 0.0;
    for (int yy = 0; yy < oh; ++yy) total += row_sum[yy];
    channel_mean_sum += total / static_cast<double>(on);
  }
  return channel_mean_sum / x.channels;
}

}  // namespace dksr::imgmath
