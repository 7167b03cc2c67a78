#include "dksr/srnet.hpp"

#include <cmath>

#include "dksr/errors.hpp"

namespace dksr::srtrain {

using imgmath::ImageTensor;

namespace {

// Same 3x3 conv/backward pair as the denoiser uses, local to this TU; the
// two networks deliberately share no code so each can serve as a sanity
// reference for the other's tests.
void conv3x3(const double* in, int H, int W, int in_c, const double* w, const double* b,
             int out_c, double* out) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double* po = &out[(static_cast<std::size_t>(y) * W + x) * out_c];
      for (int oc = 0; oc < out_c; ++oc) po[oc] = b[oc];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= H) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = x + kx - 1;
          if (sx < 0 || sx >= W) continue;
          const double* pi = &in[(static_cast<std::size_t>(sy) * W + sx) * in_c];
          for (int oc = 0; oc < out_c; ++oc) {
            const double* pw = &w[((static_cast<std::size_t>(oc) * in_c) * 3 + ky) * 3 + kx];
            double acc = 0.0;
            for (int ic = 0; ic < in_c; ++ic) acc += pw[static_cast<std::size_t>(ic) * 9] * pi[ic];
            po[oc] += acc;
          }
        }
      }
    }
}

void conv3x3_backward(const double* in, int H, int W, int in_c, const double* w, int out_c,
                      const double* g_out, double* g_in, double* g_w, double* g_b) {
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double* pg = &g_out[(static_cast<std::size_t>(y) * W + x) * out_c];
      for (int oc = 0; oc < out_c; ++oc) g_b[oc] += pg[oc];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= H) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = x + kx - 1;
          if (sx < 0 || sx >= W) continue;
          const double* pi = &in[(static_cast<std::size_t>(sy) * W + sx) * in_c];
          double* pgi = g_in ? &g_in[(static_cast<std::size_t>(sy) * W + sx) * in_c] : nullptr;
          for (int oc = 0; oc < out_c; ++oc) {
            const double g = pg[oc];
            if (g == 0.0) continue;
            const std::size_t wbase = ((static_cast<std::size_t>(oc) * in_c) * 3 + ky) * 3 + kx;
            for (int ic = 0; ic < in_c; ++ic) {
              g_w[wbase + static_cast<std::size_t>(ic) * 9] += g * pi[ic];
              if (pgi) pgi[ic] += g * w[wbase + static_cast<std::size_t>(ic) * 9];
            }
          }
        }
      }
    }
}

}  // namespace

ImageTensor depth_to_space(const std::vector<double>& in, int h, int w, int out_channels,
                           int r) {
  const int in_c = out_channels * r * r;
  ImageTensor out(h * r, w * r, out_channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double* px = &in[(static_cast<std::size_t>(y) * w + x) * in_c];
      for (int c = 0; c < out_channels; ++c)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            out.at(y * r + dy, x * r + dx, c) = px[(c * r + dy) * r + dx];
    }
  return out;
}

SrNet::SrNet(const SrNetConfig& cfg) : cfg_(cfg) {
  const std::size_t C = cfg.channels, W = cfg.width;
  const std::size_t shuffle_c = C * SrNetConfig::kScale * SrNetConfig::kScale;
  std::size_t p = 0;
  c1w_ = p;
  p += W * C * 9;
  c1b_ = p;
  p += W;
  c2w_ = p;
  p += W * W * 9;
  c2b_ = p;
  p += W;
  c3w_ = p;
  p += shuffle_c * W * 9;
  c3b_ = p;
  p += shuffle_c;
  total_ = p;
}

std::vector<double> SrNet::init_params(Rng& rng) const {
  std::vector<double> params(total_, 0.0);
  const std::size_t C = cfg_.channels, W = cfg_.width;
  const std::size_t shuffle_c = C * SrNetConfig::kScale * SrNetConfig::kScale;
  auto fill = [&](std::size_t off, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i) params[off + i] = stddev * rng.normal();
  };
  fill(c1w_, W * C * 9, 1.0 / std::sqrt(9.0 * C));
  fill(c2w_, W * W * 9, 1.0 / std::sqrt(9.0 * W));
  fill(c3w_, shuffle_c * W * 9, 1.0 / std::sqrt(9.0 * W));
  return params;
}

ImageTensor SrNet::forward(const std::vector<double>& params, const ImageTensor& lr,
                           Cache* cache) const {
  if (params.size() != total_) throw data_error("srnet: bad parameter vector size");
  if (lr.channels != cfg_.channels) throw data_error("srnet: channel mismatch");
  const int H = lr.height, W = lr.width;
  const int hid = cfg_.width;
  const int shuffle_c = cfg_.channels * SrNetConfig::kScale * SrNetConfig::kScale;
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  std::vector<double> h1(plane * hid), h2(plane * hid), h3(plane * shuffle_c);
  conv3x3(lr.data.data(), H, W, cfg_.channels, &params[c1w_], &params[c1b_], hid, h1.data());
  for (double& v : h1) v = std::tanh(v);
  conv3x3(h1.data(), H, W, hid, &params[c2w_], &params[c2b_], hid, h2.data());
  conv3x3(h2.data(), H, W, hid, &params[c3w_], &params[c3b_], shuffle_c, h3.data());
  ImageTensor out = depth_to_space(h3, H, W, cfg_.channels, SrNetConfig::kScale);

  if (cache) {
    cache->input = lr;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
    cache->h3 = std::move(h3);
  }
  return out;
}

void SrNet::backward(const std::vector<double>& params, const Cache& cache,
                     const ImageTensor& grad_out, std::vector<double>& grad_params) const {
  const int H = cache.input.height, W = cache.input.width;
  const int hid = cfg_.width;
  const int r = SrNetConfig::kScale;
  const int shuffle_c = cfg_.channels * r * r;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  if (grad_params.size() != total_) throw data_error("srnet: bad gradient vector size");

  // Inverse of depth_to_space: pure permutation.
  std::vector<double> g3(plane * shuffle_c);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double* px = &g3[(static_cast<std::size_t>(y) * W + x) * shuffle_c];
      for (int c = 0; c < cfg_.channels; ++c)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            px[(c * r + dy) * r + dx] = grad_out.at(y * r + dy, x * r + dx, c);
    }

  std::vector<double> g2(plane * hid, 0.0);
  conv3x3_backward(cache.h2.data(), H, W, hid, &params[c3w_], shuffle_c, g3.data(), g2.data(),
                   &grad_params[c3w_], &grad_params[c3b_]);
  std::vector<double> g1(plane * hid, 0.0);
  conv3x3_backward(cache.h1.data(), H, W, hid, &params[c2w_], hid, g2.data(), g1.data(),
                   &grad_params[c2w_], &grad_params[c2b_]);
  for (std::size_t i = 0; i < g1.size(); ++i) g1[i] *= 1.0 - cache.h1[i] * cache.h1[i];
  conv3x3_backward(cache.input.data.data(), H, W, cfg_.channels, &params[c1w_], hid, g1.data(),
                   nullptr, &grad_params[c1w_], &grad_params[c1b_]);
}

}  // namespace dksr::srtrain
