#include "dksr/denoiser.hpp"

#include <cmath>

#include "dksr/errors.hpp"

namespace dksr::diffusion {

namespace {

// Same-padded 3x3 convolution on HWC maps.
void conv3x3(const double* in, int H, int W, int in_c, const double* w, const double* b,
             int out_c, double* out) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < H; ++y) {
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
}

// Gradients of the same-padded conv: g_in (optional), g_w, g_b.
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

void tanh_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
}

// g_pre = g_post * (1 - y^2), y the post-activation value.
void tanh_backward(const std::vector<double>& y, std::vector<double>& g) {
  for (std::size_t i = 0; i < y.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
}

}  // namespace

std::vector<double> timestep_embedding(int t, int dim) {
  std::vector<double> emb(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

Denoiser::Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
  const std::size_t C = cfg.channels, W = cfg.width, K = cfg.num_classes;
  std::size_t p = 0;
  off_.conv1_w = p;
  p += W * C * 9;
  off_.conv1_b = p;
  p += W;
  off_.conv2_w = p;
  p += W * W * 9;
  off_.conv2_b = p;
  p += W;
  off_.cls_emb = p;
  p += K * W;
  off_.conv3_w = p;
  p += W * W * 9;
  off_.conv3_b = p;
  p += W;
  off_.conv4_w = p;
  p += W * W * 9;
  off_.conv4_b = p;
  p += W;
  off_.head_w = p;
  p += C * W * 9;
  off_.head_b = p;
  p += C;
  total_ = p;
}

std::vector<double> Denoiser::init_params(Rng& rng) const {
  std::vector<double> params(total_, 0.0);
  auto fill = [&](std::size_t off, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i) params[off + i] = stddev * rng.normal();
  };
  const std::size_t C = cfg_.channels, W = cfg_.width, K = cfg_.num_classes;
  fill(off_.conv1_w, W * C * 9, 1.0 / std::sqrt(9.0 * C));
  fill(off_.conv2_w, W * W * 9, 1.0 / std::sqrt(9.0 * W));
  fill(off_.cls_emb, K * W, 0.1);
  fill(off_.conv3_w, W * W * 9, 1.0 / std::sqrt(9.0 * W));
  fill(off_.conv4_w, W * W * 9, 1.0 / std::sqrt(9.0 * W));
  fill(off_.head_w, C * W * 9, 1.0 / std::sqrt(9.0 * W));
  return params;  // biases start at zero
}

Latent Denoiser::forward(const std::vector<double>& params, const Latent& z_t, int cls, int t,
                         Cache* cache) const {
  if (params.size() != total_) throw data_error("denoiser: bad parameter vector size");
  if (z_t.channels != cfg_.channels) throw data_error("denoiser: channel mismatch");
  if (cls < 0 || cls >= cfg_.num_classes) throw data_error("denoiser: label out of range");
  const int H = z_t.height, Wd = z_t.width;
  const int C = cfg_.channels, W = cfg_.width;
  const std::size_t plane = static_cast<std::size_t>(H) * Wd;

  std::vector<double> h1(plane * W), h2(plane * W), h3(plane * W), h4(plane * W);
  conv3x3(z_t.data.data(), H, Wd, C, &params[off_.conv1_w], &params[off_.conv1_b], W, h1.data());
  tanh_inplace(h1);
  conv3x3(h1.data(), H, Wd, W, &params[off_.conv2_w], &params[off_.conv2_b], W, h2.data());
  tanh_inplace(h2);

  const std::vector<double> t_emb = timestep_embedding(t, W);
  const double* ce = &params[off_.cls_emb + static_cast<std::size_t>(cls) * W];
  std::vector<double> h2e(plane * W);
  for (std::size_t p = 0; p < plane; ++p)
    for (int j = 0; j < W; ++j) h2e[p * W + j] = h2[p * W + j] + ce[j] + t_emb[j];

  conv3x3(h2e.data(), H, Wd, W, &params[off_.conv3_w], &params[off_.conv3_b], W, h3.data());
  tanh_inplace(h3);
  conv3x3(h3.data(), H, Wd, W, &params[off_.conv4_w], &params[off_.conv4_b], W, h4.data());
  tanh_inplace(h4);

  Latent out(H, Wd, C);
  conv3x3(h4.data(), H, Wd, W, &params[off_.head_w], &params[off_.head_b], C, out.data.data());

  if (cache) {
    cache->input = z_t;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
    cache->h2e = std::move(h2e);
    cache->h3 = std::move(h3);
    cache->h4 = std::move(h4);
    cache->cls = cls;
  }
  return out;
}

void Denoiser::backward(const std::vector<double>& params, const Cache& cache,
                        const Latent& grad_out, std::vector<double>& grad_params) const {
  const int H = cache.input.height, Wd = cache.input.width;
  const int C = cfg_.channels, W = cfg_.width;
  const std::size_t plane = static_cast<std::size_t>(H) * Wd;
  if (grad_params.size() != total_) throw data_error("denoiser: bad gradient vector size");

  std::vector<double> g4(plane * W, 0.0);
  conv3x3_backward(cache.h4.data(), H, Wd, W, &params[off_.head_w], C, grad_out.data.data(),
                   g4.data(), &grad_params[off_.head_w], &grad_params[off_.head_b]);
  tanh_backward(cache.h4, g4);

  std::vector<double> g3(plane * W, 0.0);
  conv3x3_backward(cache.h3.data(), H, Wd, W, &params[off_.conv4_w], W, g4.data(), g3.data(),
                   &grad_params[off_.conv4_w], &grad_params[off_.conv4_b]);
  tanh_backward(cache.h3, g3);

  std::vector<double> g2e(plane * W, 0.0);
  conv3x3_backward(cache.h2e.data(), H, Wd, W, &params[off_.conv3_w], W, g3.data(), g2e.data(),
                   &grad_params[off_.conv3_w], &grad_params[off_.conv3_b]);

  // Embedding injection: broadcast add, so the class-embedding gradient is
  // the spatial sum. The sinusoidal part carries no parameters.
  double* g_emb = &grad_params[off_.cls_emb + static_cast<std::size_t>(cache.cls) * W];
  for (std::size_t p = 0; p < plane; ++p)
    for (int j = 0; j < W; ++j) g_emb[j] += g2e[p * W + j];

  tanh_backward(cache.h2, g2e);
  std::vector<double> g1(plane * W, 0.0);
  conv3x3_backward(cache.h1.data(), H, Wd, W, &params[off_.conv2_w], W, g2e.data(), g1.data(),
                   &grad_params[off_.conv2_w], &grad_params[off_.conv2_b]);
  tanh_backward(cache.h1, g1);

  conv3x3_backward(cache.input.data.data(), H, Wd, C, &params[off_.conv1_w], W, g1.data(),
                   nullptr, &grad_params[off_.conv1_w], &grad_params[off_.conv1_b]);
}

Latent predict_clean(const Latent& z_t, const Latent& eps_pred, CleanMode mode,
                     double alpha_bar_t) {
  if (z_t.size() != eps_pred.size()) throw data_error("predict_clean: shape mismatch");
  Latent z = z_t;
  if (mode == CleanMode::kPaper) {
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = z_t.data[i] - eps_pred.data[i];
  } else {
    const double sa = std::sqrt(alpha_bar_t);
    const double sb = std::sqrt(1.0 - alpha_bar_t);
    for (std::size_t i = 0; i < z.size(); ++i)
      z.data[i] = (z_t.data[i] - sb * eps_pred.data[i]) / sa;
  }
  return z;
}

double predict_clean_deps(CleanMode mode, double alpha_bar_t) {
  if (mode == CleanMode::kPaper) return -1.0;
  return -std::sqrt(1.0 - alpha_bar_t) / std::sqrt(alpha_bar_t);
}

}  // namespace dksr::diffusion
