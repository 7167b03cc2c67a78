#include "dksr/ref/reference.hpp"

#include <cmath>

#include "dksr/errors.hpp"
#include "dksr/metrics.hpp"

namespace dksr::ref {

using imgmath::ImageTensor;
using imgmath::ResampleSpec;

namespace {

double cubic(double x, double a) {
  x = std::fabs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

ImageTensor resample_dense(const ImageTensor& img, const ResampleSpec& spec) {
  const double s = spec.scale;
  const int oh = static_cast<int>(std::llround(img.height * s));
  const int ow = static_cast<int>(std::llround(img.width * s));
  if (oh < 1 || ow < 1) throw data_error("output too small");
  const double kscale = (s < 1.0 && spec.antialias) ? 1.0 / s : 1.0;
  const double radius = 2.0 * kscale;

  ImageTensor out(oh, ow, img.channels);
  for (int oy = 0; oy < oh; ++oy) {
    const double sy = (oy + 0.5) / s - 0.5;
    const int ylo = static_cast<int>(std::ceil(sy - radius));
    const int yhi = static_cast<int>(std::floor(sy + radius));
    for (int ox = 0; ox < ow; ++ox) {
      const double sx = (ox + 0.5) / s - 0.5;
      const int xlo = static_cast<int>(std::ceil(sx - radius));
      const int xhi = static_cast<int>(std::floor(sx + radius));

      double wy_sum = 0.0, wx_sum = 0.0;
      for (int j = ylo; j <= yhi; ++j) wy_sum += cubic((sy - j) / kscale, spec.kernel_a);
      for (int j = xlo; j <= xhi; ++j) wx_sum += cubic((sx - j) / kscale, spec.kernel_a);

      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int jy = ylo; jy <= yhi; ++jy) {
          const double wy = cubic((sy - jy) / kscale, spec.kernel_a) / wy_sum;
          for (int jx = xlo; jx <= xhi; ++jx) {
            const double wx = cubic((sx - jx) / kscale, spec.kernel_a) / wx_sum;
            acc += wy * wx * img.at(reflect(jy, img.height), reflect(jx, img.width), c);
          }
        }
        out.at(oy, ox, c) = acc;
      }
    }
  }
  return out;
}

double mse_brute(const ImageTensor& x, const ImageTensor& y) {
  if (x.height != y.height || x.width != y.width || x.channels != y.channels)
    throw data_error("image dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data[i] - y.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double psnr_brute(const ImageTensor& x, const ImageTensor& y) {
  const double m = mse_brute(x, y);
  if (m < 1e-10) return imgmath::kPsnrCap;
  return 10.0 * std::log10(1.0 / m);
}

double ssim_naive(const ImageTensor& x, const ImageTensor& y) {
  if (x.height != y.height || x.width != y.width || x.channels != y.channels)
    throw data_error("image dimension mismatch");
  const int win = 11;
  if (x.height < win || x.width < win) throw data_error("image smaller than SSIM window");
  const double sigma = 1.5;
  const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;

  double w2d[11][11];
  double wsum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double dy = i - 5.0, dx = j - 5.0;
      w2d[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      wsum += w2d[i][j];
    }
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) w2d[i][j] /= wsum;

  double channel_sum = 0.0;
  for (int c = 0; c < x.channels; ++c) {
    double acc = 0.0;
    int count = 0;
    for (int wy = 0; wy + win <= x.height; ++wy) {
      for (int wx = 0; wx + win <= x.width; ++wx) {
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            mx += w2d[i][j] * x.at(wy + i, wx + j, c);
            my += w2d[i][j] * y.at(wy + i, wx + j, c);
          }
        double vx = 0.0, vy = 0.0, vxy = 0.0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double a = x.at(wy + i, wx + j, c) - mx;
            const double b = y.at(wy + i, wx + j, c) - my;
            vx += w2d[i][j] * a * a;
            vy += w2d[i][j] * b * b;
            vxy += w2d[i][j] * a * b;
          }
        acc += ((2.0 * mx * my + C1) * (2.0 * vxy + C2)) /
               ((mx * mx + my * my + C1) * (vx + vy + C2));
        ++count;
      }
    }
    channel_sum += acc / count;
  }
  return channel_sum / x.channels;
}

std::vector<double> alpha_bar_longdouble(const std::vector<double>& betas) {
  std::vector<double> out(betas.size());
  long double prod = 1.0L;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    prod *= (1.0L - static_cast<long double>(betas[i]));
    out[i] = static_cast<double>(prod);
  }
  return out;
}

std::vector<double> cosine_all(const std::vector<double>& latent,
                               const std::vector<std::vector<double>>& entries) {
  std::vector<double> sims;
  sims.reserve(entries.size());
  double nu = 0.0;
  for (double v : latent) nu += v * v;
  nu = std::sqrt(nu);
  for (const auto& e : entries) {
    double dot = 0.0, ne = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      dot += latent[i] * e[i];
      ne += e[i] * e[i];
    }
    sims.push_back(dot / (nu * std::sqrt(ne)));
  }
  return sims;
}

namespace {

using Map = std::vector<std::vector<std::vector<double>>>;  // [y][x][c]

Map to_map(const double* data, int h, int w, int c) {
  Map m(h, std::vector<std::vector<double>>(w, std::vector<double>(c)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) m[y][x][ch] = data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  return m;
}

Map conv_naive(const Map& in, const double* w, const double* b, int out_c) {
  const int h = static_cast<int>(in.size());
  const int wd = static_cast<int>(in[0].size());
  const int in_c = static_cast<int>(in[0][0].size());
  Map out(h, std::vector<std::vector<double>>(wd, std::vector<double>(out_c)));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      for (int oc = 0; oc < out_c; ++oc) {
        double acc = b[oc];
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx)
            for (int ic = 0; ic < in_c; ++ic) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              const double pix =
                  (sy < 0 || sy >= h || sx < 0 || sx >= wd) ? 0.0 : in[sy][sx][ic];
              acc += w[((static_cast<std::size_t>(oc) * in_c + ic) * 3 + ky) * 3 + kx] * pix;
            }
        out[y][x][oc] = acc;
      }
  return out;
}

void tanh_map(Map& m) {
  for (auto& row : m)
    for (auto& px : row)
      for (double& v : px) v = std::tanh(v);
}

}  // namespace

imgmath::ImageTensor denoiser_forward_naive(const diffusion::Denoiser& net,
                                            const std::vector<double>& params,
                                            const imgmath::ImageTensor& z_t, int cls, int t) {
  const auto& cfg = net.config();
  const auto& off = net.layout();
  const int W = cfg.width, C = cfg.channels;

  Map h = to_map(z_t.data.data(), z_t.height, z_t.width, C);
  h = conv_naive(h, &params[off.conv1_w], &params[off.conv1_b], W);
  tanh_map(h);
  h = conv_naive(h, &params[off.conv2_w], &params[off.conv2_b], W);
  tanh_map(h);

  for (int j = 0; j < W; ++j) {
    const int half = W / 2;
    const int i = j / 2;
    const double freq = std::exp(-std::log(10000.0) * i / half);
    const double emb = (j % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
    const double add = params[off.cls_emb + static_cast<std::size_t>(cls) * W + j] + emb;
    for (auto& row : h)
      for (auto& px : row) px[j] += add;
  }

  h = conv_naive(h, &params[off.conv3_w], &params[off.conv3_b], W);
  tanh_map(h);
  h = conv_naive(h, &params[off.conv4_w], &params[off.conv4_b], W);
  tanh_map(h);
  h = conv_naive(h, &params[off.head_w], &params[off.head_b], C);

  imgmath::ImageTensor out(z_t.height, z_t.width, C);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < C; ++c) out.at(y, x, c) = h[y][x][c];
  return out;
}

double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> params, std::size_t idx, double h) {
  params[idx] += h;
  const double fp = f(params);
  params[idx] -= 2.0 * h;
  const double fm = f(params);
  return (fp - fm) / (2.0 * h);
}

}  // namespace dksr::ref
