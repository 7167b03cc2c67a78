#include "dksr/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dksr/errors.hpp"

namespace dksr::features {

using imgmath::ImageTensor;

FeatureVector builtin_features(const ImageTensor& patch) {
  if (patch.height < 8 || patch.width < 8)
    throw data_error("builtin_features: patch must be at least 8x8");

  FeatureVector v;
  v.reserve(kBuiltinDim);

  const ImageTensor luma = imgmath::luminance(patch);
  const int h = luma.height, w = luma.width;

  // 8-bin orientation histogram, magnitude weighted, interior pixels only.
  double hist[8] = {};
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (luma.at(y, x + 1, 0) - luma.at(y, x - 1, 0));
      const double gy = 0.5 * (luma.at(y + 1, x, 0) - luma.at(y - 1, x, 0));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0.0) ang += 2.0 * 3.141592653589793238462643383279;
      int bin = static_cast<int>(ang / (3.141592653589793238462643383279 / 4.0));
      if (bin > 7) bin = 7;
      hist[bin] += mag;
    }
  }
  for (double b : hist) v.push_back(b);

  // Per-channel mean/stddev (population). Single-channel patches reuse the
  // one channel so the vector keeps its fixed width.
  for (int c = 0; c < 3; ++c) {
    const int ch = patch.channels == 3 ? c : 0;
    double mean = 0.0;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) mean += patch.at(y, x, ch);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d = patch.at(y, x, ch) - mean;
        var += d * d;
      }
    var /= static_cast<double>(n);
    v.push_back(mean);
    v.push_back(std::sqrt(var));
  }

  // 4x4 block-mean luma thumbnail.
  for (int by = 0; by < 4; ++by) {
    const int y0 = by * h / 4, y1 = (by + 1) * h / 4;
    for (int bx = 0; bx < 4; ++bx) {
      const int x0 = bx * w / 4, x1 = (bx + 1) * w / 4;
      double acc = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) acc += luma.at(y, x, 0);
      v.push_back(acc / ((y1 - y0) * (x1 - x0)));
    }
  }

  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) {
    v[0] = 1.0;  // canonical e1 for the all-zero patch
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

void save_features(const std::vector<FeatureVector>& vectors, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw data_error("cannot open feature file for writing: " + path);
  const std::size_t d = vectors.empty() ? 0 : vectors.front().size();
  f << "n=" << vectors.size() << " d=" << d << "\n";
  char buf[40];
  for (const auto& v : vectors) {
    if (v.size() != d) throw data_error("inconsistent feature dimensions");
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
      f << buf << (i + 1 < v.size() ? ' ' : '\n');
    }
  }
  if (!f) throw data_error("short write: " + path);
}

std::vector<FeatureVector> load_features(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open feature file: " + path);
  std::string line;
  if (!std::getline(f, line)) throw data_error(path + ":1: missing header");
  std::size_t n = 0, d = 0;
  if (std::sscanf(line.c_str(), "n=%zu d=%zu", &n, &d) != 2)
    throw data_error(path + ":1: malformed header, want \"n=<count> d=<dim>\"");

  std::vector<FeatureVector> vectors;
  vectors.reserve(n);
  for (std::size_t row = 0; row < n; ++row) {
    const int line_no = static_cast<int>(row) + 2;
    if (!std::getline(f, line))
      throw data_error(path + ":" + std::to_string(line_no) + ": unexpected end of file");
    std::stringstream ss(line);
    FeatureVector v;
    v.reserve(d);
    double x;
    while (ss >> x) v.push_back(x);
    if (v.size() != d)
      throw data_error(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(d) + " values, got " + std::to_string(v.size()));
    for (double y : v)
      if (!std::isfinite(y))
        throw data_error(path + ":" + std::to_string(line_no) + ": non-finite value");
    vectors.push_back(std::move(v));
  }
  return vectors;
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) throw data_error("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw numeric_error("undefined similarity for zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace dksr::features
