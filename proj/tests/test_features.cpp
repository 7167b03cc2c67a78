#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "dksr/errors.hpp"
#include "dksr/features.hpp"
#include "dksr/rng.hpp"
#include "helpers.hpp"

using namespace dksr;
using namespace dksr::features;
using dksr::imgmath::ImageTensor;
using dksr::testing::constant_image;
using dksr::testing::random_image;

namespace {

double norm(const FeatureVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Blobs at given centers with the given radius, round-robin membership.
std::vector<FeatureVector> blobs(const std::vector<FeatureVector>& centers, int per_blob,
                                 double radius, Rng& rng, std::vector<int>* truth = nullptr) {
  std::vector<FeatureVector> pts;
  for (int i = 0; i < per_blob; ++i) {
    for (std::size_t b = 0; b < centers.size(); ++b) {
      FeatureVector p = centers[b];
      for (double& x : p) x += rng.uniform(-radius, radius);
      pts.push_back(std::move(p));
      if (truth) truth->push_back(static_cast<int>(b));
    }
  }
  return pts;
}

}  // namespace

TEST_CASE("builtin_features: constant patch is well-defined and unit norm") {
  const auto v = builtin_features(constant_image(16, 16, 3, 0.5));
  REQUIRE(v.size() == kBuiltinDim);
  for (int i = 0; i < 8; ++i) CHECK(v[i] == 0.0);  // no gradients
  CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-9));

  // All-zero patch maps to e1 before normalization.
  const auto z = builtin_features(constant_image(16, 16, 3, 0.0));
  CHECK(z[0] == 1.0);
  CHECK(norm(z) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("builtin_features: horizontal ramp concentrates in the 0-degree bin") {
  ImageTensor ramp(16, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) ramp.at(y, x, c) = x / 15.0;
  const auto v = builtin_features(ramp);
  CHECK(v[0] > 0.0);
  for (int i = 1; i < 8; ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("builtin_features: unit norm for random patches") {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto v = builtin_features(random_image(rng.uniform_int(8, 33), rng.uniform_int(8, 33),
                                                 (i % 2) ? 1 : 3, rng));
    CHECK(std::fabs(norm(v) - 1.0) <= 1e-9);
  }
}

TEST_CASE("feature file: round trip and parse errors") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dksr_features_test";
  fs::create_directories(dir);
  const std::string path = (dir / "f.txt").string();

  Rng rng(8);
  std::vector<FeatureVector> vecs;
  for (int i = 0; i < 5; ++i) vecs.push_back(dksr::testing::random_vector(7, rng));
  save_features(vecs, path);
  const auto back = load_features(path);
  REQUIRE(back.size() == vecs.size());
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = 0; j < vecs[i].size(); ++j) CHECK(back[i][j] == vecs[i][j]);

  {
    std::ofstream f(path);
    f << "n=2 d=3\n1 2 3\n4 5\n";
  }
  try {
    load_features(path);
    FAIL("expected parse error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);  // names the line
  }

  {
    std::ofstream f(path);
    f << "rows=2 cols=3\n";
  }
  CHECK_THROWS_AS(load_features(path), data_error);

  {
    std::ofstream f(path);
    f << "n=1 d=2\nnan 1\n";
  }
  CHECK_THROWS_AS(load_features(path), data_error);
  fs::remove_all(dir);
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity({1, 0}, {0, 1}) == 0.0);
  CHECK(cosine_similarity({1, 1}, {2, 2}) == doctest::Approx(1.0).epsilon(1e-12));
  const double expected = 5.0 / (std::sqrt(14.0) * std::sqrt(5.0));
  CHECK(cosine_similarity({1, 2, 3}, {-1, 0, 2}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_similarity({0, 0}, {1, 0}), numeric_error);

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto a = dksr::testing::random_vector(6, rng);
    const double c = rng.uniform(0.01, 10.0);
    auto b = a;
    for (double& x : b) x *= c;
    CHECK(std::fabs(cosine_similarity(a, b) - 1.0) <= 1e-12);
  }
}

TEST_CASE("kmeans: n == k distinct points, zero inertia") {
  std::vector<FeatureVector> pts = {{0, 0}, {1, 0}, {0, 1}, {5, 5}};
  KMeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 9;
  const auto res = kmeans(pts, cfg);
  CHECK(res.inertia == 0.0);
  std::vector<int> sorted = res.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("kmeans: two-blob recovery matches brute-force membership") {
  Rng rng(77);
  std::vector<int> truth;
  const auto pts = blobs({{0.0, 0.0}, {100.0, 100.0}}, 25, 1.0, rng, &truth);
  KMeansConfig cfg;
  cfg.k = 2;
  cfg.seed = 123;
  const auto res = kmeans(pts, cfg);

  // Brute-force nearest-of-two-means oracle on the final centroids.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t j = 0; j < pts[i].size(); ++j) {
      d0 += (pts[i][j] - res.centroids[0][j]) * (pts[i][j] - res.centroids[0][j]);
      d1 += (pts[i][j] - res.centroids[1][j]) * (pts[i][j] - res.centroids[1][j]);
    }
    CHECK(res.labels[i] == (d1 < d0 ? 1 : 0));
  }
  // Partition equals blob membership exactly (up to label swap).
  const int l0 = res.labels[0];
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK((res.labels[i] == l0) == (truth[i] == truth[0]));
}

TEST_CASE("kmeans: inertia non-increasing, determinism, n < k error") {
  Rng rng(55);
  std::vector<FeatureVector> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(dksr::testing::random_vector(5, rng));

  KMeansConfig cfg;
  cfg.k = 7;
  cfg.seed = 4242;
  const auto a = kmeans(pts, cfg);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
    CHECK(a.inertia_history[i] <= a.inertia_history[i - 1]);

  const auto b = kmeans(pts, cfg);
  CHECK(a.labels == b.labels);
  for (int c = 0; c < cfg.k; ++c)
    for (std::size_t j = 0; j < a.centroids[c].size(); ++j)
      CHECK(a.centroids[c][j] == b.centroids[c][j]);

  KMeansConfig too_many;
  too_many.k = 100;
  CHECK_THROWS_AS(kmeans(pts, too_many), data_error);
}

TEST_CASE("kmeans: permuted well-separated input yields the same partition") {
  Rng rng(91);
  const auto pts = blobs({{0.0, 0.0, 0.0}, {50.0, 0.0, 0.0}, {0.0, 50.0, 0.0}}, 12, 1.0, rng);
  KMeansConfig cfg;
  cfg.k = 3;
  cfg.seed = 7;

  const auto base = kmeans(pts, cfg);

  std::vector<std::size_t> perm(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng shuffle_rng(1234);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[shuffle_rng.below(i)]);

  std::vector<FeatureVector> permuted(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = pts[perm[i]];
  const auto shuffled = kmeans(permuted, cfg);

  // Same partition structure: labels agree up to a relabeling.
  std::map<int, int> mapping;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int a = base.labels[perm[i]];
    const int b = shuffled.labels[i];
    auto it = mapping.find(a);
    if (it == mapping.end())
      mapping[a] = b;
    else
      CHECK(it->second == b);
  }
  CHECK(mapping.size() == 3);
}
