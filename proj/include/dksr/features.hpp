#pragma once

#include <string>
#include <vector>

#include "dksr/image.hpp"

namespace dksr::features {

using FeatureVector = std::vector<double>;

inline constexpr int kBuiltinDim = 30;  // 8 orientation bins + 6 stats + 4x4 thumbnail

// Handcrafted stand-in for a pretrained semantic extractor: gradient
// orientation histogram (magnitude weighted, central differences on luma),
// per-channel mean/stddev, 4x4 luma thumbnail; L2 normalized. A zero
// vector maps to e1 before normalization.
FeatureVector builtin_features(const imgmath::ImageTensor& patch);

// Feature file: line 1 "n=<count> d=<dim>", then n lines of d
// space-separated floats at 17 significant digits (round-trip exact).
void save_features(const std::vector<FeatureVector>& vectors, const std::string& path);
std::vector<FeatureVector> load_features(const std::string& path);

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

struct ClusteringResult {
  int k = 0;
  std::vector<int> labels;                  // one per input vector, in [0, k)
  std::vector<FeatureVector> centroids;     // k entries
  double inertia = 0.0;                     // sum of min squared distances
  std::vector<double> inertia_history;      // one entry per Lloyd assignment
};

struct KMeansConfig {
  int k = 7;
  std::uint64_t seed = 0;
  int max_iter = 100;
  int n_restart = 1;  // lowest inertia wins, seed order breaks ties
};

// k-means++ seeding, Lloyd iterations to an assignment fixpoint, squared
// Euclidean distance. Empty clusters are repaired by stealing the point
// farthest from its centroid. Assignment ties go to the lowest centroid
// index. Same seed and input give bit-identical results.
ClusteringResult kmeans(const std::vector<FeatureVector>& vectors, const KMeansConfig& cfg);

}  // namespace dksr::features
