#include <algorithm>
#include <cmath>
#include <limits>

#include "dksr/errors.hpp"
#include "dksr/features.hpp"
#include "dksr/rng.hpp"

namespace dksr::features {

namespace {

double dist2(const FeatureVector& a, const FeatureVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::vector<FeatureVector> kmeanspp_init(const std::vector<FeatureVector>& pts, int k,
                                         Rng& rng) {
  const std::size_t n = pts.size();
  std::vector<FeatureVector> centroids;
  centroids.reserve(k);
  std::vector<char> chosen(n, 0);

  const std::size_t first = rng.below(n);
  centroids.push_back(pts[first]);
  chosen[first] = 1;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(pts[i], centroids[0]);

  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = n - 1;  // r landed on the boundary
    } else {
      // All residual distances zero (duplicate-heavy input): take the
      // lowest unchosen index so seeding stays deterministic.
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
      if (pick == n) pick = 0;
    }
    chosen[pick] = 1;
    centroids.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(pts[i], centroids.back()));
  }
  return centroids;
}

struct LloydRun {
  std::vector<int> labels;
  std::vector<FeatureVector> centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;
};

LloydRun lloyd(const std::vector<FeatureVector>& pts, int k, std::uint64_t seed,
               int max_iter) {
  const int n = static_cast<int>(pts.size());
  const std::size_t dim = pts.front().size();
  Rng rng(seed);
  LloydRun run;
  run.centroids = kmeanspp_init(pts, k, rng);
  run.labels.assign(n, -1);

  std::vector<double> min_d2(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment: pure map, ties to the lowest centroid index.
    bool changed = false;
#pragma omp parallel for schedule(static) reduction(||: changed)
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = dist2(pts[i], run.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      min_d2[i] = best_d;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += min_d2[i];
    run.inertia_history.push_back(inertia);
    run.inertia = inertia;
    if (!changed) break;

    // Update: ordered accumulation over points keeps the result identical
    // for any thread count.
    std::vector<FeatureVector> sums(k, FeatureVector(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      const int c = run.labels[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += pts[i][j];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t j = 0; j < dim; ++j) run.centroids[c][j] = sums[c][j] / counts[c];

    // Empty-cluster repair: steal the point farthest from its centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int steal = -1;
      double worst = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[run.labels[i]] <= 1) continue;  // do not empty another cluster
        const double d = dist2(pts[i], run.centroids[run.labels[i]]);
        if (d > worst) {
          worst = d;
          steal = i;
        }
      }
      if (steal < 0) continue;
      --counts[run.labels[steal]];
      run.labels[steal] = c;
      counts[c] = 1;
      run.centroids[c] = pts[steal];
    }
  }
  return run;
}

}  // namespace

ClusteringResult kmeans(const std::vector<FeatureVector>& vectors, const KMeansConfig& cfg) {
  if (cfg.k < 1) throw config_error("kmeans: k must be >= 1");
  if (static_cast<int>(vectors.size()) < cfg.k)
    throw data_error("kmeans: fewer points than clusters");
  for (const auto& v : vectors)
    if (v.size() != vectors.front().size()) throw data_error("kmeans: ragged input");

  LloydRun best;
  bool have = false;
  for (int r = 0; r < std::max(1, cfg.n_restart); ++r) {
    LloydRun run = lloyd(vectors, cfg.k, derive_seed(cfg.seed, "restart/" + std::to_string(r)),
                         cfg.max_iter);
    if (!have || run.inertia < best.inertia) {  // strict <: seed order breaks ties
      best = std::move(run);
      have = true;
    }
  }

  ClusteringResult result;
  result.k = cfg.k;
  result.labels = std::move(best.labels);
  result.centroids = std::move(best.centroids);
  result.inertia = best.inertia;
  result.inertia_history = std::move(best.inertia_history);
  return result;
}

}  // namespace dksr::features
