#include "dksr/srtrain.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "dksr/adam.hpp"
#include "dksr/curation.hpp"
#include "dksr/errors.hpp"
#include "dksr/metrics.hpp"
#include "dksr/resample.hpp"
#include "dksr/rng.hpp"

namespace dksr::srtrain {

using imgmath::ImageTensor;

std::vector<DistilledPair> make_pairs(const std::vector<ImageTensor>& hr_images,
                                      const PairSpec& spec) {
  std::vector<DistilledPair> pairs;
  pairs.reserve(hr_images.size());
  for (const auto& hr : hr_images) {
    if (hr.height % 4 != 0 || hr.width % 4 != 0)
      throw data_error("make_pairs: HR dims must divide by 4");
    DistilledPair p;
    p.hr = hr;
    p.lr = imgmath::down4(hr, spec.kernel_a, spec.antialias);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

SrTrainResult train_sr(const std::vector<DistilledPair>& pairs, const SrTrainConfig& cfg,
                       std::uint64_t seed) {
  if (pairs.empty()) throw data_error("train_sr: no training pairs");
  const SrNet net(cfg.net);
  Rng rng(seed);

  SrTrainResult result;
  result.params = net.init_params(rng);

  AdamConfig acfg;
  acfg.lr = cfg.lr;
  AdamState opt;
  opt.init(result.params.size());

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad(result.params.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Seeded Fisher-Yates reshuffle per epoch.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const DistilledPair& p = pairs[idx];
      SrNet::Cache cache;
      const ImageTensor out = net.forward(result.params, p.lr, &cache);

      const double n = static_cast<double>(out.size());
      double loss = 0.0;
      ImageTensor g(out.height, out.width, out.channels);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out.data[i] - p.hr.data[i];
        loss += d * d;
        g.data[i] = 2.0 * d / n;
      }
      loss /= n;
      if (!std::isfinite(loss))
        throw numeric_error("train_sr: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += loss / static_cast<double>(pairs.size());

      std::fill(grad.begin(), grad.end(), 0.0);
      net.backward(result.params, cache, g, grad);
      adam_update(result.params, grad, opt, acfg);
    }
    result.epoch_loss.push_back(epoch_loss);
  }
  return result;
}

EvalResult evaluate(const SrNet& net, const std::vector<double>& params,
                    const std::vector<DistilledPair>& test_pairs) {
  if (test_pairs.empty()) throw data_error("evaluate: empty test set");
  const int n = static_cast<int>(test_pairs.size());
  std::vector<double> psnrs(n), ssims(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const ImageTensor out = imgmath::clamp01(net.forward(params, test_pairs[i].lr));
    psnrs[i] = imgmath::psnr(out, test_pairs[i].hr);
    ssims[i] = imgmath::ssim(out, test_pairs[i].hr);
  }
  EvalResult r;
  for (int i = 0; i < n; ++i) {
    r.mean_psnr += psnrs[i] / n;
    r.mean_ssim += ssims[i] / n;
  }
  return r;
}

namespace {

ImageTensor random_crop(const std::vector<ImageTensor>& sources, int size, Rng& rng) {
  const auto& img = sources[rng.below(sources.size())];
  if (img.width < size || img.height < size)
    throw data_error("baseline crop: image smaller than crop size");
  const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - size + 1)));
  const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - size + 1)));
  return imgmath::crop(img, x, y, size);
}

}  // namespace

std::vector<ImageTensor> baseline_random_crop(const std::vector<ImageTensor>& sources, int n,
                                              int size, std::uint64_t seed) {
  if (sources.empty()) throw data_error("baseline_random_crop: no source images");
  Rng rng(seed);
  std::vector<ImageTensor> crops;
  crops.reserve(n);
  for (int i = 0; i < n; ++i) crops.push_back(random_crop(sources, size, rng));
  return crops;
}

std::vector<ImageTensor> baseline_threshold_crop(const std::vector<ImageTensor>& sources,
                                                 int n, int size, std::uint64_t seed,
                                                 double threshold_db, const PairSpec& spec) {
  if (sources.empty()) throw data_error("baseline_threshold_crop: no source images");
  Rng rng(seed);
  std::vector<ImageTensor> crops;
  crops.reserve(n);
  const long budget = 100L * n;
  long attempts = 0;
  while (static_cast<int>(crops.size()) < n && attempts < budget) {
    ImageTensor c = random_crop(sources, size, rng);
    ++attempts;
    if (curation::score_patch(c, spec.kernel_a, spec.antialias) < threshold_db)
      crops.push_back(std::move(c));
  }
  if (static_cast<int>(crops.size()) < n) {
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.4f",
                  static_cast<double>(crops.size()) / static_cast<double>(attempts));
    throw data_error("baseline_threshold_crop: budget of " + std::to_string(budget) +
                     " attempts exhausted, acceptance rate " + rate);
  }
  return crops;
}

}  // namespace dksr::srtrain
