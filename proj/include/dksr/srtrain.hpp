#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dksr/image.hpp"
#include "dksr/srnet.hpp"

namespace dksr::srtrain {

// One SR training unit: lr is always the bicubic 1/4 downsample of hr.
struct DistilledPair {
  imgmath::ImageTensor hr;
  imgmath::ImageTensor lr;
};

struct PairSpec {
  double kernel_a = -0.5;
  bool antialias = true;
};

std::vector<DistilledPair> make_pairs(const std::vector<imgmath::ImageTensor>& hr_images,
                                      const PairSpec& spec = {});

struct SrTrainConfig {
  int epochs = 150;
  double lr = 1e-3;
  SrNetConfig net;
  PairSpec pairs;
};

struct SrTrainResult {
  std::vector<double> params;
  std::vector<double> epoch_loss;  // mean per-pair MSE, one entry per epoch
};

// Per-pair Adam steps on MSE(net(lr), hr), pair order reshuffled each epoch
// from the given seed. Zero epochs returns the seeded initialization.
SrTrainResult train_sr(const std::vector<DistilledPair>& pairs, const SrTrainConfig& cfg,
                       std::uint64_t seed);

struct EvalResult {
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

// Metrics on the clamped network output, arithmetic means over pairs.
EvalResult evaluate(const SrNet& net, const std::vector<double>& params,
                    const std::vector<DistilledPair>& test_pairs);

// Table-III baselines. Random crop: uniform image, uniform position.
std::vector<imgmath::ImageTensor> baseline_random_crop(
    const std::vector<imgmath::ImageTensor>& sources, int n, int size, std::uint64_t seed);

// Rejection-samples random crops until n score strictly below threshold;
// gives up after 100*n attempts and reports the acceptance rate.
std::vector<imgmath::ImageTensor> baseline_threshold_crop(
    const std::vector<imgmath::ImageTensor>& sources, int n, int size, std::uint64_t seed,
    double threshold_db, const PairSpec& spec = {});

}  // namespace dksr::srtrain
