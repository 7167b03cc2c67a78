#pragma once

#include <cstddef>
#include <vector>

#include "dksr/image.hpp"
#include "dksr/rng.hpp"

namespace dksr::srtrain {

// Toy 4x SR network:
//   conv3x3(3->32) tanh -> conv3x3(32->32) -> conv3x3(32->48)
//   -> depth-to-space x4 (48 = 3*4*4 channels) -> 3-channel output
// Fully convolutional, so train and test resolutions may differ.
struct SrNetConfig {
  int channels = 3;
  int width = 32;
  static constexpr int kScale = 4;
};

class SrNet {
 public:
  explicit SrNet(const SrNetConfig& cfg);

  const SrNetConfig& config() const { return cfg_; }
  std::size_t param_count() const { return total_; }
  std::vector<double> init_params(Rng& rng) const;

  struct Cache {
    imgmath::ImageTensor input;
    std::vector<double> h1, h2, h3;  // h1 post-tanh, h2/h3 pre-shuffle linear maps
  };

  // LR (h,w) -> HR (4h, 4w).
  imgmath::ImageTensor forward(const std::vector<double>& params,
                               const imgmath::ImageTensor& lr, Cache* cache = nullptr) const;

  void backward(const std::vector<double>& params, const Cache& cache,
                const imgmath::ImageTensor& grad_out, std::vector<double>& grad_params) const;

 private:
  SrNetConfig cfg_;
  std::size_t c1w_, c1b_, c2w_, c2b_, c3w_, c3b_;
  std::size_t total_ = 0;
};

// Channel group c*r*r + dy*r + dx moves to spatial offset (dy, dx).
imgmath::ImageTensor depth_to_space(const std::vector<double>& in, int h, int w,
                                    int out_channels, int r);

}  // namespace dksr::srtrain
