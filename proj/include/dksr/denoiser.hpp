#pragma once

#include <cstddef>
#include <vector>

#include "dksr/diffusion.hpp"
#include "dksr/image.hpp"
#include "dksr/rng.hpp"

namespace dksr::diffusion {

// Small class-conditional noise predictor:
//   conv3x3(C->W) tanh -> conv3x3(W->W) tanh -> +(class emb + sinusoidal t emb)
//   -> conv3x3(W->W) tanh -> conv3x3(W->W) tanh -> conv3x3(W->C)
// Parameters live in one flat vector so the optimizer and the
// finite-difference suite can treat the model as a plain function.
struct DenoiserConfig {
  int channels = 3;
  int width = 16;
  int num_classes = 7;
};

// Sinusoidal timestep embedding, dim entries (dim even).
std::vector<double> timestep_embedding(int t, int dim);

class Denoiser {
 public:
  explicit Denoiser(const DenoiserConfig& cfg);

  const DenoiserConfig& config() const { return cfg_; }
  std::size_t param_count() const { return total_; }
  std::vector<double> init_params(Rng& rng) const;

  struct Cache {
    Latent input;
    std::vector<double> h1, h2, h2e, h3, h4;  // post-activation maps, HWC
    int cls = 0;
  };

  // eps_theta(z_t, c, t). t only enters through the embedding.
  Latent forward(const std::vector<double>& params, const Latent& z_t, int cls, int t,
                 Cache* cache = nullptr) const;

  // Accumulates d(sum(grad_out * eps_pred))/d(params) into grad_params.
  void backward(const std::vector<double>& params, const Cache& cache,
                const Latent& grad_out, std::vector<double>& grad_params) const;

  // Flat offsets, exposed for the checkpoint config snapshot and tests.
  struct Layout {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, cls_emb;
    std::size_t conv3_w, conv3_b, conv4_w, conv4_b, head_w, head_b;
  };
  const Layout& layout() const { return off_; }

 private:
  DenoiserConfig cfg_;
  Layout off_{};
  std::size_t total_ = 0;
};

// z_hat estimate of the clean latent from the predicted noise.
enum class CleanMode {
  kPaper,   // z_t - eps_pred, as written in the source formulation
  kScaled,  // (z_t - sqrt(1-abar_t) eps_pred) / sqrt(abar_t)
};

Latent predict_clean(const Latent& z_t, const Latent& eps_pred, CleanMode mode,
                     double alpha_bar_t);

// d(z_hat)/d(eps_pred), a scalar because both modes are elementwise-affine.
double predict_clean_deps(CleanMode mode, double alpha_bar_t);

}  // namespace dksr::diffusion
