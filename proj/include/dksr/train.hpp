#pragma once

#include <vector>

#include "dksr/adam.hpp"
#include "dksr/denoiser.hpp"
#include "dksr/diffusion.hpp"
#include "dksr/rng.hpp"

namespace dksr::diffusion {

struct BatchItem {
  Latent z0;
  int label = 0;
};

// Per-term weights for one item's objective. train_step uses
// {1, lambda_r, lambda_d, lambda_sr}; the gradient suite isolates terms.
struct TermWeights {
  double simple = 1.0;
  double repr = 0.0;
  double div = 0.0;
  double sr = 0.0;
};

struct SrLossSpec {
  double kernel_a = -0.5;
  bool antialias = true;
};

struct ItemLoss {
  double l_simple = 0.0;
  double l_repr = 0.0;
  double l_div = 0.0;
  double l_sr = 0.0;
  double total = 0.0;
  bool repr_empty = false;
  bool div_empty = false;
  Latent z_hat;  // predict_clean output, feeds bank [D]
};

// Loss and parameter gradient for one (z0, c, t, eps) draw against the
// current banks. grad, when given, receives grad_scale * d(total)/d(params)
// accumulated on top of its contents.
ItemLoss item_loss_grad(const Denoiser& net, const std::vector<double>& params,
                        const Latent& z0, int label, int t, const Latent& eps,
                        const MemoryBank& bank_m, const MemoryBank& bank_d,
                        const NoiseSchedule& sched, const TermWeights& tw,
                        const SrLossSpec& sr, CleanMode mode,
                        std::vector<double>* grad = nullptr, double grad_scale = 1.0);

struct TrainStepConfig {
  AdamConfig adam;
  LossWeights weights;
  SrLossSpec sr;
  CleanMode clean_mode = CleanMode::kPaper;
};

struct StepStats {
  double l_simple = 0.0, l_repr = 0.0, l_div = 0.0, l_sr = 0.0, total = 0.0;
  bool bank_warning = false;  // a minimax term saw an empty bank
};

// One training step: per item draw t ~ U[1,T] and eps ~ N(0,1) from rng,
// evaluate the composite objective, average gradients over the batch in
// item order, Adam-update params, then push the batch z0 into [M] and the
// predicted clean latents into [D]. Throws numeric_error on a non-finite
// gradient.
StepStats train_step(const Denoiser& net, std::vector<double>& params,
                     const std::vector<BatchItem>& batch, MemoryBank& bank_m,
                     MemoryBank& bank_d, const NoiseSchedule& sched,
                     const TrainStepConfig& cfg, AdamState& opt, Rng& rng);

}  // namespace dksr::diffusion
