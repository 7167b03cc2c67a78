#pragma once

#include <cstdint>
#include <vector>

#include "dksr/image.hpp"

namespace dksr::diffusion {

// Latents live in the identity latent space, so they share the working
// image shape and ImageTensor is the carrier.
using Latent = imgmath::ImageTensor;

struct NoiseSchedule {
  int T = 0;
  std::vector<double> betas;       // size T, betas[i] belongs to timestep i+1
  std::vector<double> alphas_bar;  // running product of (1 - beta)

  // t in [0, T]; t = 0 is the identity extension (alpha_bar = 1).
  double alpha_bar(int t) const;
};

// Linear beta interpolation inclusive of both endpoints.
NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Latent forward_diffuse(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched);

// Fixed-capacity FIFO ring of unit-normalized flat latents. Entry order
// (and the tie-break index the losses use) is oldest first.
class MemoryBank {
 public:
  explicit MemoryBank(int capacity);

  void push(const std::vector<double>& latent);
  void push(const Latent& latent);

  int capacity() const { return capacity_; }
  std::size_t size() const { return full_ ? static_cast<std::size_t>(capacity_) : cursor_; }
  bool empty() const { return size() == 0; }
  const std::vector<double>& entry(std::size_t i) const;
  std::vector<std::vector<double>> snapshot() const;

 private:
  int capacity_;
  std::vector<std::vector<double>> ring_;
  std::size_t cursor_ = 0;  // next slot to overwrite
  bool full_ = false;
};

struct LossWeights {
  double lambda_r = 0.002;
  double lambda_d = 0.008;
  double lambda_sr = 1.0;
};

// Smooth clamp onto (0,1): s(x) = x - softplus(x-1) + softplus(-x) with
// sharpness beta. Identity-like in the interior, saturating at the
// boundaries, differentiable everywhere.
double smooth_clamp01(double x);
double smooth_clamp01_grad(double x);

// Mean squared error between predicted and true noise.
double loss_simple(const Latent& eps_pred, const Latent& eps);
// Adds scale * dL/d(eps_pred) into grad (flat, same layout as the latent).
void loss_simple_grad(const Latent& eps_pred, const Latent& eps, double scale,
                      std::vector<double>& grad);

// Representativeness: -min over bank of cosine(z_hat, entry). The gradient
// flows through the arg-min entry only; ties break to the lowest index.
// Empty bank contributes 0 and sets *empty_bank.
double loss_repr(const std::vector<double>& z_hat, const MemoryBank& bank,
                 std::vector<double>* grad = nullptr, double grad_scale = 1.0,
                 bool* empty_bank = nullptr);

// Diversity: +max over bank of cosine(z_hat, entry), same conventions.
double loss_div(const std::vector<double>& z_hat, const MemoryBank& bank,
                std::vector<double>* grad = nullptr, double grad_scale = 1.0,
                bool* empty_bank = nullptr);

// High-frequency term: with xs = smooth_clamp01(x_hat), returns
// -mean || up4(down4(xs)) - xs ||^2. Spatial dims must divide by 4.
double loss_sr(const Latent& x_hat_raw, double kernel_a = -0.5, bool antialias = true,
               std::vector<double>* grad = nullptr, double grad_scale = 1.0);

// Weighted Eq.-6 style sum; all parts are already phrased as minimized.
double total_loss(double l_simple, double l_repr, double l_div, double l_sr,
                  const LossWeights& w);

}  // namespace dksr::diffusion
