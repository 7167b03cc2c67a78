#include "dksr/train.hpp"

#include <cmath>
#include <string>

#include "dksr/errors.hpp"

namespace dksr::diffusion {

ItemLoss item_loss_grad(const Denoiser& net, const std::vector<double>& params,
                        const Latent& z0, int label, int t, const Latent& eps,
                        const MemoryBank& bank_m, const MemoryBank& bank_d,
                        const NoiseSchedule& sched, const TermWeights& tw,
                        const SrLossSpec& sr, CleanMode mode, std::vector<double>* grad,
                        double grad_scale) {
  ItemLoss out;
  const double ab = sched.alpha_bar(t);
  const Latent z_t = forward_diffuse(z0, t, eps, sched);

  Denoiser::Cache cache;
  const Latent eps_pred = net.forward(params, z_t, label, t, grad ? &cache : nullptr);
  out.z_hat = predict_clean(z_t, eps_pred, mode, ab);

  out.l_simple = loss_simple(eps_pred, eps);

  // Gradient wrt eps_pred, assembled flat then pushed through the net.
  std::vector<double> g_eps;
  if (grad) g_eps.assign(eps_pred.size(), 0.0);
  if (grad && tw.simple != 0.0) loss_simple_grad(eps_pred, eps, tw.simple, g_eps);

  std::vector<double> g_zhat;
  const bool need_zhat_grad =
      grad && (tw.repr != 0.0 || tw.div != 0.0 || tw.sr != 0.0);
  if (need_zhat_grad) g_zhat.assign(out.z_hat.size(), 0.0);

  out.l_repr = loss_repr(out.z_hat.data, bank_m, need_zhat_grad ? &g_zhat : nullptr, tw.repr,
                         &out.repr_empty);
  out.l_div = loss_div(out.z_hat.data, bank_d, need_zhat_grad ? &g_zhat : nullptr, tw.div,
                       &out.div_empty);
  out.l_sr = loss_sr(out.z_hat, sr.kernel_a, sr.antialias, need_zhat_grad ? &g_zhat : nullptr,
                     tw.sr);

  out.total = tw.simple * out.l_simple + tw.repr * out.l_repr + tw.div * out.l_div +
              tw.sr * out.l_sr;

  if (grad) {
    if (need_zhat_grad) {
      const double dz = predict_clean_deps(mode, ab);
      for (std::size_t i = 0; i < g_eps.size(); ++i) g_eps[i] += dz * g_zhat[i];
    }
    Latent g(z0.height, z0.width, z0.channels);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = grad_scale * g_eps[i];
    net.backward(params, cache, g, *grad);
  }
  return out;
}

StepStats train_step(const Denoiser& net, std::vector<double>& params,
                     const std::vector<BatchItem>& batch, MemoryBank& bank_m,
                     MemoryBank& bank_d, const NoiseSchedule& sched,
                     const TrainStepConfig& cfg, AdamState& opt, Rng& rng) {
  if (batch.empty()) throw data_error("train_step: empty batch");
  const int B = static_cast<int>(batch.size());

  // Randomness is drawn serially up front so the batch loop can run in
  // parallel without touching the generator.
  std::vector<int> ts(B);
  std::vector<Latent> epss(B);
  for (int i = 0; i < B; ++i) {
    ts[i] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
    Latent e(batch[i].z0.height, batch[i].z0.width, batch[i].z0.channels);
    for (double& v : e.data) v = rng.normal();
    epss[i] = std::move(e);
  }

  const TermWeights tw{1.0, cfg.weights.lambda_r, cfg.weights.lambda_d, cfg.weights.lambda_sr};
  std::vector<std::vector<double>> grads(B);
  std::vector<ItemLoss> losses(B);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < B; ++i) {
    grads[i].assign(params.size(), 0.0);
    losses[i] = item_loss_grad(net, params, batch[i].z0, batch[i].label, ts[i], epss[i],
                               bank_m, bank_d, sched, tw, cfg.sr, cfg.clean_mode, &grads[i],
                               1.0);
  }

  // Ordered reduction: item order, independent of the thread count.
  std::vector<double> grad(params.size(), 0.0);
  const double inv_b = 1.0 / B;
  for (int i = 0; i < B; ++i)
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += inv_b * grads[i][j];
  for (std::size_t j = 0; j < grad.size(); ++j)
    if (!std::isfinite(grad[j]))
      throw numeric_error("non-finite gradient at parameter " + std::to_string(j));

  adam_update(params, grad, opt, cfg.adam);

  // Bank updates happen after the loss evaluation, in item order.
  for (int i = 0; i < B; ++i) bank_m.push(batch[i].z0);
  for (int i = 0; i < B; ++i) bank_d.push(losses[i].z_hat);

  StepStats stats;
  for (int i = 0; i < B; ++i) {
    stats.l_simple += inv_b * losses[i].l_simple;
    stats.l_repr += inv_b * losses[i].l_repr;
    stats.l_div += inv_b * losses[i].l_div;
    stats.l_sr += inv_b * losses[i].l_sr;
    stats.bank_warning = stats.bank_warning || losses[i].repr_empty || losses[i].div_empty;
  }
  stats.total = total_loss(stats.l_simple, stats.l_repr, stats.l_div, stats.l_sr, cfg.weights);
  return stats;
}

}  // namespace dksr::diffusion
