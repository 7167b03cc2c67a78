#include "dksr/sampler.hpp"

#include <cmath>
#include <string>

#include "dksr/errors.hpp"
#include "dksr/rng.hpp"

namespace dksr::diffusion {

namespace {

// Evenly spaced increasing subsequence ending at T: tau_s = (s+1)*T/S.
std::vector<int> timestep_subsequence(int T, int steps) {
  std::vector<int> tau(steps);
  for (int s = 0; s < steps; ++s)
    tau[s] = static_cast<int>((static_cast<long long>(s + 1) * T) / steps);
  if (tau[0] < 1) tau[0] = 1;
  return tau;
}

}  // namespace

Latent ddim_sample_one(const Denoiser& net, const std::vector<double>& params,
                       const NoiseSchedule& sched, const SampleSpec& spec, int label,
                       std::uint64_t seed) {
  if (spec.steps < 1 || spec.steps > sched.T)
    throw config_error("ddim: steps must be in [1, T]");
  const auto tau = timestep_subsequence(sched.T, spec.steps);

  Rng rng(seed);
  Latent z(spec.height, spec.width, net.config().channels);
  for (double& v : z.data) v = rng.normal();

  for (int s = spec.steps - 1; s >= 0; --s) {
    const int t = tau[s];
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = s > 0 ? sched.alpha_bar(tau[s - 1]) : 1.0;
    const Latent eps_hat = net.forward(params, z, label, t);

    const double sa = std::sqrt(ab_t);
    const double sb = std::sqrt(1.0 - ab_t);
    const double pa = std::sqrt(ab_prev);
    const double pb = std::sqrt(1.0 - ab_prev);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double x0 = (z.data[i] - sb * eps_hat.data[i]) / sa;
      z.data[i] = pa * x0 + pb * eps_hat.data[i];
    }
  }
  return imgmath::clamp01(z);
}

std::vector<Latent> sample(const Denoiser& net, const std::vector<double>& params,
                           const NoiseSchedule& sched, const SampleSpec& spec, int n,
                           const std::vector<int>& labels, std::uint64_t seed,
                           std::vector<int>* labels_out) {
  if (n < 1) throw config_error("sample: n must be >= 1");
  if (labels.empty()) throw config_error("sample: label list must be nonempty");

  std::vector<int> cls(n);
  for (int i = 0; i < n; ++i) cls[i] = labels[i % labels.size()];
  std::vector<Latent> out(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const std::uint64_t s = derive_seed(seed, "img/" + std::to_string(i));
    out[i] = ddim_sample_one(net, params, sched, spec, cls[i], s);
  }
  if (labels_out) *labels_out = std::move(cls);
  return out;
}

}  // namespace dksr::diffusion
