#pragma once

#include <cstdint>
#include <vector>

#include "dksr/denoiser.hpp"
#include "dksr/diffusion.hpp"

namespace dksr::diffusion {

struct SampleSpec {
  int steps = 50;  // <= sched.T
  int height = 32;
  int width = 32;
};

// Deterministic DDIM (eta = 0) over an evenly spaced timestep
// subsequence, from a seeded standard-normal start. Output is hard-clamped
// to [0,1]. Pure function of (params, label, seed, spec).
Latent ddim_sample_one(const Denoiser& net, const std::vector<double>& params,
                       const NoiseSchedule& sched, const SampleSpec& spec, int label,
                       std::uint64_t seed);

// n images with class labels assigned round-robin from `labels`; image i
// uses the derived seed (seed, "img/<i>") so samples are independent and
// order-stable under parallel generation.
std::vector<Latent> sample(const Denoiser& net, const std::vector<double>& params,
                           const NoiseSchedule& sched, const SampleSpec& spec, int n,
                           const std::vector<int>& labels, std::uint64_t seed,
                           std::vector<int>* labels_out = nullptr);

}  // namespace dksr::diffusion
