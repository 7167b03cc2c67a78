#pragma once

#include <functional>
#include <vector>

#include "dksr/denoiser.hpp"
#include "dksr/image.hpp"
#include "dksr/resample.hpp"

// Serial reference implementations, written straight from the defining
// formulas with no shared kernels. They are the oracles the test suites
// compare against and the baseline side of the benchmark target. Keep
// them dumb; speed lives in dksr::imgmath and friends.
namespace dksr::ref {

// Dense 2-D convolution resize: per output pixel, the outer product of the
// two 1-D cubic kernels, renormalized over the reflected footprint.
imgmath::ImageTensor resample_dense(const imgmath::ImageTensor& img,
                                    const imgmath::ResampleSpec& spec);

double mse_brute(const imgmath::ImageTensor& x, const imgmath::ImageTensor& y);
double psnr_brute(const imgmath::ImageTensor& x, const imgmath::ImageTensor& y);

// Per-window weighted mean/variance/covariance, one window at a time.
double ssim_naive(const imgmath::ImageTensor& x, const imgmath::ImageTensor& y);

// Cumulative product of (1 - beta_t) in extended precision.
std::vector<double> alpha_bar_longdouble(const std::vector<double>& betas);

// Exhaustive enumeration of cosine similarities of `latent` against every
// bank entry; returns all similarities in entry order.
std::vector<double> cosine_all(const std::vector<double>& latent,
                               const std::vector<std::vector<double>>& entries);

// Straightforward re-implementation of the denoiser forward pass: explicit
// zero padding, six nested loops per conv, no caching. Shares only the
// parameter layout with the production network.
imgmath::ImageTensor denoiser_forward_naive(const diffusion::Denoiser& net,
                                            const std::vector<double>& params,
                                            const imgmath::ImageTensor& z_t, int cls, int t);

// Central finite difference of f along coordinate idx.
double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> params, std::size_t idx, double h);

}  // namespace dksr::ref
