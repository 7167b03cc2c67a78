#include "dksr/diffusion.hpp"

#include <cmath>
#include <string>

#include "dksr/errors.hpp"
#include "dksr/resample.hpp"

namespace dksr::diffusion {

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 1 || t > T) throw data_error("timestep out of range");
  return alphas_bar[t - 1];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw config_error("make_schedule: T must be >= 2");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw config_error("make_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.betas.resize(T);
  s.alphas_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    s.betas[i] = beta_start + (beta_end - beta_start) * i / (T - 1);
    prod *= 1.0 - s.betas[i];
    s.alphas_bar[i] = prod;
  }
  return s;
}

Latent forward_diffuse(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& sched) {
  if (z0.size() != eps.size()) throw data_error("forward_diffuse: shape mismatch");
  const double ab = sched.alpha_bar(t);
  const double c0 = std::sqrt(ab);
  const double c1 = std::sqrt(1.0 - ab);
  Latent z = z0;
  for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = c0 * z0.data[i] + c1 * eps.data[i];
  return z;
}

MemoryBank::MemoryBank(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw config_error("memory bank capacity must be >= 1");
  ring_.resize(capacity);
}

void MemoryBank::push(const std::vector<double>& latent) {
  double norm2 = 0.0;
  for (double v : latent) norm2 += v * v;
  std::vector<double> unit(latent.size(), 0.0);
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < latent.size(); ++i) unit[i] = latent[i] * inv;
  } else if (!unit.empty()) {
    unit[0] = 1.0;  // canonical e1 for the zero latent
  }
  ring_[cursor_] = std::move(unit);
  cursor_ = (cursor_ + 1) % capacity_;
  if (cursor_ == 0) full_ = true;
}

void MemoryBank::push(const Latent& latent) { push(latent.data); }

const std::vector<double>& MemoryBank::entry(std::size_t i) const {
  if (i >= size()) throw data_error("memory bank index out of range");
  if (!full_) return ring_[i];
  return ring_[(cursor_ + i) % capacity_];
}

std::vector<std::vector<double>> MemoryBank::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(entry(i));
  return out;
}

double smooth_clamp01(double x) {
  // beta = 10; softplus(u) = log1p(exp(u)) / beta, computed on the
  // negative branch to stay overflow-free.
  constexpr double kBeta = 10.0;
  auto sp = [](double u) {
    return u > 0.0 ? u + std::log1p(std::exp(-kBeta * u)) / kBeta
                   : std::log1p(std::exp(kBeta * u)) / kBeta;
  };
  return x - sp(x - 1.0) + sp(-x);
}

double smooth_clamp01_grad(double x) {
  constexpr double kBeta = 10.0;
  auto sigmoid = [](double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  };
  return 1.0 - sigmoid(kBeta * (x - 1.0)) - sigmoid(-kBeta * x);
}

double loss_simple(const Latent& eps_pred, const Latent& eps) {
  if (eps_pred.size() != eps.size()) throw data_error("loss_simple: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps_pred.data[i] - eps.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(eps.size());
}

void loss_simple_grad(const Latent& eps_pred, const Latent& eps, double scale,
                      std::vector<double>& grad) {
  const double c = 2.0 * scale / static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    grad[i] += c * (eps_pred.data[i] - eps.data[i]);
}

namespace {

// Cosine of z against a stored unit entry, plus optional gradient wrt z.
// Entries are unit vectors but the norm is recomputed anyway so the value
// matches an enumeration oracle bit for bit.
double cosine_to_entry(const std::vector<double>& z, const std::vector<double>& e) {
  double dot = 0.0, nz = 0.0, ne = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    dot += z[i] * e[i];
    nz += z[i] * z[i];
    ne += e[i] * e[i];
  }
  if (nz == 0.0) throw numeric_error("undefined similarity: zero latent");
  return dot / (std::sqrt(nz) * std::sqrt(ne));
}

void cosine_grad_accum(const std::vector<double>& z, const std::vector<double>& e,
                       double scale, std::vector<double>& grad) {
  double dot = 0.0, nz2 = 0.0, ne2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    dot += z[i] * e[i];
    nz2 += z[i] * z[i];
    ne2 += e[i] * e[i];
  }
  const double nz = std::sqrt(nz2), ne = std::sqrt(ne2);
  // d/dz [ dot / (|z| |e|) ] = e / (|z||e|) - dot * z / (|z|^3 |e|)
  const double c1 = 1.0 / (nz * ne);
  const double c2 = dot / (nz2 * nz * ne);
  for (std::size_t i = 0; i < z.size(); ++i) grad[i] += scale * (c1 * e[i] - c2 * z[i]);
}

}  // namespace

double loss_repr(const std::vector<double>& z_hat, const MemoryBank& bank,
                 std::vector<double>* grad, double grad_scale, bool* empty_bank) {
  if (bank.empty()) {
    if (empty_bank) *empty_bank = true;
    return 0.0;
  }
  if (empty_bank) *empty_bank = false;
  std::size_t arg = 0;
  double best = cosine_to_entry(z_hat, bank.entry(0));
  for (std::size_t i = 1; i < bank.size(); ++i) {
    const double s = cosine_to_entry(z_hat, bank.entry(i));
    if (s < best) {  // strict <: ties keep the lowest index
      best = s;
      arg = i;
    }
  }
  if (grad) cosine_grad_accum(z_hat, bank.entry(arg), -grad_scale, *grad);
  return -best;
}

double loss_div(const std::vector<double>& z_hat, const MemoryBank& bank,
                std::vector<double>* grad, double grad_scale, bool* empty_bank) {
  if (bank.empty()) {
    if (empty_bank) *empty_bank = true;
    return 0.0;
  }
  if (empty_bank) *empty_bank = false;
  std::size_t arg = 0;
  double best = cosine_to_entry(z_hat, bank.entry(0));
  for (std::size_t i = 1; i < bank.size(); ++i) {
    const double s = cosine_to_entry(z_hat, bank.entry(i));
    if (s > best) {
      best = s;
      arg = i;
    }
  }
  if (grad) cosine_grad_accum(z_hat, bank.entry(arg), grad_scale, *grad);
  return best;
}

double loss_sr(const Latent& x_hat_raw, double kernel_a, bool antialias,
               std::vector<double>* grad, double grad_scale) {
  if (x_hat_raw.height % 4 != 0 || x_hat_raw.width % 4 != 0)
    throw data_error("loss_sr: spatial dims must divide by 4");

  Latent xs = x_hat_raw;
  for (double& v : xs.data) v = smooth_clamp01(v);

  const Latent small = imgmath::down4(xs, kernel_a, antialias);
  const Latent bic = imgmath::up4(small, kernel_a);

  const double n = static_cast<double>(xs.size());
  Latent resid = bic;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    resid.data[i] = bic.data[i] - xs.data[i];
    acc += resid.data[i] * resid.data[i];
  }
  const double value = -acc / n;

  if (grad) {
    // d(-mean r^2)/dxs = -(2/n) (A^T r - r), A = up4 ∘ down4.
    imgmath::ResampleSpec down_spec;
    down_spec.scale = 0.25;
    down_spec.kernel_a = kernel_a;
    down_spec.antialias = antialias;
    imgmath::ResampleSpec up_spec;
    up_spec.scale = 4.0;
    up_spec.kernel_a = kernel_a;

    const Latent gu = imgmath::resample_adjoint(resid, small.height, small.width, up_spec);
    const Latent at_r = imgmath::resample_adjoint(gu, xs.height, xs.width, down_spec);
    const double c = -2.0 * grad_scale / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double g_xs = c * (at_r.data[i] - resid.data[i]);
      (*grad)[i] += g_xs * smooth_clamp01_grad(x_hat_raw.data[i]);
    }
  }
  return value;
}

double total_loss(double l_simple, double l_repr, double l_div, double l_sr,
                  const LossWeights& w) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v)) throw numeric_error(std::string("non-finite loss term: ") + name);
  };
  check(l_simple, "L_simple");
  check(l_repr, "L_r");
  check(l_div, "L_d");
  check(l_sr, "L_SR");
  return l_simple + w.lambda_r * l_repr + w.lambda_d * l_div + w.lambda_sr * l_sr;
}

}  // namespace dksr::diffusion
