#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dksr/checkpoint.hpp"
#include "dksr/denoiser.hpp"
#include "dksr/diffusion.hpp"
#include "dksr/errors.hpp"
#include "dksr/ref/reference.hpp"
#include "dksr/sampler.hpp"
#include "dksr/train.hpp"
#include "helpers.hpp"

using namespace dksr;
using namespace dksr::diffusion;
using dksr::imgmath::ImageTensor;
using dksr::testing::constant_image;
using dksr::testing::random_image;

namespace {

Latent latent_from(std::initializer_list<double> vals) {
  Latent z(1, static_cast<int>(vals.size()), 1);
  std::size_t i = 0;
  for (double v : vals) z.data[i++] = v;
  return z;
}

// Unit vector in dim d with prescribed cosine against e1.
std::vector<double> with_similarity(double sim, std::size_t d) {
  std::vector<double> v(d, 0.0);
  v[0] = sim;
  v[1] = std::sqrt(std::max(0.0, 1.0 - sim * sim));
  return v;
}

}  // namespace

TEST_CASE("make_schedule: two-term product and bounds") {
  const auto s = make_schedule(2, 0.1, 0.2);
  CHECK(s.alphas_bar[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.alphas_bar[1] == doctest::Approx(0.72).epsilon(1e-15));

  CHECK_THROWS_AS(make_schedule(1, 0.1, 0.2), config_error);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.2), config_error);
  CHECK_THROWS_AS(make_schedule(10, 0.3, 0.2), config_error);
  CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), config_error);
}

TEST_CASE("make_schedule: strictly decreasing, toy default matches product oracle") {
  const auto s = make_schedule(100, 1e-4, 0.02);
  for (int i = 1; i < s.T; ++i) CHECK(s.alphas_bar[i] < s.alphas_bar[i - 1]);
  for (int i = 0; i < s.T; ++i) {
    CHECK(s.alphas_bar[i] > 0.0);
    CHECK(s.alphas_bar[i] < 1.0);
  }
  const auto oracle = ref::alpha_bar_longdouble(s.betas);
  for (int i = 0; i < s.T; ++i)
    CHECK(s.alphas_bar[i] == doctest::Approx(oracle[i]).epsilon(1e-13));
}

TEST_CASE("forward_diffuse: identity extension, pure scaling, closed form") {
  Rng rng(1);
  const Latent z0 = random_image(4, 4, 3, rng);
  const Latent zero(4, 4, 3, 0.0);
  const auto s = make_schedule(10, 1e-4, 0.02);

  const Latent id = forward_diffuse(z0, 0, zero, s);
  for (std::size_t i = 0; i < z0.size(); ++i) CHECK(id.data[i] == z0.data[i]);

  const Latent scaled = forward_diffuse(z0, 5, zero, s);
  const double c = std::sqrt(s.alpha_bar(5));
  for (std::size_t i = 0; i < z0.size(); ++i)
    CHECK(scaled.data[i] == doctest::Approx(c * z0.data[i]).epsilon(1e-15));

  NoiseSchedule custom;
  custom.T = 1;
  custom.betas = {0.36};
  custom.alphas_bar = {0.64};
  const Latent z = forward_diffuse(latent_from({1, 0}), 1, latent_from({0, 1}), custom);
  CHECK(z.data[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(z.data[1] == doctest::Approx(0.6).epsilon(1e-15));

  CHECK_THROWS_AS(forward_diffuse(z0, 11, zero, s), data_error);
}

TEST_CASE("forward_diffuse: preserves expected squared norm for unit-variance inputs") {
  Rng rng(2024);
  const auto s = make_schedule(100, 1e-4, 0.02);
  const int n = 10000;
  double acc = 0.0;
  Latent z0(1, 1, 1), eps(1, 1, 1);
  for (int i = 0; i < n; ++i) {
    z0.data[0] = rng.normal();
    eps.data[0] = rng.normal();
    const int t = rng.uniform_int(1, 100);
    const double v = forward_diffuse(z0, t, eps, s).data[0];
    acc += v * v;
  }
  CHECK(std::fabs(acc / n - 1.0) < 0.03);
}

TEST_CASE("memory bank: FIFO semantics") {
  MemoryBank bank(2);
  CHECK(bank.empty());
  bank.push(latent_from({1, 0, 0}));
  CHECK(bank.size() == 1);
  bank.push(latent_from({0, 1, 0}));
  bank.push(latent_from({0, 0, 1}));
  REQUIRE(bank.size() == 2);
  CHECK(bank.entry(0)[1] == 1.0);  // b survived
  CHECK(bank.entry(1)[2] == 1.0);  // c survived

  // capacity N, push 3N items -> final contents are the last N in order
  const int N = 5;
  MemoryBank big(N);
  for (int i = 0; i < 3 * N; ++i) {
    std::vector<double> v(3 * N, 0.0);
    v[i] = 2.0;  // direction i, non-unit on purpose
    big.push(v);
  }
  REQUIRE(big.size() == static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    CHECK(big.entry(i)[2 * N + i] == 1.0);  // normalized on push
  }
}

TEST_CASE("loss_simple: trivial and oracle cases") {
  Rng rng(5);
  const Latent a = random_image(4, 4, 3, rng);
  CHECK(loss_simple(a, a) == 0.0);

  Latent b = a;
  for (double& v : b.data) v += 0.1;
  CHECK(loss_simple(b, a) == doctest::Approx(0.01).epsilon(1e-12));

  const Latent c = random_image(4, 4, 3, rng);
  double oracle = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    oracle += (a.data[i] - c.data[i]) * (a.data[i] - c.data[i]);
  oracle /= static_cast<double>(a.size());
  CHECK(std::fabs(loss_simple(a, c) - oracle) <= 1e-12);
}

TEST_CASE("loss_repr and loss_div: trivial memberships") {
  Rng rng(6);
  const auto z = dksr::testing::random_vector(8, rng);
  MemoryBank bank(4);
  bank.push(z);
  CHECK(loss_repr(z, bank) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(loss_div(z, bank) == doctest::Approx(1.0).epsilon(1e-12));

  MemoryBank ortho(4);
  std::vector<double> e1(8, 0.0), e2(8, 0.0);
  e1[0] = 1.0;
  e2[1] = 1.0;
  ortho.push(e2);
  CHECK(loss_repr(e1, ortho) == 0.0);

  MemoryBank anti(4);
  auto neg = z;
  for (double& v : neg) v = -v;
  anti.push(neg);
  CHECK(loss_div(z, anti) == doctest::Approx(-1.0).epsilon(1e-12));

  // Prescribed similarities {0.9, 0.2, -0.5}.
  MemoryBank three(4);
  three.push(with_similarity(0.9, 8));
  three.push(with_similarity(0.2, 8));
  three.push(with_similarity(-0.5, 8));
  std::vector<double> probe(8, 0.0);
  probe[0] = 1.0;
  CHECK(loss_repr(probe, three) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(loss_div(probe, three) == doctest::Approx(0.9).epsilon(1e-12));

  // Empty bank contributes zero and warns.
  MemoryBank empty(4);
  bool warned = false;
  CHECK(loss_repr(z, empty, nullptr, 1.0, &warned) == 0.0);
  CHECK(warned);
}

TEST_CASE("minimax losses equal exhaustive enumeration exactly") {
  Rng rng(7);
  for (int it = 0; it < 200; ++it) {
    const std::size_t d = 4 + rng.below(12);
    const int entries = 1 + static_cast<int>(rng.below(10));
    MemoryBank bank(8);
    for (int i = 0; i < entries; ++i) bank.push(dksr::testing::random_vector(d, rng));
    const auto z = dksr::testing::random_vector(d, rng);

    const auto sims = ref::cosine_all(z, bank.snapshot());
    double mn = sims[0], mx = sims[0];
    for (double s : sims) {
      if (s < mn) mn = s;
      if (s > mx) mx = s;
    }
    CHECK(loss_repr(z, bank) == -mn);
    CHECK(loss_div(z, bank) == mx);
    CHECK(loss_repr(z, bank) >= -1.0 - 1e-12);
    CHECK(loss_repr(z, bank) <= 1.0 + 1e-12);
    CHECK(loss_div(z, bank) >= -1.0 - 1e-12);
    CHECK(loss_div(z, bank) <= 1.0 + 1e-12);
  }
}

TEST_CASE("loss_sr: flat is zero, checkerboard matches composed oracle") {
  CHECK(loss_sr(constant_image(32, 32, 3, 0.7)) == doctest::Approx(0.0).epsilon(1e-20));

  const ImageTensor cb = dksr::testing::checkerboard(32, 32, 3);
  const double v = loss_sr(cb);
  CHECK(v < -1e-4);

  ImageTensor xs = cb;
  for (double& p : xs.data) p = smooth_clamp01(p);
  imgmath::ResampleSpec down;
  down.scale = 0.25;
  imgmath::ResampleSpec up;
  up.scale = 4.0;
  const ImageTensor bic = ref::resample_dense(ref::resample_dense(xs, down), up);
  CHECK(v == doctest::Approx(-ref::mse_brute(bic, xs)).epsilon(1e-9));

  CHECK_THROWS_AS(loss_sr(constant_image(30, 30, 3, 0.5)), data_error);
}

TEST_CASE("total_loss: weighted sum, defaults, non-finite rejection") {
  LossWeights off{0.0, 0.0, 0.0};
  CHECK(total_loss(0.37, 0.5, -0.5, 0.2, off) == 0.37);

  LossWeights defaults;
  CHECK(defaults.lambda_r == 0.002);
  CHECK(defaults.lambda_d == 0.008);
  CHECK(defaults.lambda_sr == 1.0);
  CHECK(total_loss(0.5, -0.8, 0.3, -0.1, defaults) == doctest::Approx(0.4008).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(
      total_loss(0.5, std::numeric_limits<double>::infinity(), 0.0, 0.0, defaults),
      "non-finite loss term: L_r", numeric_error);
}

TEST_CASE("predict_clean: trivial forms and naive forward oracle") {
  Rng rng(9);
  const Latent z_t = random_image(8, 8, 3, rng);

  const Latent zero(8, 8, 3, 0.0);
  const Latent same = predict_clean(z_t, zero, CleanMode::kPaper, 0.5);
  for (std::size_t i = 0; i < z_t.size(); ++i) CHECK(same.data[i] == z_t.data[i]);

  const Latent null = predict_clean(z_t, z_t, CleanMode::kPaper, 0.5);
  for (double v : null.data) CHECK(v == 0.0);

  // Fixed random weights: production forward vs dumb re-implementation.
  DenoiserConfig cfg;
  cfg.num_classes = 5;
  const Denoiser net(cfg);
  Rng wrng(31337);
  const auto params = net.init_params(wrng);
  for (int cls : {0, 3}) {
    const Latent out = net.forward(params, z_t, cls, 42);
    const Latent oracle = ref::denoiser_forward_naive(net, params, z_t, cls, 42);
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(std::fabs(out.data[i] - oracle.data[i]) <= 1e-9);
  }

  // Scaled estimate mode recovers z0 exactly when eps_pred equals the true
  // noise used by the forward process.
  const auto sched = make_schedule(50, 1e-4, 0.02);
  Latent eps(8, 8, 3);
  for (double& v : eps.data) v = rng.normal();
  const Latent z0 = random_image(8, 8, 3, rng);
  const Latent noisy = forward_diffuse(z0, 30, eps, sched);
  const Latent rec = predict_clean(noisy, eps, CleanMode::kScaled, sched.alpha_bar(30));
  for (std::size_t i = 0; i < z0.size(); ++i)
    CHECK(rec.data[i] == doctest::Approx(z0.data[i]).epsilon(1e-10));
}

namespace {

struct GradCheckSetup {
  DenoiserConfig cfg;
  Denoiser net{DenoiserConfig{}};
  std::vector<double> params;
  Latent z0;
  int label = 0;
  int t = 1;
  Latent eps;
  MemoryBank bank_m{4};
  MemoryBank bank_d{4};
  NoiseSchedule sched;
  SrLossSpec sr;

  explicit GradCheckSetup(Rng& rng, int img = 8) {
    cfg.num_classes = 3;
    cfg.width = 8;
    net = Denoiser(cfg);
    params = net.init_params(rng);
    z0 = random_image(img, img, 3, rng);
    label = static_cast<int>(rng.below(3));
    sched = make_schedule(20, 1e-4, 0.02);
    t = rng.uniform_int(1, 20);
    eps = Latent(img, img, 3);
    for (double& v : eps.data) v = rng.normal();
    for (int i = 0; i < 3; ++i) {
      bank_m.push(dksr::testing::random_vector(z0.size(), rng));
      bank_d.push(dksr::testing::random_vector(z0.size(), rng));
    }
  }

  double eval(const std::vector<double>& p, const TermWeights& tw) const {
    return item_loss_grad(net, p, z0, label, t, eps, bank_m, bank_d, sched, tw, sr,
                          CleanMode::kPaper, nullptr)
        .total;
  }

  // Gap between best and runner-up similarity; FD steps must not cross an
  // arg-min/arg-max boundary.
  double tie_gap() const {
    const auto base = item_loss_grad(net, params, z0, label, t, eps, bank_m, bank_d, sched,
                                     TermWeights{}, sr, CleanMode::kPaper, nullptr);
    const auto sims_m = ref::cosine_all(base.z_hat.data, bank_m.snapshot());
    const auto sims_d = ref::cosine_all(base.z_hat.data, bank_d.snapshot());
    auto gap = [](std::vector<double> s, bool want_min) {
      std::sort(s.begin(), s.end());
      if (!want_min) std::reverse(s.begin(), s.end());
      return s.size() > 1 ? std::fabs(s[1] - s[0]) : 1.0;
    };
    return std::min(gap(sims_m, true), gap(sims_d, false));
  }
};

void check_gradient(const GradCheckSetup& s, const TermWeights& tw, Rng& rng,
                    int coords = 64) {
  std::vector<double> grad(s.params.size(), 0.0);
  item_loss_grad(s.net, s.params, s.z0, s.label, s.t, s.eps, s.bank_m, s.bank_d, s.sched, tw,
                 s.sr, CleanMode::kPaper, &grad);
  auto f = [&](const std::vector<double>& p) { return s.eval(p, tw); };
  for (int i = 0; i < coords; ++i) {
    const std::size_t idx = rng.below(s.params.size());
    const double fd = ref::central_difference(f, s.params, idx, 1e-3);
    const double an = grad[idx];
    const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
    CHECK(std::fabs(fd - an) / denom <= 1e-4);
  }
}

}  // namespace

TEST_CASE("gradients of every loss term match central finite differences") {
  Rng rng(99);
  for (int config = 0; config < 3; ++config) {
    GradCheckSetup s(rng);
    if (s.tie_gap() < 0.05) continue;  // stay clear of arg-min/arg-max ties
    check_gradient(s, TermWeights{1, 0, 0, 0}, rng, 24);
    check_gradient(s, TermWeights{0, 1, 0, 0}, rng, 24);
    check_gradient(s, TermWeights{0, 0, 1, 0}, rng, 24);
    check_gradient(s, TermWeights{0, 0, 0, 1}, rng, 24);
    check_gradient(s, TermWeights{1, 0.002, 0.008, 1.0}, rng, 64);
  }
}

TEST_CASE("train_step: zero learning rate leaves parameters unchanged") {
  Rng rng(123);
  DenoiserConfig cfg;
  cfg.width = 8;
  cfg.num_classes = 2;
  Denoiser net(cfg);
  auto params = net.init_params(rng);
  const auto before = params;

  std::vector<BatchItem> batch;
  batch.push_back({random_image(8, 8, 3, rng), 0});
  batch.push_back({random_image(8, 8, 3, rng), 1});

  MemoryBank m(8), d(8);
  const auto sched = make_schedule(20, 1e-4, 0.02);
  TrainStepConfig tcfg;
  tcfg.adam.lr = 0.0;
  AdamState opt;
  opt.init(params.size());
  const auto stats = train_step(net, params, batch, m, d, sched, tcfg, opt, rng);
  CHECK(std::isfinite(stats.total));
  CHECK(params == before);
  CHECK(m.size() == 2);  // banks updated even at lr 0
  CHECK(d.size() == 2);
}

TEST_CASE("train_step: repeated batch overfits, loss decreases") {
  Rng rng(321);
  DenoiserConfig cfg;
  cfg.width = 8;
  cfg.num_classes = 2;
  Denoiser net(cfg);
  auto params = net.init_params(rng);

  std::vector<BatchItem> batch;
  batch.push_back({random_image(8, 8, 3, rng), 0});

  MemoryBank m(8), d(8);
  const auto sched = make_schedule(20, 1e-4, 0.02);
  TrainStepConfig tcfg;
  AdamState opt;
  opt.init(params.size());

  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    const auto stats = train_step(net, params, batch, m, d, sched, tcfg, opt, rng);
    if (step == 0) first = stats.total;
    last = stats.total;
  }
  CHECK(last < first);
}

TEST_CASE("sampler: determinism, range, round-robin classes") {
  Rng rng(55);
  DenoiserConfig cfg;
  cfg.width = 8;
  cfg.num_classes = 7;
  Denoiser net(cfg);
  const auto params = net.init_params(rng);  // untrained on purpose
  const auto sched = make_schedule(40, 1e-4, 0.02);
  SampleSpec spec;
  spec.steps = 10;
  spec.height = 16;
  spec.width = 16;

  std::vector<int> labels{0, 1, 2, 3, 4, 5, 6};
  std::vector<int> got;
  const auto a = sample(net, params, sched, spec, 7, labels, 777, &got);
  const auto b = sample(net, params, sched, spec, 7, labels, 777);
  REQUIRE(a.size() == 7);
  CHECK(got == labels);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].size() == b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      CHECK(a[i].data[j] == b[i].data[j]);  // bit identical
      CHECK(a[i].data[j] >= 0.0);
      CHECK(a[i].data[j] <= 1.0);
    }
  }

  const auto c = sample(net, params, sched, spec, 3, labels, 778);
  bool any_diff = false;
  for (std::size_t j = 0; j < c[0].size(); ++j)
    if (c[0].data[j] != a[0].data[j]) any_diff = true;
  CHECK(any_diff);  // different seed, different draw
}

TEST_CASE("checkpoint: round trip and corruption errors") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dksr_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.dksr").string();

  Rng rng(4);
  Checkpoint ckpt;
  ckpt.config["model.width"] = "16";
  ckpt.config["schedule.T"] = "100";
  ckpt.params = dksr::testing::random_vector(257, rng);
  save_checkpoint(ckpt, path);

  const auto back = load_checkpoint(path);
  CHECK(back.version == 1);
  CHECK(back.config.at("model.width") == "16");
  CHECK(back.config.at("schedule.T") == "100");
  REQUIRE(back.params.size() == ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i)
    CHECK(back.params[i] == ckpt.params[i]);

  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
  }
  CHECK_THROWS_AS(load_checkpoint(path), data_error);
  fs::remove_all(dir);
}
