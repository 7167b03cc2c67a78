#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "dksr/curation.hpp"
#include "dksr/errors.hpp"
#include "dksr/metrics.hpp"
#include "dksr/ref/reference.hpp"
#include "dksr/rng.hpp"
#include "helpers.hpp"

using namespace dksr;
using namespace dksr::curation;
using dksr::imgmath::ImageTensor;
using dksr::testing::checkerboard;
using dksr::testing::constant_image;
using dksr::testing::random_image;

TEST_CASE("extract_patches: exact tiling") {
  const ImageTensor img = constant_image(64, 64, 3, 0.5);
  const auto recs = extract_patches(img, "img", 32, 32);
  REQUIRE(recs.size() == 4);
  std::set<std::pair<int, int>> coords;
  for (const auto& r : recs) coords.insert({r.x, r.y});
  CHECK(coords == std::set<std::pair<int, int>>{{0, 0}, {0, 32}, {32, 0}, {32, 32}});
}

TEST_CASE("extract_patches: remainder dropped") {
  const ImageTensor img = constant_image(70, 70, 3, 0.5);
  CHECK(extract_patches(img, "img", 32, 32).size() == 4);
}

TEST_CASE("extract_patches: closed-form grid count and coords") {
  const ImageTensor img = constant_image(64, 96, 3, 0.5);  // H=64, W=96
  const auto recs = extract_patches(img, "img", 32, 16);
  const int nx = (96 - 32) / 16 + 1;
  const int ny = (64 - 32) / 16 + 1;
  REQUIRE(static_cast<int>(recs.size()) == nx * ny);
  CHECK(recs.size() == 15);
  std::size_t i = 0;
  for (int gy = 0; gy < ny; ++gy)
    for (int gx = 0; gx < nx; ++gx, ++i) {
      CHECK(recs[i].x == gx * 16);
      CHECK(recs[i].y == gy * 16);
    }
}

TEST_CASE("extract_patches: oversized patch errors") {
  const ImageTensor img = constant_image(16, 16, 3, 0.5);
  CHECK_THROWS_AS(extract_patches(img, "img", 32, 32), data_error);
}

TEST_CASE("score_patch: flat patch hits the cap") {
  CHECK(score_patch(constant_image(32, 32, 3, 0.42)) == imgmath::kPsnrCap);
}

TEST_CASE("score_patch: checkerboard scores from composed oracle, well below 23 dB") {
  const ImageTensor cb = checkerboard(32, 32, 3);
  const double score = score_patch(cb);

  imgmath::ResampleSpec down;
  down.scale = 0.25;
  imgmath::ResampleSpec up;
  up.scale = 4.0;
  const ImageTensor rec = ref::resample_dense(ref::resample_dense(cb, down), up);
  const double oracle = ref::psnr_brute(cb, rec);

  CHECK(score == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(score < 23.0);
}

TEST_CASE("score_patch: deterministic and divisible-by-4 precondition") {
  Rng rng(17);
  const ImageTensor p = random_image(32, 32, 3, rng);
  CHECK(score_patch(p) == score_patch(p));
  CHECK_THROWS_AS(score_patch(constant_image(30, 30, 3, 0.1)), data_error);
}

TEST_CASE("filter_patches: fixed threshold keeps strictly-below scores") {
  std::vector<PatchRecord> recs;
  for (double s : {30.0, 22.0, 25.0, 10.0}) recs.push_back({"img", 0, 0, 32, s, std::nullopt});
  CurationConfig cfg;
  cfg.threshold_mode = ThresholdMode::kFixed;
  cfg.threshold_db = 23.0;
  const auto kept = filter_patches(recs, cfg);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].psnr_bic == 22.0);
  CHECK(kept[1].psnr_bic == 10.0);
}

TEST_CASE("filter_patches: empty input, median mode on 2n distinct scores") {
  CurationConfig cfg;
  CHECK(filter_patches({}, cfg).empty());

  Rng rng(23);
  std::vector<PatchRecord> recs;
  for (int i = 0; i < 20; ++i)
    recs.push_back({"img", i, 0, 32, 10.0 + i + rng.uniform() * 0.5, std::nullopt});
  cfg.threshold_mode = ThresholdMode::kMedian;
  const auto kept = filter_patches(recs, cfg);
  CHECK(kept.size() == 10);  // strictly below the lower median of 2n values

  // Filter output is a subset honoring the threshold on both sides.
  const double t = median_threshold(recs);
  for (const auto& r : kept) CHECK(r.psnr_bic < t);
  std::size_t dropped = 0;
  for (const auto& r : recs)
    if (r.psnr_bic >= t) ++dropped;
  CHECK(dropped + kept.size() == recs.size());
}

TEST_CASE("adding flat patches never changes which textured patches pass") {
  Rng rng(31);
  const ImageTensor img = random_image(64, 64, 3, rng);
  auto recs = extract_patches(img, "img", 32, 32);
  CurationConfig cfg;
  score_records(img, recs, cfg);
  cfg.threshold_mode = ThresholdMode::kFixed;
  cfg.threshold_db = 23.0;
  const auto kept_before = filter_patches(recs, cfg);

  auto with_flat = recs;
  with_flat.push_back({"flat", 0, 0, 32, imgmath::kPsnrCap, std::nullopt});
  const auto kept_after = filter_patches(with_flat, cfg);
  REQUIRE(kept_before.size() == kept_after.size());
  for (std::size_t i = 0; i < kept_before.size(); ++i) {
    CHECK(kept_before[i].x == kept_after[i].x);
    CHECK(kept_before[i].y == kept_after[i].y);
  }
}

TEST_CASE("manifest round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dksr_curation_test";
  fs::create_directories(dir);
  const std::string path = (dir / "manifest.csv").string();

  std::vector<PatchRecord> recs = {
      {"a.ppm", 0, 16, 32, 21.123456789, std::nullopt},
      {"b.ppm", 32, 0, 32, 19.5, 3},
  };
  write_manifest(recs, path);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_id == "a.ppm");
  CHECK(back[0].x == 0);
  CHECK(back[0].y == 16);
  CHECK(back[0].psnr_bic == doctest::Approx(21.123457).epsilon(1e-9));  // 6 decimals
  CHECK_FALSE(back[0].cluster_id.has_value());
  REQUIRE(back[1].cluster_id.has_value());
  CHECK(*back[1].cluster_id == 3);

  CHECK_THROWS_AS(read_manifest((dir / "none.csv").string()), data_error);
  fs::remove_all(dir);
}
