#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dksr::cli {

// One config file drives every stage; each key can be overridden from the
// command line as --set section.key=value. All randomness derives from
// run.seed through named substreams.
struct PipelineConfig {
  // [data]
  std::string input_dir = "corpus";
  std::string out_dir = "out";
  int test_every = 5;  // every n-th image (sorted order) is held out

  // [resample]
  double kernel_a = -0.5;
  bool antialias = true;

  // [select]
  int patch_size = 32;
  int stride = 16;
  std::string threshold_mode = "fixed";  // fixed | median
  double threshold_db = 23.0;

  // [cluster]
  int k = 7;
  int max_iter = 100;
  int n_restart = 1;
  std::string features = "builtin";  // builtin | file
  std::string feature_file;

  // [distill]
  int steps = 1200;
  int batch_size = 8;
  double lr = 1e-3;
  int T = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double lambda_r = 0.002;
  double lambda_d = 0.008;
  double lambda_sr = 1.0;
  int bank_m = 64;
  int bank_d = 64;
  int image_size = 32;
  int model_width = 16;
  std::string clean_estimate = "paper";  // paper | scaled

  // [sample]
  int sample_steps = 50;

  // [sr]
  std::vector<int> sr_sizes = {16};
  std::vector<int> sr_seeds = {0, 1, 2};
  int sr_epochs = 150;
  int crop_size = 32;
  double sr_threshold_db = 23.0;
  int sr_width = 32;

  // [run]
  std::uint64_t seed = 1234;
};

PipelineConfig parse_config_file(const std::string& path);

// key is "section.key"; bad keys or unparsable values raise config_error.
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Every precondition from the module contracts, errors name the field.
void validate(const PipelineConfig& cfg);

// Canonical text form; byte-stable for identical configs.
std::string render_config(const PipelineConfig& cfg);
void write_effective_config(const PipelineConfig& cfg, const std::string& dir);

}  // namespace dksr::cli
