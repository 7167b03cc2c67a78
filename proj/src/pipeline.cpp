#include "dksr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "dksr/checkpoint.hpp"
#include "dksr/corpus.hpp"
#include "dksr/curation.hpp"
#include "dksr/denoiser.hpp"
#include "dksr/errors.hpp"
#include "dksr/features.hpp"
#include "dksr/image.hpp"
#include "dksr/metrics.hpp"
#include "dksr/resample.hpp"
#include "dksr/rng.hpp"
#include "dksr/sampler.hpp"
#include "dksr/srtrain.hpp"
#include "dksr/train.hpp"

namespace dksr::cli {

namespace fs = std::filesystem;
using imgmath::ImageTensor;

namespace {

std::vector<fs::path> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw data_error("not a directory: " + dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw data_error("no .ppm/.pgm images in " + dir);
  return paths;
}

bool is_test_index(std::size_t i, int test_every) {
  return static_cast<int>(i % test_every) == test_every - 1;
}

ImageTensor to_rgb(const ImageTensor& img) {
  if (img.channels == 3) return img;
  ImageTensor out(img.height, img.width, 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
  return out;
}

// Loads, caches, and RGB-normalizes the images a manifest refers to.
class ImageCache {
 public:
  explicit ImageCache(std::string dir) : dir_(std::move(dir)) {}

  const ImageTensor& get(const std::string& image_id) {
    auto it = cache_.find(image_id);
    if (it != cache_.end()) return it->second;
    const ImageTensor img = to_rgb(imgmath::read_image((fs::path(dir_) / image_id).string()));
    return cache_.emplace(image_id, std::move(img)).first->second;
  }

 private:
  std::string dir_;
  std::unordered_map<std::string, ImageTensor> cache_;
};

ImageTensor patch_for_record(ImageCache& cache, const curation::PatchRecord& r) {
  return imgmath::crop(cache.get(r.image_id), r.x, r.y, r.size);
}

ImageTensor resize_to(const ImageTensor& img, int size, double kernel_a, bool antialias) {
  if (img.height == size && img.width == size) return img;
  imgmath::ResampleSpec spec;
  spec.scale = static_cast<double>(size) / img.height;
  spec.kernel_a = kernel_a;
  spec.antialias = antialias;
  return imgmath::resample(img, spec);
}

void snap_to_8bit(ImageTensor& img) {
  for (double& v : img.data) v = imgmath::quantize8(v) / 255.0;
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt10g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string manifest_path(const PipelineConfig& cfg) {
  return (fs::path(cfg.out_dir) / "manifest.csv").string();
}
std::string checkpoint_path(const PipelineConfig& cfg) {
  return (fs::path(cfg.out_dir) / "checkpoint.dksr").string();
}
std::string loss_csv_path(const PipelineConfig& cfg) {
  return (fs::path(cfg.out_dir) / "loss.csv").string();
}
std::string results_csv_path(const PipelineConfig& cfg) {
  return (fs::path(cfg.out_dir) / "results.csv").string();
}

SelectSummary cmd_select(const PipelineConfig& cfg) {
  validate(cfg);
  const auto paths = list_images(cfg.input_dir);
  fs::create_directories(cfg.out_dir);
  write_effective_config(cfg, cfg.out_dir);

  curation::CurationConfig ccfg;
  ccfg.patch_size = cfg.patch_size;
  ccfg.stride = cfg.stride;
  ccfg.threshold_mode = cfg.threshold_mode == "median" ? curation::ThresholdMode::kMedian
                                                       : curation::ThresholdMode::kFixed;
  ccfg.threshold_db = cfg.threshold_db;
  ccfg.kernel_a = cfg.kernel_a;
  ccfg.antialias = cfg.antialias;

  SelectSummary summary;
  std::vector<curation::PatchRecord> all;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (is_test_index(i, cfg.test_every)) continue;  // held-out split stays untouched
    ImageTensor img;
    try {
      img = to_rgb(imgmath::read_image(paths[i].string()));
    } catch (const data_error& e) {
      std::cerr << "warning: skipping " << paths[i].filename().string() << ": " << e.what()
                << "\n";
      ++summary.skipped;
      continue;
    }
    ++summary.images;
    auto records =
        curation::extract_patches(img, paths[i].filename().string(), ccfg.patch_size, ccfg.stride);
    curation::score_records(img, records, ccfg);
    all.insert(all.end(), records.begin(), records.end());
  }
  if (summary.images == 0) throw data_error("no readable training images in " + cfg.input_dir);

  summary.total_patches = static_cast<int>(all.size());
  const auto kept = curation::filter_patches(all, ccfg);
  summary.kept = static_cast<int>(kept.size());
  summary.manifest = manifest_path(cfg);
  curation::write_manifest(kept, summary.manifest);
  return summary;
}

ClusterSummary cmd_cluster(const PipelineConfig& cfg) {
  validate(cfg);
  const std::string mpath = manifest_path(cfg);
  auto records = curation::read_manifest(mpath);
  if (records.empty()) throw data_error("manifest is empty: " + mpath);

  std::vector<features::FeatureVector> vectors;
  if (cfg.features == "file") {
    vectors = features::load_features(cfg.feature_file);
    if (vectors.size() != records.size())
      throw data_error("feature count " + std::to_string(vectors.size()) +
                       " does not match manifest rows " + std::to_string(records.size()));
  } else {
    ImageCache cache(cfg.input_dir);
    vectors.resize(records.size());
    // Patch loads share the cache; keep this loop serial and let the
    // per-patch math parallelize internally.
    for (std::size_t i = 0; i < records.size(); ++i)
      vectors[i] = features::builtin_features(patch_for_record(cache, records[i]));
  }

  features::KMeansConfig kcfg;
  kcfg.k = cfg.k;
  kcfg.seed = derive_seed(cfg.seed, "cluster");
  kcfg.max_iter = cfg.max_iter;
  kcfg.n_restart = cfg.n_restart;
  const auto result = features::kmeans(vectors, kcfg);

  for (std::size_t i = 0; i < records.size(); ++i) records[i].cluster_id = result.labels[i];
  curation::write_manifest(records, mpath);
  write_effective_config(cfg, cfg.out_dir);

  ClusterSummary summary;
  summary.n = static_cast<int>(records.size());
  summary.k = cfg.k;
  summary.inertia = result.inertia;
  return summary;
}

DistillSummary cmd_distill(const PipelineConfig& cfg) {
  validate(cfg);
  const auto records = curation::read_manifest(manifest_path(cfg));
  if (records.empty()) throw data_error("manifest is empty");
  for (const auto& r : records) {
    if (!r.cluster_id) throw data_error("manifest not clustered; run `cluster` first");
    if (*r.cluster_id < 0 || *r.cluster_id >= cfg.k)
      throw data_error("cluster id " + std::to_string(*r.cluster_id) +
                       " out of range for cluster.k = " + std::to_string(cfg.k));
  }

  ImageCache cache(cfg.input_dir);
  std::vector<diffusion::BatchItem> pool(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    ImageTensor p = patch_for_record(cache, records[i]);
    pool[i].z0 = resize_to(p, cfg.image_size, cfg.kernel_a, cfg.antialias);
    pool[i].label = *records[i].cluster_id;
  }

  const auto sched = diffusion::make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
  diffusion::DenoiserConfig dcfg;
  dcfg.channels = 3;
  dcfg.width = cfg.model_width;
  dcfg.num_classes = cfg.k;
  const diffusion::Denoiser net(dcfg);

  Rng rng(derive_seed(cfg.seed, "distill"));
  auto params = net.init_params(rng);

  diffusion::MemoryBank bank_m(cfg.bank_m), bank_d(cfg.bank_d);
  diffusion::TrainStepConfig tcfg;
  tcfg.adam.lr = cfg.lr;
  tcfg.weights = {cfg.lambda_r, cfg.lambda_d, cfg.lambda_sr};
  tcfg.sr = {cfg.kernel_a, cfg.antialias};
  tcfg.clean_mode = cfg.clean_estimate == "scaled" ? diffusion::CleanMode::kScaled
                                                   : diffusion::CleanMode::kPaper;
  AdamState opt;
  opt.init(params.size());

  fs::create_directories(cfg.out_dir);
  write_effective_config(cfg, cfg.out_dir);
  DistillSummary summary;
  summary.loss_csv = loss_csv_path(cfg);
  std::ofstream loss_csv(summary.loss_csv, std::ios::binary);
  if (!loss_csv) throw data_error("cannot write " + summary.loss_csv);
  loss_csv << "step,L_simple,L_r,L_d,L_SR,total\n";
  loss_csv.flush();  // partial file survives a divergence abort

  bool bank_warned = false;
  std::vector<diffusion::BatchItem> batch(cfg.batch_size);
  for (int step = 1; step <= cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) batch[b] = pool[rng.below(pool.size())];
    diffusion::StepStats stats;
    try {
      stats = diffusion::train_step(net, params, batch, bank_m, bank_d, sched, tcfg, opt, rng);
    } catch (const numeric_error& e) {
      loss_csv.flush();
      throw numeric_error(std::string(e.what()) + " (distill step " + std::to_string(step) +
                          ")");
    }
    if (stats.bank_warning && !bank_warned) {
      std::cerr << "warning: minimax loss saw an empty memory bank (expected on step 1)\n";
      bank_warned = true;
    }
    loss_csv << step << ',' << fmt10g(stats.l_simple) << ',' << fmt10g(stats.l_repr) << ','
             << fmt10g(stats.l_div) << ',' << fmt10g(stats.l_sr) << ','
             << fmt10g(stats.total) << '\n';
    loss_csv.flush();
    summary.final_total = stats.total;
  }
  summary.steps = cfg.steps;

  diffusion::Checkpoint ckpt;
  ckpt.config["model.channels"] = "3";
  ckpt.config["model.width"] = std::to_string(cfg.model_width);
  ckpt.config["model.num_classes"] = std::to_string(cfg.k);
  ckpt.config["schedule.T"] = std::to_string(cfg.T);
  ckpt.config["schedule.beta_start"] = fmt10g(cfg.beta_start);
  ckpt.config["schedule.beta_end"] = fmt10g(cfg.beta_end);
  ckpt.config["image.size"] = std::to_string(cfg.image_size);
  ckpt.config["resample.kernel_a"] = fmt10g(cfg.kernel_a);
  ckpt.config["resample.antialias"] = cfg.antialias ? "true" : "false";
  ckpt.config["clean_estimate"] = cfg.clean_estimate;
  ckpt.params = params;
  summary.checkpoint = checkpoint_path(cfg);
  diffusion::save_checkpoint(ckpt, summary.checkpoint);
  return summary;
}

namespace {

struct ResultRow {
  std::string dataset_type;
  int n_images = 0;
  long long seed = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write " + path);
  f << "dataset_type,n_images,seed,psnr,ssim\n";
  for (const auto& r : rows)
    f << r.dataset_type << ',' << r.n_images << ',' << r.seed << ',' << fmt6(r.psnr) << ','
      << fmt6(r.ssim) << '\n';
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open results csv: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "dataset_type,n_images,seed,psnr,ssim")
    throw data_error("unexpected results header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    ResultRow r;
    std::string field;
    std::getline(ss, r.dataset_type, ',');
    std::getline(ss, field, ',');
    r.n_images = std::stoi(field);
    std::getline(ss, field, ',');
    r.seed = std::stoll(field);
    std::getline(ss, field, ',');
    r.psnr = std::stod(field);
    std::getline(ss, field, ',');
    r.ssim = std::stod(field);
    rows.push_back(std::move(r));
  }
  return rows;
}

int checkpoint_int(const diffusion::Checkpoint& c, const std::string& key) {
  const auto it = c.config.find(key);
  if (it == c.config.end()) throw data_error("checkpoint missing config key " + key);
  return std::stoi(it->second);
}

double checkpoint_double(const diffusion::Checkpoint& c, const std::string& key) {
  const auto it = c.config.find(key);
  if (it == c.config.end()) throw data_error("checkpoint missing config key " + key);
  return std::stod(it->second);
}

}  // namespace

SampleTrainSummary cmd_sample_train(const PipelineConfig& cfg) {
  validate(cfg);
  const auto ckpt = diffusion::load_checkpoint(checkpoint_path(cfg));

  diffusion::DenoiserConfig dcfg;
  dcfg.channels = checkpoint_int(ckpt, "model.channels");
  dcfg.width = checkpoint_int(ckpt, "model.width");
  dcfg.num_classes = checkpoint_int(ckpt, "model.num_classes");
  const diffusion::Denoiser net(dcfg);
  if (ckpt.params.size() != net.param_count())
    throw data_error("checkpoint parameter count does not match its model config");
  const auto sched = diffusion::make_schedule(checkpoint_int(ckpt, "schedule.T"),
                                              checkpoint_double(ckpt, "schedule.beta_start"),
                                              checkpoint_double(ckpt, "schedule.beta_end"));
  const int image_size = checkpoint_int(ckpt, "image.size");

  // Source images: training split for the crop baselines, held-out split
  // for evaluation.
  const auto paths = list_images(cfg.input_dir);
  std::vector<ImageTensor> train_sources;
  std::vector<ImageTensor> test_images;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    ImageTensor img = to_rgb(imgmath::read_image(paths[i].string()));
    if (is_test_index(i, cfg.test_every))
      test_images.push_back(std::move(img));
    else
      train_sources.push_back(std::move(img));
  }
  if (test_images.empty())
    throw data_error("held-out split is empty; lower data.test_every");

  const srtrain::PairSpec pair_spec{cfg.kernel_a, cfg.antialias};
  const auto test_pairs = srtrain::make_pairs(test_images, pair_spec);

  fs::create_directories(cfg.out_dir);
  write_effective_config(cfg, cfg.out_dir);

  std::vector<int> class_list(dcfg.num_classes);
  for (int i = 0; i < dcfg.num_classes; ++i) class_list[i] = i;

  srtrain::SrTrainConfig scfg;
  scfg.epochs = cfg.sr_epochs;
  scfg.net.width = cfg.sr_width;
  scfg.pairs = pair_spec;
  const srtrain::SrNet sr_net(scfg.net);

  std::vector<ResultRow> rows;
  for (int n : cfg.sr_sizes) {
    // One distilled set per size, shared across SR seeds.
    diffusion::SampleSpec sspec;
    sspec.steps = cfg.sample_steps;
    sspec.height = image_size;
    sspec.width = image_size;
    std::vector<int> sample_labels;
    auto distilled = diffusion::sample(net, ckpt.params, sched, sspec, n, class_list,
                                       derive_seed(cfg.seed, "sample"), &sample_labels);
    for (auto& img : distilled) snap_to_8bit(img);

    const fs::path ddir = fs::path(cfg.out_dir) / ("distilled_" + std::to_string(n));
    fs::create_directories(ddir);
    {
      std::ofstream dm(ddir / "manifest.csv", std::ios::binary);
      dm << "file,class,seed\n";
      for (std::size_t i = 0; i < distilled.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "distilled_%d_%03zu.ppm", sample_labels[i], i);
        imgmath::write_image(distilled[i], (ddir / name).string());
        dm << name << ',' << sample_labels[i] << ','
           << derive_seed(cfg.seed, "sample") << '\n';
      }
    }

    for (const std::string strategy : {"distilled", "random_crop", "threshold_crop"}) {
      for (std::size_t j = 0; j < cfg.sr_seeds.size(); ++j) {
        std::vector<ImageTensor> hr_set;
        if (strategy == "distilled") {
          hr_set = distilled;
        } else {
          const auto crop_seed = derive_seed(
              cfg.seed, "crops/" + strategy + "/" + std::to_string(n) + "/" + std::to_string(j));
          if (strategy == "random_crop")
            hr_set = srtrain::baseline_random_crop(train_sources, n, cfg.crop_size, crop_seed);
          else
            hr_set = srtrain::baseline_threshold_crop(train_sources, n, cfg.crop_size, crop_seed,
                                                      cfg.sr_threshold_db, pair_spec);
        }
        const auto pairs = srtrain::make_pairs(hr_set, pair_spec);
        const auto trained = srtrain::train_sr(
            pairs, scfg, derive_seed(cfg.seed, "sr/" + strategy + "/" + std::to_string(j)));
        const auto eval = srtrain::evaluate(sr_net, trained.params, test_pairs);

        ResultRow row;
        row.dataset_type = strategy;
        row.n_images = n;
        row.seed = cfg.sr_seeds[j];
        row.psnr = eval.mean_psnr;
        row.ssim = eval.mean_ssim;
        rows.push_back(std::move(row));
      }
    }
  }

  SampleTrainSummary summary;
  summary.results_csv = results_csv_path(cfg);
  summary.rows = static_cast<int>(rows.size());
  write_results_csv(summary.results_csv, rows);
  return summary;
}

void cmd_report(const std::vector<std::string>& results_csvs, std::ostream& out,
                const std::string& summary_csv_path) {
  if (results_csvs.empty()) throw data_error("report: no results CSVs given");
  std::vector<ResultRow> rows;
  for (const auto& path : results_csvs) {
    const auto r = read_results_csv(path);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) throw data_error("report: results CSVs contain no rows");

  struct Agg {
    double psnr = 0.0, ssim = 0.0;
    int count = 0;
  };
  std::map<std::pair<std::string, int>, Agg> groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.dataset_type, r.n_images}];
    g.psnr += r.psnr;
    g.ssim += r.ssim;
    ++g.count;
  }

  std::ofstream csv(summary_csv_path, std::ios::binary);
  if (!csv) throw data_error("cannot write " + summary_csv_path);
  csv << "dataset_type,n_images,mean_psnr,mean_ssim,runs\n";

  out << "dataset_type      n    mean PSNR   mean SSIM   runs\n";
  for (const auto& [key, g] : groups) {
    const double psnr = g.psnr / g.count;
    const double ssim = g.ssim / g.count;
    csv << key.first << ',' << key.second << ',' << fmt6(psnr) << ',' << fmt6(ssim) << ','
        << g.count << '\n';
    char line[128];
    std::snprintf(line, sizeof(line), "%-16s %4d   %9.4f   %9.6f   %4d\n", key.first.c_str(),
                  key.second, psnr, ssim, g.count);
    out << line;
  }
}

void cmd_make_corpus(const PipelineConfig& cfg, int count, int size) {
  if (count < 1) throw config_error("make-corpus: count must be >= 1");
  if (size < 8 || size % 4 != 0) throw config_error("make-corpus: size must be >= 8, divisible by 4");
  corpus::CorpusSpec spec;
  spec.count = count;
  spec.size = size;
  fs::create_directories(cfg.input_dir);
  for (int i = 0; i < count; ++i) {
    const ImageTensor img = corpus::make_image(spec, cfg.seed, i);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.ppm", i);
    imgmath::write_image(img, (fs::path(cfg.input_dir) / name).string());
  }
}

}  // namespace dksr::cli
