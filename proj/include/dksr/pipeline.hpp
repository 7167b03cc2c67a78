#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dksr/config.hpp"

namespace dksr::cli {

struct SelectSummary {
  int images = 0;
  int skipped = 0;  // unreadable inputs, warned and counted
  int total_patches = 0;
  int kept = 0;
  std::string manifest;
};

// Scores and filters all patches of every readable image in
// data.input_dir (sorted order), writes the manifest CSV.
SelectSummary cmd_select(const PipelineConfig& cfg);

struct ClusterSummary {
  int n = 0;
  int k = 0;
  double inertia = 0.0;
};

// Fills the manifest's cluster_id column from builtin or external
// features plus k-means.
ClusterSummary cmd_cluster(const PipelineConfig& cfg);

struct DistillSummary {
  int steps = 0;
  double final_total = 0.0;
  std::string checkpoint;
  std::string loss_csv;
};

// Fine-tunes the toy diffusion model on the clustered manifest under the
// composite objective; writes checkpoint plus a per-step loss CSV. On
// divergence the partial loss CSV survives.
DistillSummary cmd_distill(const PipelineConfig& cfg);

struct SampleTrainSummary {
  std::string results_csv;
  int rows = 0;
};

// Samples the distilled sets, trains the toy SR model per strategy x size
// x seed, evaluates on the held-out split, writes the results CSV.
SampleTrainSummary cmd_sample_train(const PipelineConfig& cfg);

// Aggregates results CSVs into a per-(strategy, size) mean table.
void cmd_report(const std::vector<std::string>& results_csvs, std::ostream& out,
                const std::string& summary_csv_path);

// Writes the bundled procedural corpus as PPM files.
void cmd_make_corpus(const PipelineConfig& cfg, int count, int size);

// Shared path conventions under cfg.out_dir.
std::string manifest_path(const PipelineConfig& cfg);
std::string checkpoint_path(const PipelineConfig& cfg);
std::string loss_csv_path(const PipelineConfig& cfg);
std::string results_csv_path(const PipelineConfig& cfg);

}  // namespace dksr::cli
