#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dksr/image.hpp"
#include "dksr/resample.hpp"

namespace dksr::curation {

struct PatchRecord {
  std::string image_id;
  int x = 0;  // top-left
  int y = 0;
  int size = 0;
  double psnr_bic = 0.0;
  std::optional<int> cluster_id;
};

enum class ThresholdMode { kFixed, kMedian };

struct CurationConfig {
  int patch_size = 32;  // toy default; 512 matches full-scale processing
  int stride = 32;
  ThresholdMode threshold_mode = ThresholdMode::kFixed;
  double threshold_db = 23.0;
  double kernel_a = -0.5;
  bool antialias = true;
};

// Regular top-left-anchored grid; partial patches at the right/bottom
// edges are dropped. Scores are left unset.
std::vector<PatchRecord> extract_patches(const imgmath::ImageTensor& image,
                                         const std::string& image_id, int size,
                                         int stride);

// Reconstruction PSNR after the 4x bicubic round trip. Low score means the
// patch loses detail under downsampling, i.e. it is informative.
double score_patch(const imgmath::ImageTensor& patch, double kernel_a = -0.5,
                   bool antialias = true);

// Scores every record against its source image, in record order.
void score_records(const imgmath::ImageTensor& image, std::vector<PatchRecord>& records,
                   const CurationConfig& cfg);

// Keeps records with psnr_bic strictly below the threshold; median mode
// derives the threshold from the score distribution first (lower median
// for even counts). Input order is preserved.
std::vector<PatchRecord> filter_patches(const std::vector<PatchRecord>& records,
                                        const CurationConfig& cfg);

double median_threshold(const std::vector<PatchRecord>& records);

// Manifest CSV: image_id,x,y,size,psnr_bic,cluster_id with scores at six
// decimal places and cluster_id empty before clustering.
void write_manifest(const std::vector<PatchRecord>& records, const std::string& path);
std::vector<PatchRecord> read_manifest(const std::string& path);

}  // namespace dksr::curation
