#include "dksr/curation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dksr/errors.hpp"
#include "dksr/metrics.hpp"

namespace dksr::curation {

using imgmath::ImageTensor;

std::vector<PatchRecord> extract_patches(const ImageTensor& image,
                                         const std::string& image_id, int size,
                                         int stride) {
  if (size > image.width || size > image.height)
    throw data_error("patch size exceeds image dimensions");
  if (stride < 1) throw config_error("stride must be >= 1");
  std::vector<PatchRecord> records;
  for (int y = 0; y + size <= image.height; y += stride)
    for (int x = 0; x + size <= image.width; x += stride)
      records.push_back({image_id, x, y, size, 0.0, std::nullopt});
  return records;
}

double score_patch(const ImageTensor& patch, double kernel_a, bool antialias) {
  if (patch.width % 4 != 0 || patch.height % 4 != 0)
    throw data_error("patch size not divisible by 4");
  const ImageTensor rec = imgmath::up4(imgmath::down4(patch, kernel_a, antialias), kernel_a);
  return imgmath::psnr(patch, rec);
}

void score_records(const ImageTensor& image, std::vector<PatchRecord>& records,
                   const CurationConfig& cfg) {
  // Embarrassingly parallel; each record owns its slot so the merge order
  // is the input order no matter how the threads finish.
  const int n = static_cast<int>(records.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    PatchRecord& r = records[i];
    const ImageTensor patch = imgmath::crop(image, r.x, r.y, r.size);
    r.psnr_bic = score_patch(patch, cfg.kernel_a, cfg.antialias);
  }
}

double median_threshold(const std::vector<PatchRecord>& records) {
  if (records.empty()) throw data_error("median threshold of empty score set");
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(r.psnr_bic);
  std::sort(scores.begin(), scores.end());
  // Upper median for even counts: with strict-below filtering a corpus of
  // 2n distinct scores keeps exactly n patches.
  return scores[scores.size() / 2];
}

std::vector<PatchRecord> filter_patches(const std::vector<PatchRecord>& records,
                                        const CurationConfig& cfg) {
  if (records.empty()) return {};
  const double threshold = cfg.threshold_mode == ThresholdMode::kMedian
                               ? median_threshold(records)
                               : cfg.threshold_db;
  std::vector<PatchRecord> kept;
  for (const auto& r : records)
    if (r.psnr_bic < threshold) kept.push_back(r);
  return kept;
}

void write_manifest(const std::vector<PatchRecord>& records, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw data_error("cannot open manifest for writing: " + path);
  f << "image_id,x,y,size,psnr_bic,cluster_id\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.psnr_bic);
    f << r.image_id << ',' << r.x << ',' << r.y << ',' << r.size << ',' << buf << ',';
    if (r.cluster_id) f << *r.cluster_id;
    f << '\n';
  }
  if (!f) throw data_error("short write: " + path);
}

std::vector<PatchRecord> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(f, line)) throw data_error("empty manifest: " + path);
  if (line != "image_id,x,y,size,psnr_bic,cluster_id")
    throw data_error("unexpected manifest header in " + path);
  std::vector<PatchRecord> records;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    PatchRecord r;
    auto next = [&](const char* what) {
      if (!std::getline(ss, field, ','))
        throw data_error(path + ":" + std::to_string(line_no) + ": missing field " + what);
      return field;
    };
    r.image_id = next("image_id");
    try {
      r.x = std::stoi(next("x"));
      r.y = std::stoi(next("y"));
      r.size = std::stoi(next("size"));
      r.psnr_bic = std::stod(next("psnr_bic"));
    } catch (const std::exception&) {
      throw data_error(path + ":" + std::to_string(line_no) + ": malformed numeric field");
    }
    if (std::getline(ss, field, ',') && !field.empty()) r.cluster_id = std::stoi(field);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace dksr::curation
