#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "dksr/config.hpp"
#include "dksr/errors.hpp"
#include "dksr/pipeline.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string input_dir;
  std::string out_dir;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "Config file (INI-style sections)");
  cmd->add_option("-s,--set", args.overrides,
                  "Override a config key, e.g. --set select.threshold_db=21");
  cmd->add_option("-i,--input", args.input_dir, "Override data.input_dir");
  cmd->add_option("-o,--out", args.out_dir, "Override data.out_dir");
  cmd->add_option("--seed", args.seed, "Override run.seed");
}

dksr::cli::PipelineConfig build_config(const CommonArgs& args) {
  dksr::cli::PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = dksr::cli::parse_config_file(args.config_path);
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw dksr::config_error("--set expects key=value, got: " + kv);
    dksr::cli::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.input_dir.empty()) cfg.input_dir = args.input_dir;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  dksr::cli::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dksr: distill a super-resolution training corpus into a small synthetic set"};
  app.require_subcommand(1);

  CommonArgs select_args, cluster_args, distill_args, st_args, corpus_args, report_args;

  auto* select = app.add_subcommand("select", "Score patches and write the curation manifest");
  add_common(select, select_args);

  auto* cluster = app.add_subcommand("cluster", "Assign pseudo-labels to the manifest");
  add_common(cluster, cluster_args);

  auto* distill = app.add_subcommand("distill", "Fine-tune the toy diffusion model");
  add_common(distill, distill_args);

  auto* sample_train =
      app.add_subcommand("sample-train", "Sample distilled sets, train and evaluate toy SR");
  add_common(sample_train, st_args);

  auto* report = app.add_subcommand("report", "Aggregate results CSVs into a summary table");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("csv", report_inputs, "results.csv files (defaults to <out>/results.csv)");
  report->add_option("--summary", report_out, "Summary CSV path (defaults to <out>/summary.csv)");
  add_common(report, report_args);

  auto* make_corpus =
      app.add_subcommand("make-corpus", "Generate the procedural evaluation corpus");
  int corpus_count = 200;
  int corpus_size = 64;
  make_corpus->add_option("-n,--count", corpus_count, "Number of images");
  make_corpus->add_option("--size", corpus_size, "Image side length");
  add_common(make_corpus, corpus_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (select->parsed()) {
      const auto cfg = build_config(select_args);
      const auto s = dksr::cli::cmd_select(cfg);
      std::cout << "select: kept " << s.kept << " / " << s.total_patches << " patches from "
                << s.images << " images";
      if (s.skipped > 0) std::cout << " (" << s.skipped << " unreadable skipped)";
      std::cout << "\nmanifest: " << s.manifest << "\n";
    } else if (cluster->parsed()) {
      const auto cfg = build_config(cluster_args);
      const auto s = dksr::cli::cmd_cluster(cfg);
      std::cout << "cluster: " << s.n << " patches into k=" << s.k
                << " groups, inertia " << s.inertia << "\n";
    } else if (distill->parsed()) {
      const auto cfg = build_config(distill_args);
      const auto s = dksr::cli::cmd_distill(cfg);
      std::cout << "distill: " << s.steps << " steps, final total loss " << s.final_total
                << "\ncheckpoint: " << s.checkpoint << "\nloss log: " << s.loss_csv << "\n";
    } else if (sample_train->parsed()) {
      const auto cfg = build_config(st_args);
      const auto s = dksr::cli::cmd_sample_train(cfg);
      std::cout << "sample-train: wrote " << s.rows << " result rows\nresults: "
                << s.results_csv << "\n";
    } else if (report->parsed()) {
      const auto cfg = build_config(report_args);
      if (report_inputs.empty()) report_inputs.push_back(dksr::cli::results_csv_path(cfg));
      if (report_out.empty())
        report_out = (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
      dksr::cli::cmd_report(report_inputs, std::cout, report_out);
      std::cout << "summary: " << report_out << "\n";
    } else if (make_corpus->parsed()) {
      const auto cfg = build_config(corpus_args);
      dksr::cli::cmd_make_corpus(cfg, corpus_count, corpus_size);
      std::cout << "make-corpus: wrote " << corpus_count << " images to " << cfg.input_dir
                << "\n";
    }
  } catch (const dksr::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dksr::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const dksr::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
