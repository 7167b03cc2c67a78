#include "dksr/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dksr/errors.hpp"

namespace dksr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw config_error(key + ": not a number: \"" + v + "\"");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw config_error(key + ": not an integer: \"" + v + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw config_error(key + ": not a boolean: \"" + v + "\"");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (out.empty()) throw config_error(key + ": empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

struct KeyOps {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

const std::map<std::string, KeyOps>& key_table() {
  static const std::map<std::string, KeyOps> table = {
      {"data.input_dir",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.input_dir = v; },
        [](const PipelineConfig& c) { return c.input_dir; }}},
      {"data.out_dir",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
        [](const PipelineConfig& c) { return c.out_dir; }}},
      {"data.test_every",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.test_every = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.test_every); }}},
      {"resample.kernel_a",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.kernel_a = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.kernel_a); }}},
      {"resample.antialias",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.antialias = parse_bool(k, v);
        },
        [](const PipelineConfig& c) { return c.antialias ? "true" : "false"; }}},
      {"select.patch_size",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.patch_size = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.patch_size); }}},
      {"select.stride",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.stride = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.stride); }}},
      {"select.threshold_mode",
       {[](PipelineConfig& c, const std::string&, const std::string& v) {
          c.threshold_mode = v;
        },
        [](const PipelineConfig& c) { return c.threshold_mode; }}},
      {"select.threshold_db",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.threshold_db = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.threshold_db); }}},
      {"cluster.k",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.k = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.k); }}},
      {"cluster.max_iter",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.max_iter = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.max_iter); }}},
      {"cluster.n_restart",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.n_restart = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.n_restart); }}},
      {"cluster.features",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.features = v; },
        [](const PipelineConfig& c) { return c.features; }}},
      {"cluster.feature_file",
       {[](PipelineConfig& c, const std::string&, const std::string& v) {
          c.feature_file = v;
        },
        [](const PipelineConfig& c) { return c.feature_file; }}},
      {"distill.steps",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.steps = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.steps); }}},
      {"distill.batch_size",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.batch_size = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.batch_size); }}},
      {"distill.lr",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.lr = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.lr); }}},
      {"distill.T",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.T = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.T); }}},
      {"distill.beta_start",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.beta_start = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.beta_start); }}},
      {"distill.beta_end",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.beta_end = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.beta_end); }}},
      {"distill.lambda_r",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.lambda_r = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.lambda_r); }}},
      {"distill.lambda_d",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.lambda_d = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.lambda_d); }}},
      {"distill.lambda_sr",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.lambda_sr = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.lambda_sr); }}},
      {"distill.bank_m",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.bank_m = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.bank_m); }}},
      {"distill.bank_d",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.bank_d = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.bank_d); }}},
      {"distill.image_size",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.image_size = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.image_size); }}},
      {"distill.width",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.model_width = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.model_width); }}},
      {"distill.clean_estimate",
       {[](PipelineConfig& c, const std::string&, const std::string& v) {
          c.clean_estimate = v;
        },
        [](const PipelineConfig& c) { return c.clean_estimate; }}},
      {"sample.steps",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sample_steps = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.sample_steps); }}},
      {"sr.sizes",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sr_sizes = parse_int_list(k, v);
        },
        [](const PipelineConfig& c) { return fmt_int_list(c.sr_sizes); }}},
      {"sr.seeds",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sr_seeds = parse_int_list(k, v);
        },
        [](const PipelineConfig& c) { return fmt_int_list(c.sr_seeds); }}},
      {"sr.epochs",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sr_epochs = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.sr_epochs); }}},
      {"sr.crop_size",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.crop_size = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.crop_size); }}},
      {"sr.threshold_db",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sr_threshold_db = parse_double(k, v);
        },
        [](const PipelineConfig& c) { return fmt_double(c.sr_threshold_db); }}},
      {"sr.width",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.sr_width = static_cast<int>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.sr_width); }}},
      {"run.seed",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.seed = static_cast<std::uint64_t>(parse_int(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
  };
  return table;
}

}  // namespace

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw config_error("unknown config key: " + key);
  it->second.set(cfg, key, trim(value));
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    // strip comments
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(path + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw config_error(path + ":" + std::to_string(line_no) + ": key outside any [section]");
    apply_override(cfg, section + "." + key, value);
  }
  return cfg;
}

void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw config_error(field + ": " + why);
  };
  if (c.test_every < 2) fail("data.test_every", "must be >= 2");
  if (c.patch_size < 8) fail("select.patch_size", "must be >= 8");
  if (c.patch_size % 4 != 0) fail("select.patch_size", "must divide by 4 for the score");
  if (c.stride < 1) fail("select.stride", "must be >= 1");
  if (c.threshold_mode != "fixed" && c.threshold_mode != "median")
    fail("select.threshold_mode", "must be fixed or median");
  if (c.k < 1) fail("cluster.k", "must be >= 1");
  if (c.max_iter < 1) fail("cluster.max_iter", "must be >= 1");
  if (c.n_restart < 1) fail("cluster.n_restart", "must be >= 1");
  if (c.features != "builtin" && c.features != "file")
    fail("cluster.features", "must be builtin or file");
  if (c.features == "file" && c.feature_file.empty())
    fail("cluster.feature_file", "required when cluster.features = file");
  if (c.steps < 1) fail("distill.steps", "must be >= 1");
  if (c.batch_size < 1) fail("distill.batch_size", "must be >= 1");
  if (!(c.lr > 0.0)) fail("distill.lr", "must be > 0");
  if (c.T < 2) fail("distill.T", "must be >= 2");
  if (!(c.beta_start > 0.0)) fail("distill.beta_start", "must be > 0");
  if (!(c.beta_start <= c.beta_end)) fail("distill.beta_end", "must be >= beta_start");
  if (!(c.beta_end < 1.0)) fail("distill.beta_end", "must be < 1");
  if (c.lambda_r < 0.0) fail("distill.lambda_r", "must be >= 0");
  if (c.lambda_d < 0.0) fail("distill.lambda_d", "must be >= 0");
  if (c.lambda_sr < 0.0) fail("distill.lambda_sr", "must be >= 0");
  if (c.bank_m < 1) fail("distill.bank_m", "must be >= 1");
  if (c.bank_d < 1) fail("distill.bank_d", "must be >= 1");
  if (c.image_size < 8 || c.image_size % 4 != 0)
    fail("distill.image_size", "must be >= 8 and divide by 4");
  if (c.model_width < 1) fail("distill.width", "must be >= 1");
  if (c.clean_estimate != "paper" && c.clean_estimate != "scaled")
    fail("distill.clean_estimate", "must be paper or scaled");
  if (c.sample_steps < 1 || c.sample_steps > c.T)
    fail("sample.steps", "must be in [1, distill.T]");
  if (c.sr_sizes.empty()) fail("sr.sizes", "must be nonempty");
  for (int s : c.sr_sizes)
    if (s < 1) fail("sr.sizes", "entries must be >= 1");
  if (c.sr_seeds.empty()) fail("sr.seeds", "must be nonempty");
  if (c.sr_epochs < 0) fail("sr.epochs", "must be >= 0");
  if (c.crop_size < 8 || c.crop_size % 4 != 0)
    fail("sr.crop_size", "must be >= 8 and divide by 4");
  if (c.sr_width < 1) fail("sr.width", "must be >= 1");
}

std::string render_config(const PipelineConfig& cfg) {
  // Keys are emitted in table (section.key) order, which is sorted; the
  // section header changes whenever the prefix does.
  std::string out;
  std::string section;
  for (const auto& [key, ops] : key_table()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + ops.get(cfg) + "\n";
  }
  return out;
}

void write_effective_config(const PipelineConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / "config_used.ini", std::ios::binary);
  if (!f) throw data_error("cannot write effective config in " + dir);
  f << render_config(cfg);
}

}  // namespace dksr::cli
