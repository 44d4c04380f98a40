#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "liwuda/settings.hpp"
#include "liwuda/synth.hpp"
#include "liwuda/training.hpp"

namespace liwuda::cli {

// Flat "key = value" text grouped under [section] headers. '#' and ';' start
// comments; blank lines are ignored. Keys are unique within a section.
class IniFile {
 public:
  static IniFile parse(std::string_view text, std::string_view origin = "config");

  bool has(std::string_view section, std::string_view key) const;
  const std::string* find(std::string_view section, std::string_view key) const;

  // Every section.key pair, in sorted order.
  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

struct GenerateSettings {
  data::LabelSplit split{4, 3, 0};
  data::ShiftSpec shift{0.9, {2.0, 2.0}, 0.5, 1.0};
  std::size_t n_source = 600;
  std::size_t n_target = 600;
  std::size_t dim = 8;
};

struct OtCheckSettings {
  std::size_t n = 4;
  double reg = 1e-3;
  std::size_t max_iter = 100000;
  double exact_tol = 1e-8;
  double sinkhorn_tol = 1e-3;
  bool zero_cost = false;
};

struct ExperimentConfig {
  UdaSetting setting = UdaSetting::kPDA;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "liwuda-run";
  GenerateSettings data;
  LossWeights weights;
  train::TrainConfig train;
  bool eval_wasserstein = true;
  OtCheckSettings ot_check;

  // The plan built from setting and weights (with its overrides).
  SettingPlan plan() const;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Defaults with every key present in `ini` applied. Unknown sections or keys are
// rejected so that typos do not silently fall back to defaults.
ExperimentConfig from_ini(const IniFile& ini);
ExperimentConfig load_config(const std::filesystem::path& path);

// The effective configuration in the same text format.
std::string to_ini(const ExperimentConfig& config);

}  // namespace liwuda::cli
