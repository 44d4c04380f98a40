#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "config.hpp"

namespace liwuda::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kIo = 3,
  kNumerical = 4,
  kCheckFailed = 5,
};

// File names written under the output directory.
inline constexpr const char* kSourceFile = "source.txt";
inline constexpr const char* kTargetFile = "target.txt";
inline constexpr const char* kCheckpointFile = "checkpoint.txt";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportCsv = "report.csv";
inline constexpr const char* kCostCsv = "cost.csv";
inline constexpr const char* kExactCouplingCsv = "coupling_exact.csv";
inline constexpr const char* kSinkhornCouplingCsv = "coupling_sinkhorn.csv";

struct EvalPaths {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> source;
};

// Each command validates the configuration, writes <command>_manifest.json,
// then does its work. Errors propagate as liwuda exceptions.
int cmd_generate(const ExperimentConfig& config, std::ostream& log);
int cmd_train(const ExperimentConfig& config, const std::optional<std::filesystem::path>& data_dir,
              std::ostream& log);
int cmd_eval(const ExperimentConfig& config, const EvalPaths& paths, std::ostream& log);
int cmd_ot_check(const ExperimentConfig& config, std::ostream& log);

}  // namespace liwuda::cli
