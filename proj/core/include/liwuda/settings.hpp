#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace liwuda {

enum class UdaSetting { kUniDA, kPDA, kOSDA, kCSDA };

// Accepts "unida", "pda", "osda", "csda" in any letter case.
UdaSetting parse_setting(std::string_view name);
std::string_view to_string(UdaSetting setting);

enum class MarginalSource { kLearned, kUniform };
enum class IotDomain { kNone, kSource, kTarget };

std::string_view to_string(MarginalSource m);
std::string_view to_string(IotDomain d);

struct LossWeights {
  double beta = 0.1;
  double eta = 0.3;
  double epsilon = 0.05;
};

/// Which losses are active and which marginals feed the transport problems for
/// one adaptation setting.
///
/// | setting | source marginal | target marginal | SA  | IOT on |
/// |---------|-----------------|-----------------|-----|--------|
/// | UniDA   | learned         | learned         | yes | -      |
/// | PDA     | learned         | uniform         | yes | target |
/// | OSDA    | uniform         | learned         | yes | source |
/// | CSDA    | uniform         | uniform         | no  | -      |
struct SettingPlan {
  UdaSetting setting = UdaSetting::kPDA;
  MarginalSource source_marginal = MarginalSource::kLearned;
  MarginalSource target_marginal = MarginalSource::kUniform;
  bool use_sa = true;
  bool use_iot = true;
  IotDomain iot_domain = IotDomain::kTarget;
  double beta = 0.1;
  double eta = 0.3;
  double epsilon = 0.05;
  // Human-readable notes for every requested hyperparameter that was forced to 0.
  std::vector<std::string> overrides;

  // Whether the target domain carries private classes, i.e. whether inference
  // applies the weight threshold.
  bool detects_unknown() const {
    return setting == UdaSetting::kUniDA || setting == UdaSetting::kOSDA;
  }
  bool uses_weight_network() const {
    return source_marginal == MarginalSource::kLearned ||
           target_marginal == MarginalSource::kLearned || use_iot;
  }
};

/// Throws ConfigError on a negative (or non-finite) hyperparameter. Terms the
/// setting disables are forced to 0 and recorded in `overrides`.
SettingPlan plan_for_setting(UdaSetting setting, LossWeights weights = {});

/// Throws InternalError when `plan` violates its setting's row of the table.
void check_plan(const SettingPlan& plan);

}  // namespace liwuda
