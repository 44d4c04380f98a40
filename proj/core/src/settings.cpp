#include "liwuda/settings.hpp"

#include <cctype>
#include <cmath>

#include "liwuda/error.hpp"

namespace liwuda {

UdaSetting parse_setting(std::string_view name) {
  std::string lower(name);
  for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower == "unida") return UdaSetting::kUniDA;
  if (lower == "pda") return UdaSetting::kPDA;
  if (lower == "osda") return UdaSetting::kOSDA;
  if (lower == "csda") return UdaSetting::kCSDA;
  throw ConfigError("unknown setting '" + std::string(name) +
                    "' (expected unida, pda, osda or csda)");
}

std::string_view to_string(UdaSetting setting) {
  switch (setting) {
    case UdaSetting::kUniDA:
      return "unida";
    case UdaSetting::kPDA:
      return "pda";
    case UdaSetting::kOSDA:
      return "osda";
    case UdaSetting::kCSDA:
      return "csda";
  }
  return "unknown";
}

std::string_view to_string(MarginalSource m) {
  return m == MarginalSource::kLearned ? "learned" : "uniform";
}

std::string_view to_string(IotDomain d) {
  switch (d) {
    case IotDomain::kNone:
      return "none";
    case IotDomain::kSource:
      return "source";
    case IotDomain::kTarget:
      return "target";
  }
  return "none";
}

SettingPlan plan_for_setting(UdaSetting setting, LossWeights w) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError(std::string(name) + " must be a finite non-negative number");
  };
  check(w.beta, "beta");
  check(w.eta, "eta");
  check(w.epsilon, "epsilon");

  SettingPlan plan;
  plan.setting = setting;
  plan.beta = w.beta;
  plan.eta = w.eta;
  plan.epsilon = w.epsilon;
  auto force_zero = [&](double& field, const char* name) {
    if (field != 0.0)
      plan.overrides.push_back(std::string(name) + " forced to 0 for " +
                               std::string(to_string(setting)));
    field = 0.0;
  };

  switch (setting) {
    case UdaSetting::kUniDA:
      plan.source_marginal = MarginalSource::kLearned;
      plan.target_marginal = MarginalSource::kLearned;
      plan.use_sa = true;
      plan.use_iot = false;
      plan.iot_domain = IotDomain::kNone;
      force_zero(plan.epsilon, "epsilon");
      break;
    case UdaSetting::kPDA:
      plan.source_marginal = MarginalSource::kLearned;
      plan.target_marginal = MarginalSource::kUniform;
      plan.use_sa = true;
      plan.use_iot = true;
      plan.iot_domain = IotDomain::kTarget;
      break;
    case UdaSetting::kOSDA:
      plan.source_marginal = MarginalSource::kUniform;
      plan.target_marginal = MarginalSource::kLearned;
      plan.use_sa = true;
      plan.use_iot = true;
      plan.iot_domain = IotDomain::kSource;
      break;
    case UdaSetting::kCSDA:
      plan.source_marginal = MarginalSource::kUniform;
      plan.target_marginal = MarginalSource::kUniform;
      plan.use_sa = false;
      plan.use_iot = false;
      plan.iot_domain = IotDomain::kNone;
      force_zero(plan.eta, "eta");
      force_zero(plan.epsilon, "epsilon");
      break;
  }
  return plan;
}

void check_plan(const SettingPlan& p) {
  auto require = [&](bool ok, const char* what) {
    if (!ok)
      throw InternalError(std::string("plan for ") + std::string(to_string(p.setting)) +
                          " violates: " + what);
  };
  require(p.beta >= 0.0 && p.eta >= 0.0 && p.epsilon >= 0.0, "non-negative hyperparameters");
  require(p.use_iot == (p.iot_domain != IotDomain::kNone), "IOT flag matches IOT domain");
  require(p.use_sa || p.eta == 0.0, "eta = 0 when SA is off");
  require(p.use_iot || p.epsilon == 0.0, "epsilon = 0 when IOT is off");
  using enum MarginalSource;
  switch (p.setting) {
    case UdaSetting::kUniDA:
      require(p.source_marginal == kLearned && p.target_marginal == kLearned, "both learned");
      require(!p.use_iot && p.epsilon == 0.0, "no IOT, epsilon = 0");
      break;
    case UdaSetting::kPDA:
      require(p.source_marginal == kLearned && p.target_marginal == kUniform,
              "learned source, uniform target");
      require(p.iot_domain == IotDomain::kTarget, "IOT on target");
      break;
    case UdaSetting::kOSDA:
      require(p.source_marginal == kUniform && p.target_marginal == kLearned,
              "uniform source, learned target");
      require(p.iot_domain == IotDomain::kSource, "IOT on source");
      break;
    case UdaSetting::kCSDA:
      require(p.source_marginal == kUniform && p.target_marginal == kUniform, "both uniform");
      require(!p.use_sa && !p.use_iot && p.eta == 0.0 && p.epsilon == 0.0,
              "only classification and WOT active");
      break;
  }
}

}  // namespace liwuda
