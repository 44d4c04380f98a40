#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "liwuda/matrix.hpp"
#include "liwuda/nn.hpp"
#include "liwuda/settings.hpp"
#include "liwuda/synth.hpp"

namespace liwuda::eval {

inline constexpr int kUnknown = data::kUnknownLabel;
inline constexpr double kWeightThreshold = 0.5;

struct Prediction {
  int label = kUnknown;  // class index or kUnknown
  double weight = 0.0;   // weight-network output in (0, 1)
  std::vector<double> logits;
};

/// Common class (argmax of the logits) when weight > threshold, otherwise
/// kUnknown. With apply_threshold == false the argmax is always returned.
int decide(std::span<const double> logits, double weight, bool apply_threshold,
           double threshold = kWeightThreshold);

/// Throws StateError if the model holds non-finite parameters.
Prediction infer(const nn::Model& model, std::span<const double> sample, bool apply_threshold,
                 double threshold = kWeightThreshold);
std::vector<Prediction> infer_batch(const nn::Model& model, const Matrix& samples,
                                    bool apply_threshold, double threshold = kWeightThreshold);

/// Harmonic mean of the two accuracies; 0 when either is 0. Inputs must lie in
/// [0, 1] (InputError otherwise).
double h_score(double common_acc, double unk_acc);

struct EvalReport {
  std::map<int, double> per_class_acc;  // common classes with at least one sample
  double common_acc = 0.0;              // mean per-class accuracy over common classes
  double unk_acc = 0.0;
  double h_score = 0.0;
  double os = 0.0;       // per-class mean including the unknown class
  double os_star = 0.0;  // per-class mean over common classes only
  bool has_unknown = false;
  std::optional<double> wasserstein_uniform;
  std::optional<double> wasserstein_learned;
  std::size_t samples = 0;
  std::vector<std::string> warnings;
};

/// Metrics from predicted and true labels (kUnknown marks the merged unknown
/// class). Common classes are [0, n_common). Classes without samples are left out
/// of every mean and noted in `warnings`.
EvalReport score_predictions(std::span<const int> predicted, std::span<const int> truth,
                             std::size_t n_common, bool has_unknown);

/// Runs inference on the labeled target set. The weight threshold applies only
/// when the plan's setting has target-private classes.
EvalReport evaluate(const nn::Model& model, const data::DomainDataset& labeled_target,
                    const SettingPlan& plan);

struct WassersteinGap {
  double uniform = 0.0;
  double learned = 0.0;
};

/// Exact OT cost between the two feature sets under uniform marginals and
/// under the given weights. An empty weight span means uniform on that side.
WassersteinGap wasserstein_gap(const Matrix& source_features, const Matrix& target_features,
                               std::span<const double> source_weights,
                               std::span<const double> target_weights);

/// wasserstein_gap on the model's features, with the plan's learned marginals
/// taken from the weight network.
WassersteinGap model_wasserstein_gap(const nn::Model& model, const Matrix& source_inputs,
                                     const Matrix& target_inputs, const SettingPlan& plan);

/// JSON object with keys: setting, samples, has_unknown, per_class_acc (object
/// keyed by class index), common_acc, unk_acc, h_score, os, os_star,
/// wasserstein_uniform, wasserstein_learned (null when absent), warnings.
std::string to_json(const EvalReport& report, const SettingPlan& plan);

/// Header plus one row:
/// setting,samples,common_acc,unk_acc,h_score,os,os_star,wasserstein_uniform,wasserstein_learned
void write_csv(std::ostream& out, const EvalReport& report, const SettingPlan& plan);

}  // namespace liwuda::eval
