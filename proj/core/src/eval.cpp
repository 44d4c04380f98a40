#include "liwuda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"
#include "liwuda/losses.hpp"
#include "liwuda/ot.hpp"

namespace liwuda::eval {

int decide(std::span<const double> logits, double weight, bool apply_threshold, double threshold) {
  if (logits.empty()) throw InputError("decide: no logits");
  if (apply_threshold && !(weight > threshold)) return kUnknown;
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<Prediction> infer_batch(const nn::Model& model, const Matrix& samples,
                                    bool apply_threshold, double threshold) {
  if (!model.all_finite()) throw StateError("infer: model has non-finite parameters");
  const Matrix features = nn::predict(model.feature, samples);
  const Matrix logits = nn::predict(model.classifier, features);
  const Matrix weights = nn::predict(model.weight, features);
  std::vector<Prediction> out(samples.rows());
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    auto& p = out[i];
    p.logits.assign(logits.row(i).begin(), logits.row(i).end());
    p.weight = weights(i, 0);
    p.label = decide(p.logits, p.weight, apply_threshold, threshold);
  }
  return out;
}

Prediction infer(const nn::Model& model, std::span<const double> sample, bool apply_threshold,
                 double threshold) {
  Matrix one(1, sample.size(), std::vector<double>(sample.begin(), sample.end()));
  return infer_batch(model, one, apply_threshold, threshold).front();
}

double h_score(double common_acc, double unk_acc) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_range(common_acc) || !in_range(unk_acc))
    throw InputError("h_score: accuracies must lie in [0, 1]");
  const double sum = common_acc + unk_acc;
  return sum > 0.0 ? 2.0 * common_acc * unk_acc / sum : 0.0;
}

EvalReport score_predictions(std::span<const int> predicted, std::span<const int> truth,
                             std::size_t n_common, bool has_unknown) {
  if (predicted.size() != truth.size()) throw ShapeError("score_predictions: length mismatch");
  EvalReport r;
  r.samples = truth.size();
  r.has_unknown = has_unknown;

  std::vector<std::size_t> hits(n_common, 0), totals(n_common, 0);
  std::size_t unk_hits = 0, unk_total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    if (y == kUnknown) {
      ++unk_total;
      unk_hits += predicted[i] == kUnknown;
    } else if (y >= 0 && static_cast<std::size_t>(y) < n_common) {
      ++totals[static_cast<std::size_t>(y)];
      hits[static_cast<std::size_t>(y)] += predicted[i] == y;
    } else {
      throw InputError("score_predictions: label " + std::to_string(y) +
                       " is neither a common class nor unknown");
    }
  }

  double sum = 0.0;
  for (std::size_t c = 0; c < n_common; ++c) {
    if (totals[c] == 0) {
      r.warnings.push_back("class " + std::to_string(c) + " has no samples; excluded");
      continue;
    }
    const double acc = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
    r.per_class_acc[static_cast<int>(c)] = acc;
    sum += acc;
  }
  const auto classes = r.per_class_acc.size();
  r.common_acc = classes ? sum / static_cast<double>(classes) : 0.0;
  r.os_star = r.common_acc;
  r.os = r.common_acc;

  if (has_unknown) {
    if (unk_total == 0) {
      r.warnings.push_back("unknown class has no samples; excluded");
    } else {
      r.unk_acc = static_cast<double>(unk_hits) / static_cast<double>(unk_total);
      r.os = (sum + r.unk_acc) / static_cast<double>(classes + 1);
      r.h_score = h_score(r.common_acc, r.unk_acc);
    }
  } else if (unk_total != 0) {
    r.warnings.push_back(std::to_string(unk_total) +
                         " unknown-labeled samples ignored (setting has no unknown class)");
  }
  return r;
}

EvalReport evaluate(const nn::Model& model, const data::DomainDataset& target,
                    const SettingPlan& plan) {
  if (target.labels.size() != target.size()) throw ShapeError("evaluate: one label per sample");
  if (target.dim() != model.input_dim()) throw ShapeError("evaluate: dataset dimension differs from model");
  const bool threshold = plan.detects_unknown();
  const auto preds = infer_batch(model, target.features, threshold);
  std::vector<int> predicted(preds.size());
  std::vector<int> truth(target.labels.begin(), target.labels.end());
  for (std::size_t i = 0; i < preds.size(); ++i) predicted[i] = preds[i].label;
  // Anything beyond the common classes in the target is target-private.
  for (int& y : truth)
    if (y >= static_cast<int>(target.split.n_common)) y = kUnknown;
  return score_predictions(predicted, truth, target.split.n_common, threshold);
}

WassersteinGap wasserstein_gap(const Matrix& fs, const Matrix& ft, std::span<const double> ws,
                               std::span<const double> wt) {
  const Matrix cost = ot::cosine_cost(fs, ft);
  const auto us = ot::ProbVector::uniform(fs.rows());
  const auto ut = ot::ProbVector::uniform(ft.rows());
  WassersteinGap gap;
  gap.uniform = ot::solve_exact(cost, us, ut).objective;
  std::span<const double> ps = ws.empty() ? us.values() : ws;
  std::span<const double> pt = wt.empty() ? ut.values() : wt;
  gap.learned = ot::solve_exact(cost, ps, pt).objective;
  return gap;
}

WassersteinGap model_wasserstein_gap(const nn::Model& model, const Matrix& xs, const Matrix& xt,
                                     const SettingPlan& plan) {
  if (!model.all_finite()) throw StateError("wasserstein_gap: model has non-finite parameters");
  const Matrix fs = nn::predict(model.feature, xs);
  const Matrix ft = nn::predict(model.feature, xt);
  auto weights = [&](const Matrix& f) {
    const Matrix w = nn::predict(model.weight, f);
    return loss::normalize_weights(w.values()).normalized;
  };
  std::optional<ot::ProbVector> ps, pt;
  if (plan.source_marginal == MarginalSource::kLearned) ps = weights(fs);
  if (plan.target_marginal == MarginalSource::kLearned) pt = weights(ft);
  return wasserstein_gap(fs, ft, ps ? ps->values() : std::span<const double>{},
                         pt ? pt->values() : std::span<const double>{});
}

std::string to_json(const EvalReport& r, const SettingPlan& plan) {
  nlohmann::ordered_json j;
  j["setting"] = std::string(to_string(plan.setting));
  j["samples"] = r.samples;
  j["has_unknown"] = r.has_unknown;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [c, acc] : r.per_class_acc) per_class[std::to_string(c)] = acc;
  j["per_class_acc"] = per_class;
  j["common_acc"] = r.common_acc;
  j["unk_acc"] = r.unk_acc;
  j["h_score"] = r.h_score;
  j["os"] = r.os;
  j["os_star"] = r.os_star;
  j["wasserstein_uniform"] = r.wasserstein_uniform ? nlohmann::ordered_json(*r.wasserstein_uniform)
                                                   : nlohmann::ordered_json(nullptr);
  j["wasserstein_learned"] = r.wasserstein_learned ? nlohmann::ordered_json(*r.wasserstein_learned)
                                                   : nlohmann::ordered_json(nullptr);
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

void write_csv(std::ostream& out, const EvalReport& r, const SettingPlan& plan) {
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  out << "setting,samples,common_acc,unk_acc,h_score,os,os_star,wasserstein_uniform,"
         "wasserstein_learned\n";
  out << to_string(plan.setting) << ',' << r.samples << ',' << io::format_double(r.common_acc)
      << ',' << io::format_double(r.unk_acc) << ',' << io::format_double(r.h_score) << ','
      << io::format_double(r.os) << ',' << io::format_double(r.os_star) << ','
      << opt(r.wasserstein_uniform) << ',' << opt(r.wasserstein_learned) << '\n';
}

}  // namespace liwuda::eval
