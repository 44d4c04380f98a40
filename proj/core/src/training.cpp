#include "liwuda/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"
#include "liwuda/losses.hpp"

namespace liwuda::train {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (hidden_width == 0 || feature_dim == 0) throw ConfigError("network widths must be positive");
  if (solver.kind == ot::SolverKind::kSinkhorn) {
    if (!(solver.sinkhorn.reg > 0.0)) throw ConfigError("sinkhorn reg must be positive");
    if (!(solver.sinkhorn.tol > 0.0)) throw ConfigError("sinkhorn tol must be positive");
    if (solver.sinkhorn.max_iter == 0) throw ConfigError("sinkhorn max_iter must be positive");
  }
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "step,l_c,l_wot,l_sa,l_iot,total,converged,millis\n";
  for (const auto& r : steps) {
    out << r.step << ',' << io::format_double(r.l_c) << ',' << io::format_double(r.l_wot) << ','
        << io::format_double(r.l_sa) << ',' << io::format_double(r.l_iot) << ','
        << io::format_double(r.total) << ',' << (r.converged ? 1 : 0) << ','
        << io::format_double(r.millis) << '\n';
  }
}

TrainHistory TrainHistory::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "step,l_c,l_wot,l_sa,l_iot,total,converged,millis")
    throw ParseError("history: missing or unexpected header");
  TrainHistory h;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string ctx = "history line " + std::to_string(line_no);
    auto f = io::split(line, ',');
    if (f.size() != 8) throw ParseError(ctx + ": expected 8 fields");
    StepRecord r;
    r.step = static_cast<std::size_t>(io::parse_int(f[0], ctx));
    r.l_c = io::parse_double(f[1], ctx);
    r.l_wot = io::parse_double(f[2], ctx);
    r.l_sa = io::parse_double(f[3], ctx);
    r.l_iot = io::parse_double(f[4], ctx);
    r.total = io::parse_double(f[5], ctx);
    const auto conv = io::parse_int(f[6], ctx);
    if (conv != 0 && conv != 1) throw ParseError(ctx + ": converged flag must be 0 or 1");
    r.converged = conv == 1;
    r.millis = io::parse_double(f[7], ctx);
    h.steps.push_back(r);
  }
  return h;
}

EpochSampler::EpochSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed), order_(n) {
  if (batch_size_ == 0) throw ConfigError("batch size must be positive");
  if (batch_size_ > n_)
    throw ConfigError("batch size " + std::to_string(batch_size_) + " exceeds dataset size " +
                      std::to_string(n_));
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  reshuffle();
}

void EpochSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> EpochSampler::next_batch() {
  if (cursor_ >= n_) reshuffle();
  const std::size_t end = std::min(n_, cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

std::size_t EpochSampler::batches_per_epoch() const {
  return (n_ + batch_size_ - 1) / batch_size_;
}

namespace {

std::vector<double> first_column(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, 0);
  return out;
}

Matrix as_column(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }

}  // namespace

TrainResult train(const data::DomainDataset& source, const data::UnlabeledView& target,
                  const SettingPlan& plan, const TrainConfig& config,
                  const StepObserver& observer) {
  config.validate();
  check_plan(plan);
  if (source.role != data::DomainRole::kSource) throw ConfigError("train: first dataset must be the source");
  if (source.dim() != target.features().cols())
    throw ConfigError("train: source and target dimensions differ");
  if (source.size() < config.batch_size || target.size() < config.batch_size)
    throw ConfigError("train: batch_size exceeds a domain's sample count");
  data::check_split(plan.setting, source.split);

  nn::Rng init_rng(config.seed);
  nn::ModelShape shape{source.dim(), config.hidden_width, config.feature_dim,
                       source.split.source_classes()};
  TrainResult result;
  nn::Model& model = result.model;
  model = nn::make_model(shape, init_rng);

  auto opt_feature = nn::OptimizerState::for_params(model.feature, config.learning_rate,
                                                    config.momentum, config.weight_decay);
  auto opt_classifier = nn::OptimizerState::for_params(model.classifier, config.learning_rate,
                                                       config.momentum, config.weight_decay);
  auto opt_weight = nn::OptimizerState::for_params(model.weight, config.learning_rate,
                                                   config.momentum, config.weight_decay);

  EpochSampler source_sampler(source.size(), config.batch_size, config.seed * 2 + 1);
  EpochSampler target_sampler(target.size(), config.batch_size, config.seed * 2 + 2);
  const std::size_t steps_per_epoch =
      std::max(source_sampler.batches_per_epoch(), target_sampler.batches_per_epoch());
  const std::size_t total_steps = config.epochs * steps_per_epoch;

  for (std::size_t step = 0; step < total_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();

    // Sample a mini-batch from each domain.
    const auto idx_s = source_sampler.next_batch();
    const auto idx_t = target_sampler.next_batch();
    if (idx_s.empty() || idx_t.empty()) throw ConfigError("train: empty mini-batch");
    const Matrix xs = source.features.gather_rows(idx_s);
    const Matrix xt = target.features().gather_rows(idx_t);
    std::vector<int> ys(idx_s.size());
    for (std::size_t k = 0; k < idx_s.size(); ++k) ys[k] = source.labels[idx_s[k]];

    // Classification loss on the labeled source batch.
    const auto fs = nn::forward(model.feature, xs);
    const auto ft = nn::forward(model.feature, xt);
    const auto logits = nn::forward(model.classifier, fs.output);
    const auto ce = nn::cross_entropy_loss(logits.output, ys);

    // Couplings, WOT, SA and IOT losses.
    const auto ws = nn::forward(model.weight, fs.output);
    const auto wt = nn::forward(model.weight, ft.output);
    if (!logits.output.all_finite() || !ws.output.all_finite() || !wt.output.all_finite())
      throw NumericalError("train: non-finite activations at step " + std::to_string(step));
    const auto state = loss::alignment_forward(fs.output, ft.output, first_column(ws.output),
                                               first_column(wt.output), plan, config.solver);
    loss::LossTerms terms = state.terms;
    terms.classification = ce.loss;

    // Gradient step on theta, phi, alpha with couplings fixed.
    const auto align = loss::loss_backward(state, fs.output, ft.output, plan);
    const auto cls_back = nn::backward(model.classifier, logits.trace, ce.logit_grad);
    const auto ws_back = nn::backward(model.weight, ws.trace, as_column(align.source_raw));
    const auto wt_back = nn::backward(model.weight, wt.trace, as_column(align.target_raw));

    Matrix dfs = align.source_features;
    axpy(1.0, cls_back.input_grad, dfs);
    axpy(1.0, ws_back.input_grad, dfs);
    Matrix dft = align.target_features;
    axpy(1.0, wt_back.input_grad, dft);

    auto feature_grads = nn::backward(model.feature, fs.trace, dfs).params;
    feature_grads.accumulate(nn::backward(model.feature, ft.trace, dft).params);
    auto weight_grads = ws_back.params;
    weight_grads.accumulate(wt_back.params);

    nn::sgd_step(model.feature, feature_grads, opt_feature);
    nn::sgd_step(model.classifier, cls_back.params, opt_classifier);
    nn::sgd_step(model.weight, weight_grads, opt_weight);
    if (!model.all_finite())
      throw NumericalError("train: parameters became non-finite at step " + std::to_string(step));

    StepRecord rec;
    rec.step = step;
    rec.l_c = terms.classification;
    rec.l_wot = terms.wot;
    rec.l_sa = terms.sa;
    rec.l_iot = terms.iot;
    rec.total = loss::total_loss(terms, plan);
    rec.converged = state.converged;
    rec.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.history.steps.push_back(rec);
    if (observer) observer(rec);
  }
  return result;
}

}  // namespace liwuda::train
