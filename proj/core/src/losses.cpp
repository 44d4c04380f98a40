#include "liwuda/losses.hpp"

#include <cmath>
#include <string>

#include "liwuda/error.hpp"

namespace liwuda::loss {

WeightAssignment normalize_weights(std::span<const double> raw) {
  if (raw.empty()) throw InputError("normalize_weights: no instances");
  double sum = 0.0;
  for (double w : raw) {
    if (!std::isfinite(w) || w < 0.0 || w > 1.0)
      throw InputError("normalize_weights: raw weight outside [0, 1]");
    sum += w;
  }
  if (!(sum > 0.0)) throw DegenerateInputError("normalize_weights: all weights are zero");
  std::vector<double> normalized(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) normalized[i] = raw[i] / sum;
  return {std::vector<double>(raw.begin(), raw.end()), ot::ProbVector(std::move(normalized))};
}

TransportLoss wot_loss(const Matrix& source_features, const Matrix& target_features,
                       std::span<const double> p_s, std::span<const double> p_t,
                       const ot::SolverChoice& solver) {
  TransportLoss out;
  out.cost = ot::cosine_cost(source_features, target_features);
  out.transport = ot::solve(out.cost, p_s, p_t, solver);
  out.value = ot::coupling_cost(out.transport.coupling, out.cost);
  return out;
}

Matrix partial_coupling(const Matrix& coupling, const Matrix& cost, double threshold) {
  require_same_shape(coupling, cost, "partial_coupling");
  Matrix out = coupling;
  auto o = out.values();
  auto d = cost.values();
  // Costs live in [0, 2]; the slack absorbs rounding in the threshold itself,
  // which is a coupling-weighted mean of these same entries.
  constexpr double kSlack = 1e-12;
  for (std::size_t k = 0; k < o.size(); ++k)
    if (d[k] > threshold + kSlack) o[k] = 0.0;
  return out;
}

Matrix residual_coupling(const Matrix& coupling, const Matrix& partial) {
  require_same_shape(coupling, partial, "residual_coupling");
  Matrix out(coupling.rows(), coupling.cols());
  auto o = out.values();
  auto g = coupling.values();
  auto p = partial.values();
  for (std::size_t k = 0; k < o.size(); ++k) {
    if (p[k] > g[k]) throw InternalError("partial coupling exceeds the coupling");
    o[k] = 1.0 - std::exp(-(g[k] - p[k]));
  }
  return out;
}

double sa_loss(const Matrix& coupling, const Matrix& partial, const Matrix& cost) {
  require_same_shape(coupling, cost, "sa_loss");
  const Matrix residual = residual_coupling(coupling, partial);
  double separate = 0.0;
  double align = 0.0;
  auto r = residual.values();
  auto p = partial.values();
  auto d = cost.values();
  for (std::size_t k = 0; k < d.size(); ++k) {
    separate += r[k] * (2.0 - d[k]);
    align += p[k] * d[k];
  }
  return separate + align;
}

TransportLoss iot_loss(const Matrix& features, std::span<const double> weights,
                       const ot::SolverChoice& solver) {
  TransportLoss out;
  out.cost = ot::cosine_cost(features, features);
  const auto uniform = ot::ProbVector::uniform(features.rows());
  out.transport = ot::solve(out.cost, weights, uniform, solver);
  out.value = ot::coupling_cost(out.transport.coupling, out.cost);
  return out;
}

double total_loss(const LossTerms& t, const SettingPlan& plan) {
  if (plan.beta < 0.0 || plan.eta < 0.0 || plan.epsilon < 0.0)
    throw ConfigError("total_loss: negative hyperparameter");
  return t.classification + plan.beta * t.wot + plan.eta * t.sa + plan.epsilon * t.iot;
}

AlignmentState alignment_forward(const Matrix& source_features, const Matrix& target_features,
                                 std::span<const double> source_raw,
                                 std::span<const double> target_raw, const SettingPlan& plan,
                                 const ot::SolverChoice& solver) {
  if (source_raw.size() != source_features.rows() || target_raw.size() != target_features.rows())
    throw ShapeError("alignment_forward: one raw weight per instance required");
  AlignmentState s;
  s.source_weights = normalize_weights(source_raw);
  s.target_weights = normalize_weights(target_raw);
  s.source_marginal = plan.source_marginal == MarginalSource::kLearned
                          ? s.source_weights.normalized
                          : ot::ProbVector::uniform(source_features.rows());
  s.target_marginal = plan.target_marginal == MarginalSource::kLearned
                          ? s.target_weights.normalized
                          : ot::ProbVector::uniform(target_features.rows());

  s.wot = wot_loss(source_features, target_features, s.source_marginal, s.target_marginal, solver);
  s.terms.wot = s.wot.value;
  s.converged = s.wot.transport.converged;

  if (plan.use_sa) {
    s.partial = partial_coupling(s.wot.transport.coupling, s.wot.cost, s.wot.value);
    s.terms.sa = sa_loss(s.wot.transport.coupling, s.partial, s.wot.cost);
  }
  if (plan.use_iot) {
    const bool on_source = plan.iot_domain == IotDomain::kSource;
    s.iot = iot_loss(on_source ? source_features : target_features,
                     on_source ? s.source_weights.normalized : s.target_weights.normalized, solver);
    s.terms.iot = s.iot.value;
    s.converged = s.converged && s.iot.transport.converged;
  }
  return s;
}

std::pair<Matrix, Matrix> cosine_cost_backward(const Matrix& a, const Matrix& b,
                                               const Matrix& cost_grad) {
  if (a.cols() != b.cols() || cost_grad.rows() != a.rows() || cost_grad.cols() != b.rows())
    throw ShapeError("cosine_cost_backward: shapes do not agree");
  const std::size_t d = a.cols();
  auto unit = [d](const Matrix& m, std::vector<double>& norms) {
    Matrix u(m.rows(), d);
    norms.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double s = 0.0;
      for (double v : m.row(i)) s += v * v;
      norms[i] = std::sqrt(s);
      if (!(norms[i] > 0.0)) throw DegenerateInputError("cosine_cost_backward: zero-norm row");
      for (std::size_t k = 0; k < d; ++k) u(i, k) = m(i, k) / norms[i];
    }
    return u;
  };
  std::vector<double> na, nb;
  const Matrix ua = unit(a, na);
  const Matrix ub = unit(b, nb);
  const Matrix cos = matmul_nt(ua, ub);

  // D_ij = 1 - cos_ij;  dcos_ij/da_i = (ub_j - cos_ij ua_i) / |a_i|.
  Matrix ga(a.rows(), d), gb(b.rows(), d);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double w = -cost_grad(i, j);
      if (w == 0.0) continue;
      const double c = cos(i, j);
      const double sa = w / na[i];
      const double sb = w / nb[j];
      for (std::size_t k = 0; k < d; ++k) {
        ga(i, k) += sa * (ub(j, k) - c * ua(i, k));
        gb(j, k) += sb * (ua(i, k) - c * ub(j, k));
      }
    }
  }
  return {std::move(ga), std::move(gb)};
}

std::vector<double> normalization_backward(const WeightAssignment& weights,
                                           std::span<const double> normalized_grad) {
  const std::size_t n = weights.raw.size();
  if (normalized_grad.size() != n) throw ShapeError("normalization_backward: length mismatch");
  double sum = 0.0;
  for (double w : weights.raw) sum += w;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += normalized_grad[i] * weights.normalized[i];
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = (normalized_grad[k] - mean) / sum;
  return out;
}

AlignmentGradients loss_backward(const AlignmentState& s, const Matrix& source_features,
                                 const Matrix& target_features, const SettingPlan& plan) {
  const Matrix& cost = s.wot.cost;
  if (cost.rows() != source_features.rows() || cost.cols() != target_features.rows())
    throw ShapeError("loss_backward: features do not match the solved batch");

  // dL/dD for the cross-domain cost; couplings are constants here.
  Matrix cost_grad(cost.rows(), cost.cols());
  axpy(plan.beta, s.wot.transport.coupling, cost_grad);
  if (plan.use_sa && plan.eta != 0.0) {
    const Matrix residual = residual_coupling(s.wot.transport.coupling, s.partial);
    axpy(-plan.eta, residual, cost_grad);
    axpy(plan.eta, s.partial, cost_grad);
  }
  auto [gs, gt] = cosine_cost_backward(source_features, target_features, cost_grad);

  AlignmentGradients out;
  std::vector<double> ws_grad(source_features.rows(), 0.0);
  std::vector<double> wt_grad(target_features.rows(), 0.0);
  if (plan.source_marginal == MarginalSource::kLearned)
    for (std::size_t i = 0; i < ws_grad.size(); ++i)
      ws_grad[i] += plan.beta * s.wot.transport.source_potential[i];
  if (plan.target_marginal == MarginalSource::kLearned)
    for (std::size_t j = 0; j < wt_grad.size(); ++j)
      wt_grad[j] += plan.beta * s.wot.transport.target_potential[j];

  if (plan.use_iot && plan.epsilon != 0.0) {
    const bool on_source = plan.iot_domain == IotDomain::kSource;
    const Matrix& x = on_source ? source_features : target_features;
    Matrix iot_grad(x.rows(), x.rows());
    axpy(plan.epsilon, s.iot.transport.coupling, iot_grad);
    auto [g1, g2] = cosine_cost_backward(x, x, iot_grad);
    axpy(1.0, g2, g1);
    axpy(1.0, g1, on_source ? gs : gt);
    auto& wg = on_source ? ws_grad : wt_grad;
    for (std::size_t i = 0; i < wg.size(); ++i)
      wg[i] += plan.epsilon * s.iot.transport.source_potential[i];
  }

  out.source_features = std::move(gs);
  out.target_features = std::move(gt);
  out.source_raw = normalization_backward(s.source_weights, ws_grad);
  out.target_raw = normalization_backward(s.target_weights, wt_grad);
  return out;
}

}  // namespace liwuda::loss
