#pragma once

#include <span>
#include <utility>
#include <vector>

#include "liwuda/matrix.hpp"
#include "liwuda/ot.hpp"
#include "liwuda/settings.hpp"

namespace liwuda::loss {

/// Raw weight-network outputs and their normalization to a distribution.
struct WeightAssignment {
  std::vector<double> raw;
  ot::ProbVector normalized;
};

/// raw / sum(raw). Throws InputError for entries outside [0, 1] and
/// DegenerateInputError when every entry is 0.
WeightAssignment normalize_weights(std::span<const double> raw);

struct TransportLoss {
  double value = 0.0;
  ot::TransportResult transport;
  Matrix cost;
};

/// Weighted OT cost <gamma*, D(Xs, Xt)> with gamma* optimal for marginals (p_s, p_t).
TransportLoss wot_loss(const Matrix& source_features, const Matrix& target_features,
                       std::span<const double> p_s, std::span<const double> p_t,
                       const ot::SolverChoice& solver);

/// Keeps coupled pairs whose dissimilarity is at most `threshold` (the batch WOT
/// cost) and zeroes the rest. A pair at the threshold, up to 1e-12 of rounding, is kept.
Matrix partial_coupling(const Matrix& coupling, const Matrix& cost, double threshold);

/// 1 - exp(-(coupling - partial)), elementwise.
Matrix residual_coupling(const Matrix& coupling, const Matrix& partial);

/// sum residual * (2 - D) + sum partial * D. Throws InternalError if the partial
/// coupling exceeds the coupling anywhere.
double sa_loss(const Matrix& coupling, const Matrix& partial, const Matrix& cost);

/// Intra-domain OT from the learned weights to the uniform distribution on the
/// same point set.
TransportLoss iot_loss(const Matrix& features, std::span<const double> weights,
                       const ot::SolverChoice& solver);

struct LossTerms {
  double classification = 0.0;
  double wot = 0.0;
  double sa = 0.0;
  double iot = 0.0;
};

/// classification + beta * wot + eta * sa + epsilon * iot, with the plan's
/// hyperparameters. Throws ConfigError on negative hyperparameters.
double total_loss(const LossTerms& terms, const SettingPlan& plan);

/// Everything the alignment losses computed on one mini-batch; the couplings and
/// potentials are treated as constants by loss_backward.
struct AlignmentState {
  WeightAssignment source_weights;
  WeightAssignment target_weights;
  ot::ProbVector source_marginal;
  ot::ProbVector target_marginal;
  TransportLoss wot;
  Matrix partial;       // empty unless the plan uses SA
  TransportLoss iot;    // empty unless the plan uses IOT
  LossTerms terms;      // classification left at 0
  bool converged = true;
};

/// Solves the WOT (and IOT) transport problems for the batch and evaluates the
/// three alignment losses per the plan.
AlignmentState alignment_forward(const Matrix& source_features, const Matrix& target_features,
                                 std::span<const double> source_raw,
                                 std::span<const double> target_raw, const SettingPlan& plan,
                                 const ot::SolverChoice& solver);

struct AlignmentGradients {
  Matrix source_features;
  Matrix target_features;
  std::vector<double> source_raw;
  std::vector<double> target_raw;
};

/// Gradient of beta * wot + eta * sa + epsilon * iot.
///
/// Feature gradients hold every coupling fixed and chain through the cosine
/// dissimilarity. Raw-weight gradients use the solvers' dual potentials as the
/// sensitivity of the optimal transport cost to a learned marginal (envelope
/// rule), then chain through the normalization.
AlignmentGradients loss_backward(const AlignmentState& state, const Matrix& source_features,
                                 const Matrix& target_features, const SettingPlan& plan);

/// Given dL/dD for D = cosine_cost(a, b), returns (dL/da, dL/db).
std::pair<Matrix, Matrix> cosine_cost_backward(const Matrix& a, const Matrix& b,
                                               const Matrix& cost_grad);

/// Chain a gradient w.r.t. normalized weights back to the raw weights.
std::vector<double> normalization_backward(const WeightAssignment& weights,
                                           std::span<const double> normalized_grad);

}  // namespace liwuda::loss
