#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "liwuda/matrix.hpp"

namespace liwuda::ot {

inline constexpr double kMarginalTolerance = 1e-9;

/// Nonnegative weights summing to one (within kMarginalTolerance).
class ProbVector {
 public:
  ProbVector() = default;
  /// Throws InputError on negative/non-finite entries or a sum away from 1.
  explicit ProbVector(std::vector<double> entries);

  static ProbVector uniform(std::size_t n);

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> values() const { return entries_; }
  operator std::span<const double>() const { return entries_; }

 private:
  std::vector<double> entries_;
};

/// Pairwise cosine dissimilarity 1 - <u_i, v_j> / (|u_i| |v_j|), clamped to [0, 2].
/// Throws DegenerateInputError on a zero-norm row.
Matrix cosine_cost(const Matrix& source_features, const Matrix& target_features);

/// Frobenius product sum_ij coupling_ij * cost_ij.
double coupling_cost(const Matrix& coupling, const Matrix& cost);

struct TransportResult {
  Matrix coupling;
  // Dual potentials: source_potential[i] + target_potential[j] <= cost(i, j) for the
  // exact solver; the entropic solver returns its (soft) scaling potentials. Either
  // serves as the sensitivity of the optimal cost to the marginals.
  std::vector<double> source_potential;
  std::vector<double> target_potential;
  double objective = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
  double marginal_error = 0.0;
};

/// Exact Kantorovich solution by the transportation (network) simplex method.
/// Objective is optimal to ~1e-12; marginals hold to ~1e-15.
TransportResult solve_exact(const Matrix& cost, std::span<const double> p1,
                            std::span<const double> p2);

struct SinkhornOptions {
  double reg = 0.05;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
};

/// Log-domain Sinkhorn for the entropic problem. Non-convergence is reported via
/// `converged = false`, never thrown.
TransportResult solve_sinkhorn(const Matrix& cost, std::span<const double> p1,
                               std::span<const double> p2, const SinkhornOptions& options = {});

enum class SolverKind { kExact, kSinkhorn };

struct SolverChoice {
  SolverKind kind = SolverKind::kSinkhorn;
  SinkhornOptions sinkhorn;
};

TransportResult solve(const Matrix& cost, std::span<const double> p1, std::span<const double> p2,
                      const SolverChoice& choice);

struct CouplingReport {
  double max_row_deviation = 0.0;
  double max_col_deviation = 0.0;
  double most_negative = 0.0;  // min(0, smallest entry)

  double max_deviation() const;
  bool feasible(double tol) const { return max_deviation() <= tol && most_negative >= -tol; }
};

CouplingReport validate_coupling(const Matrix& coupling, std::span<const double> p1,
                                 std::span<const double> p2);

/// Row-major CSV, one matrix row per line, 17 significant digits.
void write_csv(std::ostream& out, const Matrix& m);

}  // namespace liwuda::ot
