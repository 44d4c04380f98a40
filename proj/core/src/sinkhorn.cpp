#include <algorithm>
#include <cmath>
#include <limits>

#include "liwuda/error.hpp"
#include "liwuda/ot.hpp"
#include "ot_internal.hpp"

namespace liwuda::ot {
namespace {

// log sum_k exp(x_k), stable for large-magnitude inputs.
template <typename Get>
double log_sum_exp(std::size_t n, Get get) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, get(k));
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(get(k) - hi);
  return hi + std::log(s);
}

}  // namespace

TransportResult solve_sinkhorn(const Matrix& cost, std::span<const double> p1,
                               std::span<const double> p2, const SinkhornOptions& options) {
  if (!(options.reg > 0.0)) throw ConfigError("sinkhorn: regularization must be positive");
  if (!(options.tol > 0.0)) throw ConfigError("sinkhorn: tolerance must be positive");
  if (options.max_iter == 0) throw ConfigError("sinkhorn: max_iter must be positive");
  detail::check_problem(cost, p1, p2);
  const auto red = detail::reduce(cost, p1, p2);
  const Matrix& c = red.cost;
  const std::size_t n = c.rows();
  const std::size_t m = c.cols();
  const double reg = options.reg;

  std::vector<double> log_a(n), log_b(m);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = std::log(red.p1[i]);
  for (std::size_t j = 0; j < m; ++j) log_b[j] = std::log(red.p2[j]);

  // Potentials f, g with coupling_ij = exp((f_i + g_j - c_ij) / reg).
  std::vector<double> f(n, 0.0), g(m, 0.0), lse_row(n);

  auto row_violation = [&](double r) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto ci = c.row(i);
      const double lse = log_sum_exp(m, [&](std::size_t j) { return (g[j] - ci[j]) / r; });
      worst = std::max(worst, std::abs(std::exp(f[i] / r + lse) - red.p1[i]));
    }
    return worst;
  };

  // Alternating projections at regularization r until the row marginals hold to
  // `tol` (columns are exact after every g-update). Returns iterations used.
  auto run = [&](double r, double tol, std::size_t budget, bool& converged) {
    std::size_t it = 0;
    converged = false;
    for (; it < budget; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        auto ci = c.row(i);
        lse_row[i] = log_sum_exp(m, [&](std::size_t j) { return (g[j] - ci[j]) / r; });
      }
      if (it > 0) {
        double violation = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          violation = std::max(violation, std::abs(std::exp(f[i] / r + lse_row[i]) - red.p1[i]));
        if (violation <= tol) {
          converged = true;
          break;
        }
      }
      for (std::size_t i = 0; i < n; ++i) f[i] = r * (log_a[i] - lse_row[i]);
      for (std::size_t j = 0; j < m; ++j) {
        const double lse = log_sum_exp(n, [&](std::size_t i) { return (f[i] - c(i, j)) / r; });
        g[j] = r * (log_b[j] - lse);
      }
    }
    return it;
  };

  // Small regularization converges slowly from a cold start, so anneal from the
  // cost scale down to `reg`, warm-starting each stage from the previous potentials.
  double cost_scale = 0.0;
  for (double v : c.values()) cost_scale = std::max(cost_scale, std::abs(v));
  std::size_t iterations = 0;
  bool stage_converged = false;
  for (double r = cost_scale / 2.0; r > 4.0 * reg && iterations < options.max_iter; r /= 4.0)
    iterations += run(r, std::max(options.tol, 1e-4), options.max_iter - iterations, stage_converged);

  TransportResult result;
  iterations += run(reg, options.tol, options.max_iter - std::min(iterations, options.max_iter),
                    result.converged);
  if (!result.converged) result.converged = row_violation(reg) <= options.tol;
  const std::size_t it = iterations;

  result.coupling = Matrix(cost.rows(), cost.cols());
  result.source_potential.assign(cost.rows(), 0.0);
  result.target_potential.assign(cost.cols(), 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    result.source_potential[red.rows[a]] = f[a];
    for (std::size_t b = 0; b < m; ++b)
      result.coupling(red.rows[a], red.cols[b]) = std::exp((f[a] + g[b] - c(a, b)) / reg);
  }
  for (std::size_t b = 0; b < m; ++b) result.target_potential[red.cols[b]] = g[b];

  // Zero-mass rows/columns: soft c-transform of the opposite potential.
  if (!red.is_full(cost.rows(), cost.cols())) {
    std::vector<bool> row_live(cost.rows(), false), col_live(cost.cols(), false);
    for (auto i : red.rows) row_live[i] = true;
    for (auto j : red.cols) col_live[j] = true;
    for (std::size_t i = 0; i < cost.rows(); ++i) {
      if (row_live[i]) continue;
      result.source_potential[i] = -reg * log_sum_exp(m, [&](std::size_t b) {
        return (g[b] - cost(i, red.cols[b])) / reg;
      });
    }
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      if (col_live[j]) continue;
      result.target_potential[j] = -reg * log_sum_exp(n, [&](std::size_t a) {
        return (f[a] - cost(red.rows[a], j)) / reg;
      });
    }
  }

  result.iterations = it;
  result.objective = coupling_cost(result.coupling, cost);
  result.marginal_error = validate_coupling(result.coupling, p1, p2).max_deviation();
  return result;
}

}  // namespace liwuda::ot
