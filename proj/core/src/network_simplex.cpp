// Transportation simplex on the bipartite graph rows x columns.
//
// The basis is a spanning tree of n + m - 1 cells. Supplies are perturbed
// (a_i + delta, last demand + n * delta) so that no basic solution is degenerate
// and pivoting cannot cycle; the final tree is then re-solved with the true
// marginals, which leaves the optimal basis unchanged because reduced costs do not
// depend on supplies.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "liwuda/error.hpp"
#include "liwuda/ot.hpp"
#include "ot_internal.hpp"

namespace liwuda::ot {
namespace detail {

void check_problem(const Matrix& cost, std::span<const double> p1, std::span<const double> p2) {
  if (cost.rows() != p1.size() || cost.cols() != p2.size())
    throw ShapeError("transport: marginal lengths " + std::to_string(p1.size()) + "/" +
                     std::to_string(p2.size()) + " do not match cost " +
                     std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  if (p1.empty() || p2.empty()) throw InputError("transport: empty marginal");
  if (!cost.all_finite()) throw InputError("transport: cost matrix has non-finite entries");
  auto total = [](std::span<const double> p, const char* which) {
    double s = 0.0;
    for (double v : p) {
      if (!std::isfinite(v) || v < 0.0)
        throw InputError(std::string("transport: ") + which + " marginal has a negative entry");
      s += v;
    }
    return s;
  };
  const double s1 = total(p1, "source");
  const double s2 = total(p2, "target");
  if (std::abs(s1 - 1.0) > kMarginalTolerance || std::abs(s2 - 1.0) > kMarginalTolerance ||
      std::abs(s1 - s2) > kMarginalTolerance)
    throw InputError("transport: infeasible marginals (sums " + std::to_string(s1) + " and " +
                     std::to_string(s2) + ")");
}

ReducedProblem reduce(const Matrix& cost, std::span<const double> p1, std::span<const double> p2) {
  ReducedProblem red;
  for (std::size_t i = 0; i < p1.size(); ++i)
    if (p1[i] > 0.0) red.rows.push_back(i);
  for (std::size_t j = 0; j < p2.size(); ++j)
    if (p2[j] > 0.0) red.cols.push_back(j);
  red.cost = Matrix(red.rows.size(), red.cols.size());
  for (std::size_t a = 0; a < red.rows.size(); ++a)
    for (std::size_t b = 0; b < red.cols.size(); ++b) red.cost(a, b) = cost(red.rows[a], red.cols[b]);
  for (auto i : red.rows) red.p1.push_back(p1[i]);
  for (auto j : red.cols) red.p2.push_back(p2[j]);
  return red;
}

}  // namespace detail

namespace {

class TransportationSimplex {
 public:
  TransportationSimplex(const Matrix& cost, std::span<const double> supply,
                        std::span<const double> demand)
      : cost_(cost),
        n_(cost.rows()),
        m_(cost.cols()),
        supply_(supply.begin(), supply.end()),
        demand_(demand.begin(), demand.end()) {}

  void run() {
    const double delta = 1e-10;
    std::vector<double> a = supply_;
    std::vector<double> b = demand_;
    for (double& v : a) v += delta;
    b.back() += static_cast<double>(n_) * delta;
    northwest_corner(a, b);

    const std::size_t cells = n_ * m_;
    block_ = std::max<std::size_t>(static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))), 10);
    const std::size_t max_pivots = 50 * cells + 1000;
    for (pivots_ = 0;; ++pivots_) {
      if (pivots_ > max_pivots) throw NumericalError("network simplex: pivot limit exceeded");
      build_tree();
      std::size_t ei = 0, ej = 0;
      if (!find_entering(ei, ej)) break;
      pivot(ei, ej);
    }
    build_tree();
    resolve_flows();
  }

  Matrix coupling() const {
    Matrix out(n_, m_);
    for (std::size_t e = 0; e < row_.size(); ++e) out(row_[e], col_[e]) = flow_[e];
    return out;
  }

  const std::vector<double>& row_potential() const { return u_; }
  const std::vector<double>& col_potential() const { return v_; }
  std::size_t pivots() const { return pivots_; }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void northwest_corner(std::vector<double> a, std::vector<double> b) {
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(a[i], b[j]);
      add_edge(i, j, x);
      a[i] -= x;
      b[j] -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1) {
        ++j;
      } else if (j == m_ - 1) {
        ++i;
      } else if (a[i] <= b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_edge(std::size_t i, std::size_t j, double x) {
    row_.push_back(i);
    col_.push_back(j);
    flow_.push_back(x);
  }

  // Rebuilds adjacency, BFS order from row 0, parent links, depths, potentials.
  void build_tree() {
    const std::size_t nodes = n_ + m_;
    adj_start_.assign(nodes + 1, 0);
    for (std::size_t e = 0; e < row_.size(); ++e) {
      ++adj_start_[row_[e] + 1];
      ++adj_start_[n_ + col_[e] + 1];
    }
    for (std::size_t k = 0; k < nodes; ++k) adj_start_[k + 1] += adj_start_[k];
    adj_edge_.assign(2 * row_.size(), 0);
    std::vector<std::size_t> fill(adj_start_.begin(), adj_start_.end() - 1);
    for (std::size_t e = 0; e < row_.size(); ++e) {
      adj_edge_[fill[row_[e]]++] = e;
      adj_edge_[fill[n_ + col_[e]]++] = e;
    }

    parent_edge_.assign(nodes, kNone);
    depth_.assign(nodes, kNone);
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    order_.clear();
    order_.push_back(0);
    depth_[0] = 0;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const std::size_t node = order_[head];
      for (std::size_t k = adj_start_[node]; k < adj_start_[node + 1]; ++k) {
        const std::size_t e = adj_edge_[k];
        const std::size_t other = node < n_ ? n_ + col_[e] : row_[e];
        if (depth_[other] != kNone) continue;
        depth_[other] = depth_[node] + 1;
        parent_edge_[other] = e;
        if (other < n_)
          u_[other] = cost_(row_[e], col_[e]) - v_[col_[e]];
        else
          v_[other - n_] = cost_(row_[e], col_[e]) - u_[row_[e]];
        order_.push_back(other);
      }
    }
    if (order_.size() != nodes) throw InternalError("network simplex: basis is not a spanning tree");
  }

  bool find_entering(std::size_t& ei, std::size_t& ej) {
    const std::size_t cells = n_ * m_;
    const double eps = 1e-12;
    double best = -eps;
    std::size_t best_cell = kNone;
    std::size_t scanned_in_block = 0;
    for (std::size_t k = 0; k < cells; ++k) {
      const std::size_t c = next_cell_;
      next_cell_ = next_cell_ + 1 == cells ? 0 : next_cell_ + 1;
      const std::size_t i = c / m_;
      const std::size_t j = c % m_;
      const double r = cost_(i, j) - u_[i] - v_[j];
      if (r < best) {
        best = r;
        best_cell = c;
      }
      if (++scanned_in_block == block_) {
        if (best_cell != kNone) break;
        scanned_in_block = 0;
      }
    }
    if (best_cell == kNone) return false;
    ei = best_cell / m_;
    ej = best_cell % m_;
    return true;
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // Tree path from column node to row node; position 1 (next to the column) loses flow.
    std::vector<std::size_t> from_col, from_row;
    std::size_t a = n_ + ej;
    std::size_t b = ei;
    while (depth_[a] > depth_[b]) {
      from_col.push_back(parent_edge_[a]);
      a = parent_of(a);
    }
    while (depth_[b] > depth_[a]) {
      from_row.push_back(parent_edge_[b]);
      b = parent_of(b);
    }
    while (a != b) {
      from_col.push_back(parent_edge_[a]);
      a = parent_of(a);
      from_row.push_back(parent_edge_[b]);
      b = parent_of(b);
    }
    cycle_.assign(from_col.begin(), from_col.end());
    cycle_.insert(cycle_.end(), from_row.rbegin(), from_row.rend());

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (std::size_t k = 0; k < cycle_.size(); k += 2) {
      const std::size_t e = cycle_[k];
      if (flow_[e] < theta) {
        theta = flow_[e];
        leaving = e;
      }
    }
    for (std::size_t k = 0; k < cycle_.size(); ++k)
      flow_[cycle_[k]] += (k % 2 == 0) ? -theta : theta;
    row_[leaving] = ei;
    col_[leaving] = ej;
    flow_[leaving] = theta;
  }

  std::size_t parent_of(std::size_t node) const {
    const std::size_t e = parent_edge_[node];
    return node < n_ ? n_ + col_[e] : row_[e];
  }

  // Exact flows for the unperturbed marginals on the final tree (leaf peeling).
  void resolve_flows() {
    std::vector<double> remaining(n_ + m_);
    std::copy(supply_.begin(), supply_.end(), remaining.begin());
    std::copy(demand_.begin(), demand_.end(), remaining.begin() + static_cast<std::ptrdiff_t>(n_));
    // Reverse BFS order visits every node after all of its tree children.
    for (std::size_t k = order_.size(); k-- > 1;) {
      const std::size_t node = order_[k];
      const std::size_t e = parent_edge_[node];
      const double x = std::max(remaining[node], 0.0);
      flow_[e] = x;
      remaining[parent_of(node)] -= x;
    }
  }

  const Matrix& cost_;
  std::size_t n_, m_;
  std::vector<double> supply_, demand_;
  std::vector<std::size_t> row_, col_;
  std::vector<double> flow_;
  std::vector<std::size_t> adj_start_, adj_edge_, parent_edge_, depth_, order_, cycle_;
  std::vector<double> u_, v_;
  std::size_t next_cell_ = 0;
  std::size_t block_ = 10;
  std::size_t pivots_ = 0;
};

}  // namespace

TransportResult solve_exact(const Matrix& cost, std::span<const double> p1,
                            std::span<const double> p2) {
  detail::check_problem(cost, p1, p2);
  const auto red = detail::reduce(cost, p1, p2);
  TransportationSimplex simplex(red.cost, red.p1, red.p2);
  simplex.run();

  TransportResult result;
  result.coupling = Matrix(cost.rows(), cost.cols());
  const Matrix reduced = simplex.coupling();
  for (std::size_t a = 0; a < red.rows.size(); ++a)
    for (std::size_t b = 0; b < red.cols.size(); ++b)
      result.coupling(red.rows[a], red.cols[b]) = reduced(a, b);

  // Zero-mass rows/columns take the largest dual-feasible potential.
  constexpr double kUnset = std::numeric_limits<double>::infinity();
  result.source_potential.assign(cost.rows(), kUnset);
  result.target_potential.assign(cost.cols(), kUnset);
  for (std::size_t a = 0; a < red.rows.size(); ++a)
    result.source_potential[red.rows[a]] = simplex.row_potential()[a];
  for (std::size_t b = 0; b < red.cols.size(); ++b)
    result.target_potential[red.cols[b]] = simplex.col_potential()[b];
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    if (result.source_potential[i] != kUnset) continue;
    double best = kUnset;
    for (auto j : red.cols) best = std::min(best, cost(i, j) - result.target_potential[j]);
    result.source_potential[i] = best;
  }
  for (std::size_t j = 0; j < cost.cols(); ++j) {
    if (result.target_potential[j] != kUnset) continue;
    double best = kUnset;
    for (std::size_t i = 0; i < cost.rows(); ++i)
      best = std::min(best, cost(i, j) - result.source_potential[i]);
    result.target_potential[j] = best;
  }

  result.objective = coupling_cost(result.coupling, cost);
  result.iterations = simplex.pivots();
  result.converged = true;
  result.marginal_error = validate_coupling(result.coupling, p1, p2).max_deviation();
  return result;
}

}  // namespace liwuda::ot
