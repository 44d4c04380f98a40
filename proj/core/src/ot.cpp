#include "liwuda/ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"

namespace liwuda::ot {

ProbVector::ProbVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InputError("probability vector is empty");
  double sum = 0.0;
  for (double v : entries_) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("probability entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kMarginalTolerance)
    throw InputError("probability vector sums to " + io::format_double(sum));
}

ProbVector ProbVector::uniform(std::size_t n) {
  if (n == 0) throw InputError("uniform distribution over zero points");
  return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Matrix cosine_cost(const Matrix& source, const Matrix& target) {
  if (source.cols() != target.cols())
    throw ShapeError("cosine_cost: feature dimensions differ");
  auto norms = [](const Matrix& m, const char* which) {
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double s = 0.0;
      for (double v : m.row(i)) s += v * v;
      out[i] = std::sqrt(s);
      if (!(out[i] > 0.0) || !std::isfinite(out[i]))
        throw DegenerateInputError(std::string("cosine_cost: ") + which + " row " +
                                   std::to_string(i) + " has zero or non-finite norm");
    }
    return out;
  };
  const auto ns = norms(source, "source");
  const auto nt = norms(target, "target");
  Matrix cost = matmul_nt(source, target);
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    auto r = cost.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      r[j] = std::clamp(1.0 - r[j] / (ns[i] * nt[j]), 0.0, 2.0);
  }
  return cost;
}

double coupling_cost(const Matrix& coupling, const Matrix& cost) {
  return frobenius_dot(coupling, cost);
}

TransportResult solve(const Matrix& cost, std::span<const double> p1, std::span<const double> p2,
                      const SolverChoice& choice) {
  if (choice.kind == SolverKind::kExact) return solve_exact(cost, p1, p2);
  return solve_sinkhorn(cost, p1, p2, choice.sinkhorn);
}

double CouplingReport::max_deviation() const {
  return std::max(max_row_deviation, max_col_deviation);
}

CouplingReport validate_coupling(const Matrix& coupling, std::span<const double> p1,
                                 std::span<const double> p2) {
  if (coupling.rows() != p1.size() || coupling.cols() != p2.size())
    throw ShapeError("validate_coupling: marginal lengths differ from coupling shape");
  CouplingReport report;
  std::vector<double> col(coupling.cols(), 0.0);
  for (std::size_t i = 0; i < coupling.rows(); ++i) {
    double row = 0.0;
    auto r = coupling.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      row += r[j];
      col[j] += r[j];
      report.most_negative = std::min(report.most_negative, r[j]);
    }
    report.max_row_deviation = std::max(report.max_row_deviation, std::abs(row - p1[i]));
  }
  for (std::size_t j = 0; j < col.size(); ++j)
    report.max_col_deviation = std::max(report.max_col_deviation, std::abs(col[j] - p2[j]));
  return report;
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << io::format_double(r[j]);
    out << '\n';
  }
}

}  // namespace liwuda::ot
