#pragma once

#include <span>
#include <vector>

#include "liwuda/matrix.hpp"

namespace liwuda::ot::detail {

// Throws ShapeError / InputError unless p1, p2 are valid marginals for `cost`
// with equal total mass.
void check_problem(const Matrix& cost, std::span<const double> p1, std::span<const double> p2);

// The subproblem on rows/columns that carry positive mass. Zero-mass rows and
// columns transport nothing, so solvers work on this and scatter back.
struct ReducedProblem {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  Matrix cost;
  std::vector<double> p1;
  std::vector<double> p2;

  bool is_full(std::size_t n_rows, std::size_t n_cols) const {
    return rows.size() == n_rows && cols.size() == n_cols;
  }
};

ReducedProblem reduce(const Matrix& cost, std::span<const double> p1, std::span<const double> p2);

}  // namespace liwuda::ot::detail
