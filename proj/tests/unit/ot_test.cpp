#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"
#include "liwuda/ot.hpp"
#include "oracles.hpp"

namespace liwuda::ot {
namespace {

const std::vector<double> kHalf{0.5, 0.5};

TEST(CosineCost, BasicAngles) {
  const Matrix u{{1, 0}, {0, 3}, {-2, 0}, {1, 0}};
  const Matrix v{{5, 0}, {1, 1}};
  const Matrix c = cosine_cost(u, v);
  EXPECT_DOUBLE_EQ(c(0, 0), 0.0);
  EXPECT_NEAR(c(1, 0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(c(2, 0), 2.0);
  EXPECT_NEAR(c(3, 1), 0.29289321881345248, 1e-15);
}

TEST(CosineCost, MatchesNaiveAndStaysInRange) {
  std::mt19937_64 rng(5);
  const Matrix a = oracle::random_matrix(7, 5, rng);
  const Matrix b = oracle::random_matrix(4, 5, rng);
  const Matrix fast = cosine_cost(a, b);
  const Matrix slow = oracle::naive_cosine_cost(a, b);
  for (std::size_t k = 0; k < fast.size(); ++k) {
    EXPECT_NEAR(fast.values()[k], slow.values()[k], 1e-12);
    EXPECT_GE(fast.values()[k], 0.0);
    EXPECT_LE(fast.values()[k], 2.0);
  }
}

TEST(CosineCost, RejectsZeroRowAndWidthMismatch) {
  EXPECT_THROW(cosine_cost(Matrix{{0, 0}}, Matrix{{1, 0}}), DegenerateInputError);
  EXPECT_THROW(cosine_cost(Matrix{{1, 0}}, Matrix{{1, 0, 0}}), ShapeError);
}

TEST(ProbVector, Validation) {
  EXPECT_NO_THROW(ProbVector({0.25, 0.75}));
  EXPECT_THROW(ProbVector({0.5, 0.6}), InputError);
  EXPECT_THROW(ProbVector({1.5, -0.5}), InputError);
  EXPECT_THROW(ProbVector({NAN, 1.0}), InputError);
  const auto u = ProbVector::uniform(4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(u[i], 0.25);
}

TEST(SolveExact, DiagonalCost) {
  const auto r = solve_exact(Matrix{{0, 1}, {1, 0}}, kHalf, kHalf);
  EXPECT_EQ(r.coupling, (Matrix{{0.5, 0}, {0, 0.5}}));
  EXPECT_EQ(r.objective, 0.0);
}

TEST(SolveExact, AntiDiagonalOptimum) {
  const auto r = solve_exact(Matrix{{0.2, 0.1}, {0.3, 0.4}}, kHalf, kHalf);
  EXPECT_NEAR(r.objective, 0.2, 1e-12);
  EXPECT_NEAR(r.coupling(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(r.coupling(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(r.coupling(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.coupling(1, 1), 0.0, 1e-12);
}

TEST(SolveExact, WeightedMarginals) {
  const std::vector<double> p1{0.7, 0.3};
  const auto r = solve_exact(Matrix{{0, 1}, {1, 0}}, p1, kHalf);
  EXPECT_NEAR(r.objective, 0.2, 1e-12);
  const Matrix expected{{0.5, 0.2}, {0.0, 0.3}};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.coupling.values()[k], expected.values()[k], 1e-12);
  EXPECT_NEAR(r.objective, oracle::vertex_enumeration_ot(Matrix{{0, 1}, {1, 0}}, p1, kHalf), 1e-12);
}

TEST(SolveExact, RejectsBadProblems) {
  const std::vector<double> a{0.5, 0.5}, b{0.6, 0.6}, c{1.0};
  EXPECT_THROW(solve_exact(Matrix(2, 2), a, b), InputError);
  EXPECT_THROW(solve_exact(Matrix(2, 2), a, c), ShapeError);
  EXPECT_THROW(solve_exact(Matrix{{0, NAN}, {0, 0}}, a, a), InputError);
}

TEST(SolveExact, MatchesPermutationOracle) {
  std::mt19937_64 rng(2024);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 25; ++trial) {
      Matrix cost = oracle::random_matrix(n, n, rng, 0.0, 2.0);
      if (trial % 5 == 0)  // heavy ties
        for (double& v : cost.values()) v = std::round(v * 2.0) / 2.0;
      const auto u = ProbVector::uniform(n);
      const auto r = solve_exact(cost, u, u);
      EXPECT_NEAR(r.objective, oracle::permutation_ot(cost), 1e-8) << "n=" << n;
      EXPECT_LT(validate_coupling(r.coupling, u, u).max_deviation(), 1e-8);
    }
  }
}

TEST(SolveExact, MatchesVertexOracleForGeneralMarginals) {
  std::mt19937_64 rng(77);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t m = 1; m <= 4; ++m) {
      for (int trial = 0; trial < 10; ++trial) {
        const Matrix cost = oracle::random_matrix(n, m, rng, 0.0, 2.0);
        const auto p1 = oracle::random_simplex(n, rng);
        const auto p2 = oracle::random_simplex(m, rng);
        const auto r = solve_exact(cost, p1, p2);
        EXPECT_NEAR(r.objective, oracle::vertex_enumeration_ot(cost, p1, p2), 1e-6);
        const auto report = validate_coupling(r.coupling, p1, p2);
        EXPECT_TRUE(report.feasible(1e-8));
      }
    }
  }
}

TEST(SolveExact, ObjectiveBoundsAndDuality) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 9, m = 3 + trial % 7;
    const Matrix cost = cosine_cost(oracle::random_matrix(n, 4, rng), oracle::random_matrix(m, 4, rng));
    const auto p1 = oracle::random_simplex(n, rng);
    const auto p2 = oracle::random_simplex(m, rng);
    const auto r = solve_exact(cost, p1, p2);
    EXPECT_GE(r.objective, -1e-12);
    EXPECT_LE(r.objective, max_abs(cost) + 1e-12);
    EXPECT_NEAR(r.objective, coupling_cost(r.coupling, cost), 1e-12);
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += p1[i] * r.source_potential[i];
    for (std::size_t j = 0; j < m; ++j) dual += p2[j] * r.target_potential[j];
    EXPECT_NEAR(dual, r.objective, 1e-9);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        EXPECT_LE(r.source_potential[i] + r.target_potential[j], cost(i, j) + 1e-9);
  }
}

TEST(SolveExact, ZeroMassRowsAndColumnsAreExactlyZero) {
  std::mt19937_64 rng(3);
  const Matrix cost = oracle::random_matrix(4, 5, rng, 0.0, 2.0);
  const std::vector<double> p1{0.5, 0.0, 0.5, 0.0};
  const std::vector<double> p2{0.0, 0.4, 0.0, 0.6, 0.0};
  for (const auto* solver : {"exact", "sinkhorn"}) {
    const auto r = std::string(solver) == "exact" ? solve_exact(cost, p1, p2) : solve_sinkhorn(cost, p1, p2);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(r.coupling(1, j), 0.0) << solver;
      EXPECT_EQ(r.coupling(3, j), 0.0) << solver;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(r.coupling(i, 0), 0.0) << solver;
      EXPECT_EQ(r.coupling(i, 2), 0.0) << solver;
      EXPECT_EQ(r.coupling(i, 4), 0.0) << solver;
    }
    EXPECT_EQ(r.source_potential.size(), 4u);
    EXPECT_EQ(r.target_potential.size(), 5u);
  }
}

TEST(SolveExact, LargeDegenerateInstance) {
  // Integer costs with repeated values force many degenerate pivots.
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> d(0, 2);
  Matrix cost(60, 60);
  for (double& v : cost.values()) v = d(rng);
  const auto u = ProbVector::uniform(60);
  const auto r = solve_exact(cost, u, u);
  EXPECT_TRUE(validate_coupling(r.coupling, u, u).feasible(1e-12));
  EXPECT_NEAR(r.objective, coupling_cost(r.coupling, cost), 1e-12);
}

TEST(Sinkhorn, ZeroCostGivesOuterProduct) {
  const std::vector<double> p1{0.2, 0.3, 0.5}, p2{0.6, 0.4};
  const auto r = solve_sinkhorn(Matrix(3, 2), p1, p2);
  EXPECT_TRUE(r.converged);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(r.coupling(i, j), p1[i] * p2[j], 1e-12);
}

TEST(Sinkhorn, SmallRegApproachesExact) {
  const Matrix cost{{0.2, 0.1}, {0.3, 0.4}};
  const auto r = solve_sinkhorn(cost, kHalf, kHalf, {1e-3, 1e-9, 10000});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.objective, 0.2, 1e-3);
}

TEST(Sinkhorn, MarginalsWithinTolerance) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix cost = cosine_cost(oracle::random_matrix(8, 5, rng), oracle::random_matrix(8, 5, rng));
    const auto p1 = oracle::random_simplex(8, rng);
    const auto p2 = oracle::random_simplex(8, rng);
    const auto r = solve_sinkhorn(cost, p1, p2);
    ASSERT_TRUE(r.converged);
    const auto report = validate_coupling(r.coupling, p1, p2);
    EXPECT_TRUE(report.feasible(1e-6));
    EXPECT_LE(r.marginal_error, 1e-6);
  }
}

TEST(Sinkhorn, ObjectiveNonIncreasingAsRegShrinks) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix cost = cosine_cost(oracle::random_matrix(10, 3, rng), oracle::random_matrix(12, 3, rng));
    const auto p1 = oracle::random_simplex(10, rng);
    const auto p2 = oracle::random_simplex(12, rng);
    const double exact = solve_exact(cost, p1, p2).objective;
    double previous = INFINITY;
    for (double reg : {1.0, 0.3, 0.1, 0.03, 0.01, 0.003}) {
      const auto r = solve_sinkhorn(cost, p1, p2, {reg, 1e-11, 100000});
      ASSERT_TRUE(r.converged) << reg;
      EXPECT_LE(r.objective, previous + 1e-8) << reg;
      EXPECT_GE(r.objective, exact - 1e-8) << reg;
      previous = r.objective;
    }
    EXPECT_NEAR(previous, exact, 2e-2);
  }
}

TEST(Sinkhorn, ReportsNonConvergence) {
  std::mt19937_64 rng(4);
  const Matrix cost = oracle::random_matrix(30, 30, rng, 0.0, 2.0);
  const auto u = ProbVector::uniform(30);
  const auto r = solve_sinkhorn(cost, u, u, {1e-4, 1e-14, 3});
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.coupling.all_finite());
}

TEST(Sinkhorn, RejectsBadOptions) {
  const auto u = ProbVector::uniform(2);
  EXPECT_THROW(solve_sinkhorn(Matrix(2, 2), u, u, {0.0, 1e-6, 10}), ConfigError);
  EXPECT_THROW(solve_sinkhorn(Matrix(2, 2), u, u, {0.1, 1e-6, 0}), ConfigError);
}

TEST(CouplingCost, Examples) {
  EXPECT_EQ(coupling_cost(Matrix{{0.3, 0.2}, {0.1, 0.4}}, Matrix(2, 2)), 0.0);
  EXPECT_EQ(coupling_cost(Matrix{{0.5, 0}, {0, 0.5}}, Matrix{{0, 1}, {1, 0}}), 0.0);
  EXPECT_NEAR(coupling_cost(Matrix{{0, 0.5}, {0.5, 0}}, Matrix{{0.2, 0.1}, {0.3, 0.4}}), 0.2, 1e-15);
  EXPECT_THROW(coupling_cost(Matrix(2, 2), Matrix(2, 3)), ShapeError);
}

TEST(ValidateCoupling, OuterProductAndPerturbation) {
  const std::vector<double> p1{0.1, 0.9}, p2{0.25, 0.25, 0.5};
  Matrix outer(2, 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) outer(i, j) = p1[i] * p2[j];
  EXPECT_LT(validate_coupling(outer, p1, p2).max_deviation(), 1e-16);
  outer(1, 2) += 1e-3;
  const auto report = validate_coupling(outer, p1, p2);
  EXPECT_GE(report.max_deviation(), 1e-3 - 1e-15);
  EXPECT_FALSE(report.feasible(1e-4));
  outer(0, 0) = -0.01;
  EXPECT_NEAR(validate_coupling(outer, p1, p2).most_negative, -0.01, 1e-15);
}

TEST(Csv, SeventeenDigitsRoundTrip) {
  const Matrix m{{1.0 / 3.0, 2e-300}, {-0.1, 12345.678901234567}};
  std::stringstream out;
  write_csv(out, m);
  std::string line;
  std::size_t r = 0;
  while (std::getline(out, line)) {
    const auto fields = io::split(line, ',');
    ASSERT_EQ(fields.size(), 2u);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(io::parse_double(fields[c], "csv"), m(r, c));
    ++r;
  }
  EXPECT_EQ(r, 2u);
}

}  // namespace
}  // namespace liwuda::ot
