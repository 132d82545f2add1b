#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "affect/linalg.hpp"
#include "support/oracles.hpp"

using affect::eigh;

TEST(Eigh, Identity) {
  const auto e = eigh(Eigen::MatrixXd::Identity(4, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(e.values(i), 1.0, 1e-14);
}

TEST(Eigh, DiagonalSortedWithUnitVectors) {
  Eigen::MatrixXd a = Eigen::Vector3d(3, 1, 2).asDiagonal();
  const auto e = eigh(a);
  EXPECT_NEAR(e.values(0), 1.0, 1e-14);
  EXPECT_NEAR(e.values(1), 2.0, 1e-14);
  EXPECT_NEAR(e.values(2), 3.0, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(e.vectors(2, 1), 1.0, 1e-14);
  EXPECT_NEAR(e.vectors(0, 2), 1.0, 1e-14);
}

TEST(Eigh, ReconstructionResidual) {
  std::mt19937_64 rng(11);
  for (int n : {1, 2, 8, 17, 64}) {
    const Eigen::MatrixXd a = oracle::random_symmetric(n, rng);
    const auto e = eigh(a);
    const Eigen::MatrixXd r = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((a - r).norm(), 1e-8 * a.norm()) << "n=" << n;
    const Eigen::MatrixXd orth = e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n);
    EXPECT_LE(orth.norm(), 1e-10);
  }
}

TEST(Eigh, SignConvention) {
  std::mt19937_64 rng(12);
  const auto e = eigh(oracle::random_symmetric(10, rng));
  for (Eigen::Index j = 0; j < 10; ++j) {
    Eigen::Index arg;
    e.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(e.vectors(arg, j), 0.0);
  }
}

TEST(Eigh, AnalyticTwoByTwo) {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 3;
  const auto e = eigh(a);
  const double disc = std::sqrt(5.0);
  EXPECT_NEAR(e.values(0), (5.0 - disc) / 2.0, 1e-10);
  EXPECT_NEAR(e.values(1), (5.0 + disc) / 2.0, 1e-10);
}

TEST(Eigh, AnalyticTridiagonal) {
  // Path-graph Toeplitz matrix with diagonal 2 and off-diagonal -1: eigenvalues 2 - 2 cos(j pi / (n + 1)).
  for (int n : {3, 4}) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      a(i, i) = 2.0;
      if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = -1.0;
    }
    const auto e = eigh(a);
    for (int j = 1; j <= n; ++j)
      EXPECT_NEAR(e.values(j - 1), 2.0 - 2.0 * std::cos(j * std::numbers::pi / (n + 1)), 1e-10);
  }
}

TEST(Eigh, NonSquareThrows) {
  EXPECT_THROW(eigh(Eigen::MatrixXd(2, 3)), affect::Error);
}

TEST(SmallestEigenvalue, MatchesFullSolve) {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd a = oracle::random_symmetric(12, rng);
  EXPECT_NEAR(affect::smallest_eigenvalue(a), eigh(a).values(0), 1e-12);
}
