#include "hymem/errors.hpp"
#include "hymem/numerics.hpp"
#include "hymem/system.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace hymem;

namespace {

Mat random_matrix(std::mt19937_64& g, int n, double scale) {
  std::normal_distribution<double> N(0.0, scale);
  Mat M(n, n);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) M(i, c) = N(g);
  return M;
}

Mat random_stable(std::mt19937_64& g, int n, double radius) {
  Mat H = random_matrix(g, n, 1.0);
  return H * (radius / spectral_radius(H));
}

// vec(P) = (I - H^T (x) H^T)^{-1} vec(Q)
Mat dlyap_kron(const Mat& H, const Mat& Q) {
  const int n = static_cast<int>(H.rows());
  const Mat HT = H.transpose();
  const Mat L = Mat::Identity(n * n, n * n) - Eigen::kroneckerProduct(HT, HT).eval();
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd p = L.partialPivLu().solve(q);
  return Eigen::Map<const Mat>(p.data(), n, n);
}

}  // namespace

TEST(Expm, ZeroDiagonalAndNilpotent) {
  EXPECT_LE((expm(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).norm(), 1e-15);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 2.0;
  const Mat E = expm(D);
  EXPECT_NEAR(E(0, 0), std::exp(1.0), 1e-14 * std::exp(1.0));
  EXPECT_NEAR(E(1, 1), std::exp(2.0), 1e-14 * std::exp(2.0));
  EXPECT_EQ(E(0, 1), 0.0);
  Mat N(2, 2);
  N << 0, 1, 0, 0;
  const Mat EN = expm(N);
  EXPECT_NEAR(EN(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(EN(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(EN(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(EN(1, 1), 1.0, 1e-15);
}

TEST(Expm, InverseIdentityOnRandomMatrices) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    const Mat M = random_matrix(g, n, 1.0);
    EXPECT_LE((expm(M) * expm(-M) - Mat::Identity(n, n)).norm(), 1e-10) << M;
  }
}

TEST(Expm, AgreesWithIndependentImplementation) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const double scale = std::pow(10.0, -3.0 + 4.0 * (trial % 10) / 9.0);  // 1e-3 .. 10
    const Mat M = random_matrix(g, n, scale);
    const Mat ref = M.exp();
    EXPECT_LE((expm(M) - ref).norm(), 1e-12 * std::max(1.0, ref.norm())) << "scale " << scale;
  }
}

TEST(Expm, SampledDataBlockMatrices) {
  const Example1Params p = Example1Params::nominal();
  EXPECT_LE((expm(p.A * p.delta) - (p.A * p.delta).exp()).norm(), 1e-13);
}

TEST(SpectralRadius, KnownValues) {
  Mat R(2, 2);
  R << 0, -1, 1, 0;  // rotation, eigenvalues +-i
  EXPECT_NEAR(spectral_radius(R), 1.0, 1e-14);
  Mat T(2, 2);
  T << 0.5, 10, 0, -0.7;
  EXPECT_NEAR(spectral_radius(T), 0.7, 1e-14);
}

TEST(DiscreteLyapunov, ScalarAndZeroCases) {
  EXPECT_TRUE((solve_discrete_lyapunov(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).norm() < 1e-15);
  Mat h(1, 1);
  h << 0.5;
  EXPECT_NEAR(solve_discrete_lyapunov(h)(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(DiscreteLyapunov, RandomStableMatricesMatchKroneckerSolve) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> U(0.05, 0.98);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 5;
    const Mat H = random_stable(g, n, U(g));
    const Mat B = random_matrix(g, n, 1.0);
    const Mat Q = B * B.transpose() + Mat::Identity(n, n);
    const Mat P = solve_discrete_lyapunov(H, Q);
    EXPECT_LE(lyapunov_residual(H, P, Q), 1e-10 * Q.norm());
    EXPECT_LE((P - P.transpose()).norm(), 1e-12 * P.norm());
    const Mat ref = dlyap_kron(H, Q);
    EXPECT_LE((P - ref).norm(), 1e-9 * ref.norm());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(P).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(DiscreteLyapunov, UnstableInputIsInfeasible) {
  Mat h(1, 1);
  h << 1.0;
  EXPECT_THROW(solve_discrete_lyapunov(h), InfeasibleError);
  Mat R(2, 2);
  R << 0, -1.2, 1.2, 0;
  EXPECT_THROW(solve_discrete_lyapunov(R), InfeasibleError);
}

TEST(Contraction, ZeroAndScaledIdentity) {
  const Mat P = Mat::Identity(3, 3) * 2.0;
  EXPECT_NEAR(contraction_factor(Mat::Zero(3, 3), P), 0.0, 1e-15);
  EXPECT_NEAR(contraction_factor(0.7 * Mat::Identity(3, 3), P), 0.49, 1e-12);
}

TEST(Contraction, MatchesGeneralizedEigenvalueAndRandomRatios) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2;
    const Mat H = random_stable(g, n, 0.9);
    const Mat P = solve_discrete_lyapunov(H);
    const double rho = contraction_factor(H, P);
    const Mat M = H.transpose() * P * H;
    const double ref = Eigen::GeneralizedSelfAdjointEigenSolver<Mat>(M, P).eigenvalues().maxCoeff();
    EXPECT_NEAR(rho, ref, 1e-9 * ref);
    double best = 0.0;
    for (int i = 0; i < (n == 2 ? 100000 : 10000); ++i) {
      Eigen::VectorXd x(n);
      for (int c = 0; c < n; ++c) x(c) = N(g);
      const double ratio = x.dot(M * x) / x.dot(P * x);
      EXPECT_LE(ratio, rho * (1 + 1e-12));
      best = std::max(best, ratio);
    }
    if (n == 2) EXPECT_NEAR(best, rho, 1e-6);
    EXPECT_LT(rho, 1.0);
  }
}

TEST(Contraction, ExampleOneMatrix) {
  const Example1Params p = Example1Params::nominal();
  const Mat H = p.H();
  const Mat P = solve_discrete_lyapunov(H);
  const double rho = contraction_factor(H, P);
  EXPECT_LT(spectral_radius(H), 1.0);
  EXPECT_GT(rho, 0.0);
  EXPECT_LT(rho, 1.0);
}
