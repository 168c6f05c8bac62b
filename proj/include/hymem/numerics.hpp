#pragma once

// Dense matrix routines for the sampled-data certificate: matrix exponential,
// discrete Lyapunov equation, and the quadratic-form contraction factor.

#include <Eigen/Dense>

namespace hymem {

using Mat = Eigen::MatrixXd;

/// Matrix exponential by scaling and squaring with a diagonal Pade core
/// (degree 3, 5, 7, 9 or 13 picked from the 1-norm).
Mat expm(const Mat& M);

/// Largest eigenvalue modulus.
double spectral_radius(const Mat& H);

/// Solves H^T P H - P = -Q. Throws InfeasibleError when the spectral radius of
/// H is not below one.
Mat solve_discrete_lyapunov(const Mat& H, const Mat& Q);
Mat solve_discrete_lyapunov(const Mat& H);

/// Frobenius norm of H^T P H - P + Q.
double lyapunov_residual(const Mat& H, const Mat& P, const Mat& Q);

struct PowerIterationOptions {
  double tol = 1e-12;
  int max_iter = 100000;
};

/// Smallest rho with x^T H^T P H x <= rho x^T P x for all x: the top eigenvalue
/// of L^{-1} H^T P H L^{-T} with P = L L^T, by power iteration.
double contraction_factor(const Mat& H, const Mat& P, const PowerIterationOptions& opts = {});

}  // namespace hymem
