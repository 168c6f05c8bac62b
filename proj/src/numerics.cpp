#include "hymem/numerics.hpp"

#include "hymem/errors.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

namespace hymem {

namespace {

void require_square(const Mat& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0) throw PreconditionError(std::string(what) + " must be a nonempty square matrix");
  if (!M.allFinite()) throw PreconditionError(std::string(what) + " has non-finite entries");
}

double norm1(const Mat& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

// Pade numerator U and denominator V pieces for degrees 3..9.
template <std::size_t N>
void pade_low(const Mat& A, const std::array<double, N>& b, Mat& U, Mat& V) {
  const Mat I = Mat::Identity(A.rows(), A.cols());
  const Mat A2 = A * A;
  Mat odd = b[1] * I;
  Mat even = b[0] * I;
  Mat pw = I;
  for (std::size_t k = 1; 2 * k < N; ++k) {
    pw = pw * A2;
    even += b[2 * k] * pw;
    if (2 * k + 1 < N) odd += b[2 * k + 1] * pw;
  }
  U = A * odd;
  V = even;
}

}  // namespace

Mat expm(const Mat& M) {
  require_square(M, "expm argument");
  const Eigen::Index n = M.rows();
  const Mat I = Mat::Identity(n, n);
  const double nrm = norm1(M);

  static constexpr std::array<double, 4> b3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static constexpr std::array<double, 10> b9{17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                             2162160.,     110880.,     3960.,       90.,        1.};
  Mat U, V;
  if (nrm <= 1.495585217958292e-2) {
    pade_low(M, b3, U, V);
  } else if (nrm <= 2.539398330063230e-1) {
    pade_low(M, b5, U, V);
  } else if (nrm <= 9.504178996162932e-1) {
    pade_low(M, b7, U, V);
  } else if (nrm <= 2.097847961257068) {
    pade_low(M, b9, U, V);
  } else {
    const double theta13 = 5.371920351148152;
    int s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
    const Mat A = M / std::ldexp(1.0, s);
    static constexpr std::array<double, 14> b{64764752532480000., 32382376266240000., 7771770303897600.,
                                              1187353796428800.,  129060195264000.,   10559470521600.,
                                              670442572800.,      33522128640.,       1323241920.,
                                              40840800.,          960960.,            16380.,
                                              182.,               1.};
    const Mat A2 = A * A;
    const Mat A4 = A2 * A2;
    const Mat A6 = A4 * A2;
    U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    Mat R = (V - U).partialPivLu().solve(V + U);
    for (int k = 0; k < s; ++k) R = R * R;
    return R;
  }
  return (V - U).partialPivLu().solve(V + U);
}

double spectral_radius(const Mat& H) {
  require_square(H, "matrix");
  Eigen::EigenSolver<Mat> es(H, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat solve_discrete_lyapunov(const Mat& H, const Mat& Q) {
  require_square(H, "H");
  require_square(Q, "Q");
  if (Q.rows() != H.rows()) throw PreconditionError("H and Q dimensions differ");
  const double sr = spectral_radius(H);
  if (!(sr < 1.0))
    throw InfeasibleError("discrete Lyapunov equation infeasible: spectral radius " + std::to_string(sr) + " >= 1");
  const Eigen::Index n = H.rows();
  // vec(H^T P H) = (H^T kron H^T) vec(P) for column-major vec.
  const Mat Ht = H.transpose();
  Mat K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = Ht(i, j) * Ht;
  const Mat Asys = Mat::Identity(n * n, n * n) - K;
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  const Eigen::VectorXd p = Asys.partialPivLu().solve(q);
  Mat P = Eigen::Map<const Mat>(p.data(), n, n);
  P = 0.5 * (P + P.transpose()).eval();
  return P;
}

Mat solve_discrete_lyapunov(const Mat& H) { return solve_discrete_lyapunov(H, Mat::Identity(H.rows(), H.cols())); }

double lyapunov_residual(const Mat& H, const Mat& P, const Mat& Q) {
  return (H.transpose() * P * H - P + Q).norm();
}

double contraction_factor(const Mat& H, const Mat& P, const PowerIterationOptions& opts) {
  require_square(H, "H");
  require_square(P, "P");
  if (P.rows() != H.rows()) throw PreconditionError("H and P dimensions differ");
  if ((P - P.transpose()).norm() > 1e-10 * std::max(1.0, P.norm())) throw PreconditionError("P must be symmetric");
  Eigen::LLT<Mat> llt(P);
  if (llt.info() != Eigen::Success) throw PreconditionError("P is not positive definite");
  const Eigen::Index n = H.rows();
  // M = L^{-1} H^T P H L^{-T}, symmetric positive semidefinite.
  const Mat L = llt.matrixL();
  const Mat HL = H * L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(n, n));
  const Mat M = HL.transpose() * P * HL;
  const double scale = M.norm();
  if (scale == 0.0) return 0.0;

  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
  v.normalize();
  double lambda = v.dot(M * v);
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::VectorXd w = M * v;
    const double wn = w.norm();
    if (wn == 0.0) {
      // start vector in the null space; restart along a coordinate axis
      v = Eigen::VectorXd::Unit(n, it % n);
      continue;
    }
    v = w / wn;
    const double next = v.dot(M * v);
    const double resid = (M * v - next * v).norm();
    const bool done = std::abs(next - lambda) <= opts.tol * scale && resid <= std::sqrt(opts.tol) * scale;
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace hymem
