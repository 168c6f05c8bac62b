#include "hymem/examples.hpp"

#include "hymem/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace hymem {

Example1Certificate make_example1_certificate(const Example1Params& p, const Example1CertificateOptions& opts) {
  Example1Certificate c;
  c.Af = p.Af();
  c.Ag = p.Ag();
  c.H = expm(c.Af * p.delta) * c.Ag;
  const Eigen::Index n1 = c.H.rows();
  c.Q = opts.Q.size() ? opts.Q : Mat::Identity(n1, n1);
  c.spectral_radius = spectral_radius(c.H);
  const double gamma = opts.lyapunov_decay;
  if (!(gamma > c.spectral_radius && gamma <= 1.0))
    throw PreconditionError("lyapunov_decay must lie in (spectral radius of H, 1]");
  const Mat Hs = c.H / gamma;
  c.P = solve_discrete_lyapunov(Hs, c.Q);
  c.residual = lyapunov_residual(Hs, c.P, c.Q);
  c.rho = contraction_factor(c.H, c.P);
  if (!(c.rho < 1.0)) throw InfeasibleError("contraction factor is not below one");
  c.sigma = c.rho > 0.0 ? std::min(1.0, std::log((1.0 + c.rho) / (2.0 * c.rho)) / p.delta) : 1.0;
  c.rho_hat = 0.5 * (1.0 + c.rho * std::exp(c.sigma * p.delta));

  const Mat Af = c.Af, P = c.P;
  const double sigma = c.sigma, delta = p.delta;
  const int n = static_cast<int>(n1) + 1;
  const int ti = n - 1;

  // Sandwich constants: e^{-sigma tau} E^T P E between c1 I and c2 I on [0, delta].
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < opts.tau_grid; ++i) {
    const double tau = delta * i / (opts.tau_grid - 1);
    const Mat E = expm(Af * (delta - tau));
    Eigen::SelfAdjointEigenSolver<Mat> es(E.transpose() * P * E);
    lo = std::min(lo, std::exp(-sigma * tau) * es.eigenvalues().minCoeff());
    hi = std::max(hi, std::exp(-sigma * tau) * es.eigenvalues().maxCoeff());
  }
  c.c1 = (1.0 - opts.sandwich_safety) * lo;
  c.c2 = (1.0 + opts.sandwich_safety) * hi;

  auto V = [Af, P, sigma, delta, ti](const Vec& x) {
    const double tau = x(ti);
    const Vec y = expm(Af * (delta - tau)) * x.head(ti);
    return std::exp(-sigma * tau) * y.dot(P * y);
  };
  auto gradV = [Af, P, sigma, delta, ti](const Vec& x) {
    const double tau = x(ti);
    const Mat E = expm(Af * (delta - tau));
    const Vec y = E * x.head(ti);
    const double w = std::exp(-sigma * tau);
    const double v = w * y.dot(P * y);
    Vec g(ti + 1);
    g.head(ti) = 2.0 * w * E.transpose() * (P * y);
    g(ti) = -sigma * v - 2.0 * w * y.dot(P * (Af * y));
    return g;
  };
  const double c1 = c.c1, c2 = c.c2, rho_hat = c.rho_hat;

  RazumikhinCertificate& r = c.razumikhin;
  r.name = "example1-razumikhin";
  r.V = V;
  r.gradV = gradV;
  r.alpha1 = [c1](double s) { return c1 * s * s; };
  r.alpha2 = [c2](double s) { return c2 * s * s; };
  r.alpha3 = [sigma](double v) { return 0.5 * sigma * v; };
  r.p = [](double v) { return 2.0 * v; };
  r.rho = [rho_hat](double v) { return rho_hat * v; };

  HalanayCertificate& h = c.halanay;
  h.name = "example1-halanay";
  h.V = V;
  h.gradV = gradV;
  h.alpha1 = r.alpha1;
  h.alpha2 = r.alpha2;
  h.mu = sigma;
  h.q = opts.halanay_q;
  h.rho = rho_hat;
  return c;
}

double example2_flow_rate(const Example2Params& p, double tau) {
  const double w = std::exp(-p.sigma * tau);
  const double quad = p.mu > 0.0 ? (p.b * p.b / p.mu) * w * w : (p.b == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return (p.sigma - 2.0 * p.a) * w - p.mu - quad;
}

Example2Certificate make_example2_certificate(const Example2Params& p, std::optional<double> alpha3_coeff,
                                              double alpha3_safety) {
  Example2Certificate c;
  // m is concave in w and w is monotone in tau, so its minimum over
  // tau in [0, delta] sits at an endpoint.
  c.flow_rate = std::min(example2_flow_rate(p, 0.0), example2_flow_rate(p, p.delta));
  c.jump_rate = std::exp(-p.sigma * p.delta) - p.rho * p.rho;
  c.alpha3_coeff = alpha3_coeff ? *alpha3_coeff : alpha3_safety * std::min(c.flow_rate, c.jump_rate);
  if (!(c.alpha3_coeff > 0.0))
    throw CertificateError("Example 2 parameters give no positive decrease rate (flow " + std::to_string(c.flow_rate) +
                           ", jump " + std::to_string(c.jump_rate) + ")");

  const double sigma = p.sigma, mu = p.mu, r = p.r, delta = p.delta, k3 = c.alpha3_coeff;
  const double e = std::exp(std::abs(sigma) * delta);
  KrasovskiiCertificate& k = c.krasovskii;
  k.name = "example2-krasovskii";
  k.V = [sigma, mu, r](const HybridMemoryArc& phi) {
    const Vec x0 = phi.head();
    const double integral = integrate_envelope(phi, -r, 0.0, [](const Vec& z) { return z(0) * z(0); });
    return x0(0) * x0(0) * std::exp(-sigma * x0(1)) + mu * integral;
  };
  k.alpha1 = [e](double s) { return s * s / e; };
  k.alpha2 = [e, r, mu](double s) { return s * s * (e + r * mu); };
  k.alpha3 = [k3](double s) { return k3 * s * s; };
  return c;
}

}  // namespace hymem
