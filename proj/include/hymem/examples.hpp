#pragma once

// Certificates for the two built-in examples.

#include "hymem/certificates.hpp"
#include "hymem/numerics.hpp"
#include "hymem/system.hpp"

namespace hymem {

struct Example1CertificateOptions {
  /// Right-hand side of H^T P H - P = -Q; empty means identity.
  Mat Q;
  /// Decay weighting gamma in (spectral radius of H, 1]: P solves
  /// (H/gamma)^T P (H/gamma) - P = -Q instead. 1 gives the plain equation.
  double lyapunov_decay = 1.0;
  /// Margin on the sandwich constants: c1 is scaled by (1 - s), c2 by (1 + s).
  double sandwich_safety = 0.1;
  int tau_grid = 201;
  /// Halanay q (any 0 < q < mu works since the flow identity is exact).
  double halanay_q = 1e-6;
};

/// V(x) = exp(-sigma tau) W(exp(Af (delta - tau)) x1), W(y) = y^T P y, with P
/// from the discrete Lyapunov equation for H = exp(Af delta) Ag, rho the
/// contraction factor of (H, P), sigma = min(1, ln((1 + rho) / (2 rho)) / delta)
/// and rho_hat = (1 + rho e^{sigma delta}) / 2 < 1.
struct Example1Certificate {
  Mat Af, Ag, H, P, Q;
  double spectral_radius = 0.0;
  double residual = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  double rho_hat = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  RazumikhinCertificate razumikhin;
  HalanayCertificate halanay;
};

Example1Certificate make_example1_certificate(const Example1Params& p, const Example1CertificateOptions& opts = {});

/// V(psi) = x(0,0)^2 exp(-sigma tau(0,0)) + mu * int_{-r}^0 x(s, k(s))^2 ds with
/// alpha1(s) = s^2 e^{-|sigma| delta}, alpha2(s) = s^2 (e^{|sigma| delta} + r mu)
/// and alpha3(s) = c s^2, where c defaults to `alpha3_safety` times the
/// smallest decrease rate guaranteed by the flow and jump bounds.
struct Example2Certificate {
  KrasovskiiCertificate krasovskii;
  double flow_rate = 0.0;  // min over tau of the flow decrease coefficient
  double jump_rate = 0.0;  // e^{-sigma delta} - rho^2
  double alpha3_coeff = 0.0;
};

Example2Certificate make_example2_certificate(const Example2Params& p, std::optional<double> alpha3_coeff = {},
                                              double alpha3_safety = 0.9);

/// Flow decrease coefficient m(w) = (sigma - 2a) w - mu - (b^2 / mu) w^2 at
/// w = exp(-sigma tau): D+V <= -m(w) x(0,0)^2 along the flow.
double example2_flow_rate(const Example2Params& p, double tau);

}  // namespace hymem
