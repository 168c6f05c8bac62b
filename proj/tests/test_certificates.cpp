#include "hymem/certificates.hpp"
#include "hymem/errors.hpp"
#include "hymem/examples.hpp"
#include "hymem/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace hymem;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

HybridSystem decay_system(double memory) {
  LinearDelaySpec c;
  c.dimension = 1;
  c.memory_size = memory;
  c.A0 = -Mat::Identity(1, 1);
  return build_linear_delay_system(c);
}

HalanayCertificate scalar_halanay() {
  HalanayCertificate h;
  h.V = [](const Vec& x) { return x(0) * x(0); };
  h.gradV = [](const Vec& x) { return Vec::Constant(1, 2 * x(0)); };
  h.alpha1 = [](double s) { return s * s; };
  h.alpha2 = [](double s) { return s * s; };
  h.mu = 2.0;
  h.q = 1.0;
  h.rho = 0.5;
  return h;
}

SamplerOptions samples(std::size_t n, std::uint64_t seed = 0) {
  SamplerOptions o;
  o.count = n;
  o.seed = seed;
  return o;
}

CheckOptions threads(unsigned n) {
  CheckOptions o;
  o.threads = n;
  return o;
}

}  // namespace

TEST(Screening, RazumikhinRejectsNonContractingRho) {
  const HybridSystem sys = build_example1(Example1Params::nominal());
  RazumikhinCertificate c = make_example1_certificate(Example1Params::nominal()).razumikhin;
  EXPECT_NO_THROW(screen_certificate(c, sys.spec));
  c.rho = [](double r) { return r; };
  EXPECT_THROW(screen_certificate(c, sys.spec), CertificateError);
  const ArcSampler sampler(sys.spec, samples(10));
  EXPECT_THROW(check_razumikhin(sys.spec, sys.target, c, sampler), CertificateError);
}

TEST(Screening, RazumikhinRejectsBadPAndGradient) {
  const HybridSystem sys = build_example1(Example1Params::nominal());
  RazumikhinCertificate c = make_example1_certificate(Example1Params::nominal()).razumikhin;
  c.p = [](double r) { return r; };
  EXPECT_THROW(screen_certificate(c, sys.spec), CertificateError);
  c = make_example1_certificate(Example1Params::nominal()).razumikhin;
  const GradFn good = c.gradV;
  c.gradV = [good](const Vec& x) { return Vec(1.01 * good(x)); };
  EXPECT_THROW(screen_certificate(c, sys.spec), CertificateError);
}

TEST(Screening, HalanayConstants) {
  const HybridSystem sys = decay_system(1.0);
  HalanayCertificate h = scalar_halanay();
  EXPECT_NO_THROW(screen_certificate(h, sys.spec));
  h.q = 2.0;
  EXPECT_THROW(screen_certificate(h, sys.spec), CertificateError);
  h = scalar_halanay();
  h.rho = 1.0;
  EXPECT_THROW(screen_certificate(h, sys.spec), CertificateError);
  h = scalar_halanay();
  h.alpha2 = [](double s) { return 0.5 * s * s; };  // below alpha1
  EXPECT_THROW(screen_certificate(h, sys.spec), CertificateError);
}

TEST(Sampler, ArcsAreInMemoryClassAndRespectTheirRegion) {
  for (const HybridSystem& sys : {build_example1(Example1Params::nominal()), build_example2(Example2Params::case_II())}) {
    const ArcSampler sampler(sys.spec, samples(300, 7));
    int counts[3] = {0, 0, 0};
    for (std::uint64_t i = 0; i < sampler.count(); ++i) {
      const auto s = sampler.sample(i);
      ASSERT_TRUE(s.has_value()) << i;
      EXPECT_EQ(s->index, i);
      EXPECT_EQ(s->seed, ArcSampler::sub_seed(7, i));
      EXPECT_EQ(static_cast<int>(s->region), static_cast<int>(i % 3));
      EXPECT_EQ(s->mode, i / 3 % 2 == 0 ? SampleMode::Reachable : SampleMode::Cover);
      EXPECT_TRUE(check_memory_class(s->arc.arc(), sys.spec.memory_size).ok);
      if (s->region == Region::C) EXPECT_TRUE(sys.spec.in_C(s->arc));
      if (s->region == Region::D) EXPECT_TRUE(sys.spec.in_D(s->arc));
      ++counts[static_cast<int>(s->region)];
    }
    EXPECT_EQ(counts[0], 100);
    EXPECT_EQ(counts[1], 100);
    EXPECT_EQ(counts[2], 100);
  }
}

TEST(Sampler, SampleDependsOnlyOnSeedAndIndex) {
  const HybridSystem sys = build_example1(Example1Params::nominal());
  const ArcSampler a(sys.spec, samples(100, 3)), b(sys.spec, samples(5000, 3));
  for (std::uint64_t i : {0u, 1u, 2u, 17u, 99u}) {
    const auto x = a.sample(i), y = b.sample(i);
    ASSERT_TRUE(x && y);
    ASSERT_EQ(x->arc.arc().segments().size(), y->arc.arc().segments().size());
    for (std::size_t k = 0; k < x->arc.arc().segments().size(); ++k)
      EXPECT_EQ(x->arc.arc().segments()[k].values, y->arc.arc().segments()[k].values);
  }
  EXPECT_NE(ArcSampler::sub_seed(3, 0), ArcSampler::sub_seed(4, 0));
}

TEST(Halanay, ScalarDecayHasNoViolations) {
  const HybridSystem sys = decay_system(1.0);
  const ArcSampler sampler(sys.spec, samples(600));
  const CheckReport r = check_halanay(sys.spec, sys.target, scalar_halanay(), sampler, threads(4));
  EXPECT_EQ(r.violation_count, 0u);
  EXPECT_GT(r.samples, 0u);
  EXPECT_EQ(r.samples + r.skipped, 600u);
  EXPECT_LE(r.worst_excess, 0.0);
}

TEST(Halanay, ExampleOneCertificateHasNoFlowViolations) {
  const Example1Params p = Example1Params::nominal();
  const HybridSystem sys = build_example1(p);
  const Example1Certificate cert = make_example1_certificate(p);
  const ArcSampler sampler(sys.spec, samples(900));
  const CheckReport r = check_halanay(sys.spec, sys.target, cert.halanay, sampler, threads(4));
  for (const Violation& v : r.violations) EXPECT_EQ(v.condition, "iii");
}

TEST(DplusV, QuadraticAlongDecay) {
  const HybridSystem sys = decay_system(0.0);
  const Functional V = [](const HybridMemoryArc& phi) { return phi.head().squaredNorm(); };
  const HybridMemoryArc one = HybridMemoryArc::constant(Vec::Ones(1), 0.0, 1.0);
  const double h = 1e-4;
  EXPECT_NEAR(dplus_V(sys.spec, V, one, h), -2.0, 4 * h);
  const Functional c = [](const HybridMemoryArc&) { return 3.5; };
  EXPECT_EQ(dplus_V(sys.spec, c, one, h), 0.0);
}

TEST(DplusV, ExampleTwoFunctionalMatchesFlowIdentity) {
  const Example2Params p = Example2Params::case_II();
  const HybridSystem sys = build_example2(p);
  const Example2Certificate cert = make_example2_certificate(p);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double x0 = trial == 0 ? 1.0 : 4.0 * U(g) - 2.0;
    const double tau = trial == 0 ? 0.0 : 0.09 * U(g);
    const double hist = trial == 0 ? 1.0 : 4.0 * U(g) - 2.0;
    // history `hist` before 0, x0 at 0: a jump-free arc with one level
    const HybridMemoryArc phi = HybridMemoryArc::from_function(
        [&](double s) { return vec2(s < 0.0 ? hist + (x0 - hist) * std::max(0.0, 1 + s / 0.01) : x0, tau + s); }, 2,
        sys.spec.memory_size, 0.001);
    const double xr = delayed_value(phi, -p.r)(0);
    const double w = std::exp(-p.sigma * tau);
    const double rhs = 2 * x0 * w * (p.a * x0 + p.b * xr) - p.sigma * x0 * x0 * w + p.mu * x0 * x0 - p.mu * xr * xr;
    EXPECT_NEAR(dplus_V(sys.spec, cert.krasovskii.V, phi, 1e-5), rhs, 1e-3) << "trial " << trial;
  }
}

TEST(DplusV, FiniteDifferenceErrorIsFirstOrder) {
  const Example2Params p = Example2Params::case_II();
  const HybridSystem sys = build_example2(p);
  const Example2Certificate cert = make_example2_certificate(p);
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double x0 = 0.5 + U(g), tau = 0.05 * U(g);
    const HybridMemoryArc phi = HybridMemoryArc::constant(vec2(x0, tau), sys.spec.memory_size, 1e-3);
    const double h = 4e-3;
    const double d1 = dplus_V(sys.spec, cert.krasovskii.V, phi, h);
    const double d2 = dplus_V(sys.spec, cert.krasovskii.V, phi, h / 2);
    const double d3 = dplus_V(sys.spec, cert.krasovskii.V, phi, h / 4);
    const double ratio = (d1 - d2) / (d2 - d3);
    EXPECT_GE(ratio, 1.5) << trial;
    EXPECT_LE(ratio, 2.5) << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(DplusV, LeavingCImmediatelyIsAnError) {
  const HybridSystem sys = build_example2(Example2Params::case_II());
  const Functional V = [](const HybridMemoryArc& phi) { return phi.head()(0); };
  const HybridMemoryArc at_edge = HybridMemoryArc::constant(vec2(1.0, 0.1), sys.spec.memory_size, 1e-3);
  EXPECT_THROW(dplus_V(sys.spec, V, at_edge, 1e-3), PreconditionError);
  // close to the edge the step shrinks to the exit time
  const HybridMemoryArc near = HybridMemoryArc::constant(vec2(1.0, 0.1 - 5e-4), sys.spec.memory_size, 1e-3);
  EXPECT_NO_THROW(dplus_V(sys.spec, V, near, 1e-3));
}

TEST(Krasovskii, ExampleTwoCasesHaveNoViolations) {
  for (const Example2Params& p : {Example2Params::case_I(), Example2Params::case_II()}) {
    const HybridSystem sys = build_example2(p);
    const Example2Certificate cert = make_example2_certificate(p);
    EXPECT_GT(cert.flow_rate, 0.0);
    EXPECT_GT(cert.jump_rate, 0.0);
    const ArcSampler sampler(sys.spec, samples(1500, 1));
    const CheckReport r = check_krasovskii(sys.spec, sys.target, cert.krasovskii, sampler, threads(4));
    EXPECT_EQ(r.violation_count, 0u) << (r.violations.empty() ? "" : r.violations.front().condition);
    EXPECT_EQ(r.skipped, 0u);
    EXPECT_GT(r.flow_bound, 0.0);
  }
}

TEST(Krasovskii, LongJumpIntervalBreaksTheJumpCondition) {
  Example2Params p = Example2Params::case_II();
  const Example2Certificate nominal = make_example2_certificate(p);
  p.delta = 0.4;  // now rho > e^{-sigma delta}
  ASSERT_GT(p.rho, std::exp(-p.sigma * p.delta));
  const HybridSystem sys = build_example2(p);
  const Example2Certificate cert = make_example2_certificate(p, nominal.alpha3_coeff);
  const ArcSampler sampler(sys.spec, samples(600, 2));
  const CheckReport r = check_krasovskii(sys.spec, sys.target, cert.krasovskii, sampler, threads(4));
  EXPECT_GT(r.violation_count, 0u);
  bool jump = false;
  for (const Violation& v : r.violations) jump = jump || v.condition == "iii";
  EXPECT_TRUE(jump);
}

TEST(Reports, WitnessesReproduceTheirViolations) {
  Example1Params p = Example1Params::nominal();
  const Example1Certificate cert = make_example1_certificate(p);
  p.K = Mat::Zero(1, 2);  // open loop
  const HybridSystem sys = build_example1(p);
  const ArcSampler sampler(sys.spec, samples(900, 4));
  const CheckOptions opts = threads(4);
  const CheckReport r = check_razumikhin(sys.spec, sys.target, cert.razumikhin, sampler, opts);
  ASSERT_GT(r.violation_count, 0u);
  EXPECT_GT(r.worst_excess, 0.0);
  EXPECT_LT(r.worst_margin, -r.slack);
  int witnesses = 0;
  for (const Violation& v : r.violations) {
    if (!v.witness) continue;
    ++witnesses;
    EXPECT_TRUE(check_memory_class(v.witness->arc(), sys.spec.memory_size).ok);
    bool reproduced = false;
    for (const ConditionValue& c : evaluate_razumikhin(sys.spec, sys.target, cert.razumikhin, *v.witness, opts))
      if (c.condition == v.condition && c.lhs == v.lhs && c.rhs == v.rhs) reproduced = reproduced || c.violated();
    EXPECT_TRUE(reproduced) << "sample " << v.index;
    const auto again = sampler.sample(v.index);
    ASSERT_TRUE(again);
    EXPECT_EQ(again->seed, v.seed);
  }
  EXPECT_GT(witnesses, 0);
}

TEST(Reports, ThreadCountDoesNotChangeTheReport) {
  Example1Params p = Example1Params::nominal();
  const Example1Certificate cert = make_example1_certificate(p);
  p.K = Mat::Zero(1, 2);
  const HybridSystem sys = build_example1(p);
  const ArcSampler sampler(sys.spec, samples(300, 9));
  const CheckReport a = check_razumikhin(sys.spec, sys.target, cert.razumikhin, sampler, threads(1));
  const CheckReport b = check_razumikhin(sys.spec, sys.target, cert.razumikhin, sampler, threads(8));
  EXPECT_EQ(a.violation_count, b.violation_count);
  EXPECT_EQ(a.conditions_checked, b.conditions_checked);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].index, b.violations[i].index);
    EXPECT_EQ(a.violations[i].lhs, b.violations[i].lhs);
  }
}

TEST(Reports, VerdictsAreInvariantUnderScalingOfV) {
  const Example1Params p = Example1Params::nominal();
  const HybridSystem sys = build_example1(p);
  const RazumikhinCertificate c = make_example1_certificate(p).razumikhin;
  const double k = 4.0;  // a power of two keeps the scaling exact
  RazumikhinCertificate s = c;
  s.V = [c, k](const Vec& x) { return k * c.V(x); };
  s.gradV = [c, k](const Vec& x) { return Vec(k * c.gradV(x)); };
  s.alpha1 = [c, k](double r) { return k * c.alpha1(r); };
  s.alpha2 = [c, k](double r) { return k * c.alpha2(r); };
  s.alpha3 = [c, k](double r) { return k * c.alpha3(r / k); };
  s.p = [c, k](double r) { return k * c.p(r / k); };
  s.rho = [c, k](double r) { return k * c.rho(r / k); };
  CheckOptions o;
  o.slack = 0.0;
  const ArcSampler sampler(sys.spec, samples(600, 11));
  int violated = 0;
  for (std::uint64_t i = 0; i < sampler.count(); ++i) {
    const auto a = sampler.sample(i);
    ASSERT_TRUE(a);
    const auto x = evaluate_razumikhin(sys.spec, sys.target, c, a->arc, o);
    const auto y = evaluate_razumikhin(sys.spec, sys.target, s, a->arc, o);
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t q = 0; q < x.size(); ++q) {
      EXPECT_EQ(x[q].condition, y[q].condition);
      EXPECT_EQ(x[q].violated(), y[q].violated()) << "sample " << i << " " << x[q].condition;
      violated += x[q].violated();
    }
  }
  EXPECT_GT(violated, 0);  // both verdicts occur in the sample
}

TEST(Conclusions, VbarMonotoneOnCertifiedAndOpenLoopRuns) {
  Example1Params p = Example1Params::nominal();
  const Example1Certificate cert = make_example1_certificate(p);
  const HybridSystem sys = build_example1(p);
  SimOptions o;
  o.t_max = 5.0;
  Vec v(4);
  v << 1.0, -0.5, 0.2, 0.0;
  const HybridMemoryArc init = HybridMemoryArc::constant(v, sys.spec.memory_size, 0.004);
  const Trajectory tr = simulate(sys.spec, init, o);
  const double v0 = vbar(init, cert.razumikhin.V);
  const MonotoneResult m = check_vbar_monotone(tr, cert.razumikhin.V, 1e-6 * v0);
  EXPECT_TRUE(m.ok) << m.max_increase;
  EXPECT_GT(m.points, 1000u);

  p.K = Mat::Zero(1, 2);
  const HybridSystem open = build_example1(p);
  const Trajectory bad = simulate(open.spec, init, o);
  const MonotoneResult mb = check_vbar_monotone(bad, cert.razumikhin.V, 1e-6 * v0);
  EXPECT_FALSE(mb.ok);
  ASSERT_TRUE(mb.first_violation);
  EXPECT_GT(mb.after, mb.before);

  const Trajectory zero = simulate(sys.spec, HybridMemoryArc::constant(Vec::Zero(4), sys.spec.memory_size, 0.004), o);
  EXPECT_TRUE(check_vbar_monotone(zero, cert.razumikhin.V, 0.0).ok);
}

TEST(Conclusions, KLEnvelope) {
  const Example1Params p = Example1Params::nominal();
  const HybridSystem sys = build_example1(p);
  SimOptions o;
  o.t_max = 15.0;
  std::vector<Trajectory> trajs;
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  for (int i = 0; i < 8; ++i) {
    Vec v(4);
    v << U(g), U(g), U(g), 0.0;
    trajs.push_back(simulate(sys.spec, HybridMemoryArc::constant(v, sys.spec.memory_size, 0.004), o));
  }
  const KLReport r = check_kl_envelope(trajs, sys.target, {1e-1, 1e-2}, {0.25, 0.5, 1.0});
  EXPECT_TRUE(r.bounded);
  EXPECT_TRUE(r.attractive) << r.message;
  EXPECT_EQ(r.table.size(), 6u);
  std::size_t groups = 0;
  for (const KLRow& row : r.table) {
    EXPECT_TRUE(row.ok);
    if (row.trajectories == 0) continue;
    EXPECT_LT(row.T, row.horizon);
    ++groups;
  }
  EXPECT_GE(groups, 4u);
  for (std::size_t i = 1; i < r.gamma.size(); ++i) EXPECT_GE(r.gamma[i], r.gamma[i - 1]);

  const Trajectory zero = simulate(sys.spec, HybridMemoryArc::constant(Vec::Zero(4), sys.spec.memory_size, 0.004), o);
  for (const HybridTime& q : zero.forward_points()) EXPECT_EQ(sys.target.distW(zero.arc.eval(q.t, q.j)), 0.0);

  const HybridSystem other = build_example2(Example2Params::case_II());
  trajs.push_back(simulate(other.spec, HybridMemoryArc::constant(vec2(1.0, 0.0), other.spec.memory_size, 0.01), o));
  EXPECT_THROW(check_kl_envelope(trajs, sys.target, {1e-1}, {1.0}), PreconditionError);
}

TEST(Conclusions, KLEnvelopeFailsForOpenLoop) {
  Example1Params p = Example1Params::nominal();
  p.K = Mat::Zero(1, 2);
  const HybridSystem sys = build_example1(p);
  SimOptions o;
  o.t_max = 10.0;
  Vec v(4);
  v << 0.1, 0.1, 0.0, 0.0;
  const std::vector<Trajectory> trajs{simulate(sys.spec, HybridMemoryArc::constant(v, sys.spec.memory_size, 0.004), o)};
  const KLReport r = check_kl_envelope(trajs, sys.target, {1e-1}, {1.0});
  EXPECT_FALSE(r.attractive);
  EXPECT_FALSE(r.ok());
}

TEST(ExampleCertificates, ExampleOneConstants) {
  const Example1Certificate c = make_example1_certificate(Example1Params::nominal());
  EXPECT_LT(c.spectral_radius, 1.0);
  EXPECT_LE(c.residual, 1e-10 * c.Q.norm());
  EXPECT_GT(c.rho, 0.0);
  EXPECT_LT(c.rho, 1.0);
  EXPECT_NEAR(c.sigma, std::min(1.0, std::log((1 + c.rho) / (2 * c.rho)) / 0.2), 1e-15);
  EXPECT_NEAR(c.rho_hat, (1 + c.rho * std::exp(c.sigma * 0.2)) / 2, 1e-15);
  EXPECT_LT(c.rho_hat, 1.0);
  EXPECT_GT(c.c1, 0.0);
  EXPECT_GE(c.c2, c.c1);
  Example1CertificateOptions o;
  o.lyapunov_decay = 0.6;
  const Example1Certificate d = make_example1_certificate(Example1Params::nominal(), o);
  EXPECT_LT(d.rho, c.rho);
  o.lyapunov_decay = 0.5 * c.spectral_radius;
  EXPECT_THROW(make_example1_certificate(Example1Params::nominal(), o), PreconditionError);
}

TEST(ExampleCertificates, ExampleTwoRates) {
  const Example2Params p = Example2Params::case_II();
  const Example2Certificate c = make_example2_certificate(p);
  EXPECT_NEAR(c.jump_rate, std::exp(-p.sigma * p.delta) - p.rho * p.rho, 1e-15);
  // m(w) is concave in w, so the minimum over tau sits at an end of [0, delta]
  const double m0 = example2_flow_rate(p, 0.0), m1 = example2_flow_rate(p, p.delta);
  EXPECT_NEAR(c.flow_rate, std::min(m0, m1), 1e-12);
  EXPECT_NEAR(m0, (p.sigma - 2 * p.a) - p.mu - p.b * p.b / p.mu, 1e-15);
  EXPECT_NEAR(c.alpha3_coeff, 0.9 * std::min(c.flow_rate, c.jump_rate), 1e-15);
}
