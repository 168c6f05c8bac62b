#include "hymem/certificates.hpp"

#include "hymem/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace hymem {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Portable draws on top of mt19937_64 (the standard distributions are
// implementation-defined, which would break cross-platform reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void screen_alphas(const ScalarFn& a1, const ScalarFn& a2, const ScalarFn* a3, const ValidationGrid& grid) {
  const auto rs = grid.values();
  double prev1 = 0.0, prev2 = 0.0;
  for (double r : rs) {
    const double v1 = a1(r), v2 = a2(r);
    if (!(v1 > 0.0) || !(v2 > 0.0)) throw CertificateError("alpha1/alpha2 must be positive at r = " + num(r));
    if (!(v1 > prev1) || !(v2 > prev2)) throw CertificateError("alpha1/alpha2 must increase (fails at r = " + num(r) + ")");
    if (v1 > v2) throw CertificateError("alpha1 exceeds alpha2 at r = " + num(r));
    if (a3 && !((*a3)(r) > 0.0)) throw CertificateError("alpha3 must be positive at r = " + num(r));
    prev1 = v1;
    prev2 = v2;
  }
  if (a1(0.0) != 0.0 || a2(0.0) != 0.0) throw CertificateError("alpha1 and alpha2 must vanish at 0");
}

void screen_gradient(const PointFn& V, const GradFn& gradV, const SystemSpec& spec, std::uint64_t seed, int points) {
  Rng rng(splitmix64(seed ^ 0x6772616456ULL));
  const int n = spec.n;
  for (int i = 0; i < points; ++i) {
    Vec x(n);
    const double scale = std::exp(rng.uniform(std::log(1e-2), std::log(10.0)));
    for (int c = 0; c < n; ++c) x(c) = scale * rng.normal();
    if (spec.clock) x(spec.clock->index) = rng.uniform(0.0, spec.clock->period);
    const Vec g = gradV(x);
    if (g.size() != n) throw CertificateError("gradV returned a vector of the wrong size");
    Vec fd(n);
    for (int c = 0; c < n; ++c) {
      const double h = 1e-5 * std::max(1.0, std::abs(x(c)));
      Vec xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      fd(c) = (V(xp) - V(xm)) / (2.0 * h);
    }
    const double err = (fd - g).norm();
    if (!(err <= 1e-6 * g.norm() + 1e-12 * (1.0 + std::abs(V(x)))))
      throw CertificateError("gradV disagrees with finite differences of V (relative error " +
                             num(err / std::max(g.norm(), 1e-300)) + ")");
  }
}

}  // namespace

std::vector<double> ValidationGrid::values() const {
  if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw PreconditionError("invalid validation grid");
  std::vector<double> out(points);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i) out[i] = std::exp(a + (b - a) * i / (points - 1));
  return out;
}

void screen_certificate(const RazumikhinCertificate& c, const SystemSpec& spec, const ValidationGrid& grid,
                        std::uint64_t seed, int gradient_points) {
  if (!c.V || !c.gradV || !c.alpha1 || !c.alpha2 || !c.alpha3 || !c.p || !c.rho)
    throw CertificateError("Razumikhin certificate is missing a function");
  for (double r : grid.values()) {
    if (!(c.p(r) > r)) throw CertificateError("p(r) > r fails at r = " + num(r));
    const double rr = c.rho(r);
    if (!(rr < r) || rr < 0.0) throw CertificateError("0 <= rho(r) < r fails at r = " + num(r));
  }
  screen_alphas(c.alpha1, c.alpha2, &c.alpha3, grid);
  screen_gradient(c.V, c.gradV, spec, seed, gradient_points);
}

void screen_certificate(const HalanayCertificate& c, const SystemSpec& spec, const ValidationGrid& grid,
                        std::uint64_t seed, int gradient_points) {
  if (!c.V || !c.gradV || !c.alpha1 || !c.alpha2) throw CertificateError("Halanay certificate is missing a function");
  if (!(c.q > 0.0) || !(c.mu > c.q)) throw CertificateError("Halanay constants need mu > q > 0");
  if (!(c.rho > 0.0) || !(c.rho < 1.0)) throw CertificateError("Halanay constant rho must lie in (0, 1)");
  screen_alphas(c.alpha1, c.alpha2, nullptr, grid);
  screen_gradient(c.V, c.gradV, spec, seed, gradient_points);
}

void screen_certificate(const KrasovskiiCertificate& c, const ValidationGrid& grid) {
  if (!c.V || !c.alpha1 || !c.alpha2 || !c.alpha3) throw CertificateError("Krasovskii certificate is missing a function");
  screen_alphas(c.alpha1, c.alpha2, &c.alpha3, grid);
}

// ---------------------------------------------------------------- sampler

std::string to_string(Region r) {
  switch (r) {
    case Region::C: return "C";
    case Region::D: return "D";
    case Region::GplusD: return "G+(D)";
  }
  return "?";
}

std::string to_string(SampleMode m) { return m == SampleMode::Reachable ? "reachable" : "cover"; }

std::uint64_t ArcSampler::sub_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

ArcSampler::ArcSampler(const SystemSpec& spec, SamplerOptions opts) : spec_(spec), opts_(opts) {
  spec_.validate();
  if (!opts_.reachable && !opts_.cover) throw PreconditionError("sampler needs at least one mode");
  if (!(opts_.amplitude_min > 0.0) || !(opts_.amplitude_max >= opts_.amplitude_min))
    throw PreconditionError("sampler amplitudes must satisfy 0 < min <= max");
  if (opts_.max_jumps < 0 || opts_.max_attempts <= 0) throw PreconditionError("invalid sampler limits");
  const double base = spec_.clock ? spec_.clock->period : std::max(spec_.memory_size, 1.0);
  grid_ = opts_.grid_step > 0.0 ? opts_.grid_step : base / 50.0;
  knots_ = opts_.knot_spacing > 0.0 ? opts_.knot_spacing : (spec_.clock ? base / 2.0 : base / 4.0);
}

std::optional<SampledArc> ArcSampler::sample(std::uint64_t index) const {
  SampledArc out{index, sub_seed(opts_.seed, index), static_cast<Region>(index % 3), SampleMode::Reachable,
                 HybridMemoryArc::constant(Vec::Zero(spec_.n), spec_.memory_size, 1.0)};
  if (opts_.reachable && opts_.cover)
    out.mode = (index / 3) % 2 == 0 ? SampleMode::Reachable : SampleMode::Cover;
  else
    out.mode = opts_.reachable ? SampleMode::Reachable : SampleMode::Cover;
  auto arc = out.mode == SampleMode::Reachable ? reachable(out.region, out.seed) : cover(out.region, out.seed);
  if (!arc) return std::nullopt;
  out.arc = std::move(*arc);
  return out;
}

namespace {

// Random state with the non-clock part of norm `amp` and a uniform clock.
Vec random_state(Rng& rng, const SystemSpec& spec, double amp) {
  Vec x(spec.n);
  for (int c = 0; c < spec.n; ++c) x(c) = rng.normal();
  if (spec.clock) x(spec.clock->index) = 0.0;
  const double nrm = x.norm();
  if (nrm > 0.0) x *= amp / nrm;
  if (spec.clock) x(spec.clock->index) = rng.uniform(0.0, spec.clock->period);
  return x;
}

}  // namespace

std::optional<HybridMemoryArc> ArcSampler::reachable(Region region, std::uint64_t sub) const {
  Rng rng(sub);
  const double period = spec_.clock ? spec_.clock->period : 0.0;
  constexpr int kJumplessAttempts = 5;
  int jumpless = 0;
  for (int attempt = 0; attempt < opts_.max_attempts; ++attempt) {
    const double amp = std::exp(rng.uniform(std::log(opts_.amplitude_min), std::log(opts_.amplitude_max)));
    const Vec x0 = random_state(rng, spec_, amp);
    const HybridMemoryArc init = HybridMemoryArc::constant(x0, spec_.memory_size, grid_);
    if (!spec_.in_C(init) && !spec_.in_D(init)) continue;
    SimOptions so;
    so.step = grid_;
    so.jump_priority = true;
    if (region == Region::C) {
      const double horizon = spec_.clock ? 4.0 * period : 2.0 * (spec_.memory_size + 1.0);
      so.t_max = rng.uniform(grid_, horizon);
      so.j_max = 1000000;
      const Trajectory tr = simulate(spec_, init, so);
      if (tr.termination == Termination::Error) continue;
      const HybridTime tf = tr.final_time();
      HybridMemoryArc w = tr.window(tf.t, tf.j);
      if (spec_.in_C(w)) return w;
      continue;
    }
    const int m = rng.integer(0, opts_.max_jumps);
    so.j_max = m + 1;
    so.t_max = spec_.clock ? (m + 2) * period : 10.0 * (m + 1) * (spec_.memory_size + 1.0);
    const Trajectory tr = simulate(spec_, init, so);
    // Systems that never jump (D empty along every run so far) are not retried
    // for the full attempt budget.
    if (tr.jumps.empty() && tr.termination == Termination::HorizonReached && ++jumpless >= kJumplessAttempts)
      return std::nullopt;
    if (tr.termination == Termination::Error || static_cast<int>(tr.jumps.size()) < m + 1) continue;
    const HybridTime pre = tr.jumps.back();
    HybridMemoryArc w = tr.window(pre.t, pre.j);
    if (!spec_.in_D(w)) continue;
    if (region == Region::D) return w;
    const std::vector<Vec> gs = spec_.jump_selections(w);
    if (gs.empty()) continue;
    return append_jump(w, gs[static_cast<std::size_t>(rng.integer(0, static_cast<int>(gs.size()) - 1))]);
  }
  return std::nullopt;
}

std::optional<HybridMemoryArc> ArcSampler::cover(Region region, std::uint64_t sub) const {
  Rng rng(sub);
  const int n = spec_.n;
  const double Delta = spec_.memory_size;
  const int ci = spec_.clock ? spec_.clock->index : -1;
  const double period = spec_.clock ? spec_.clock->period : 0.0;

  // One level on s in [lo, top]: a cubic Hermite spline through random knots
  // for the non-clock components, and a clock running up to `tau_top` at top.
  auto make_level = [&](int k, double lo, double top, double tau_top, double amp) {
    Segment seg;
    seg.j = k;
    const double len = top - lo;
    const int nk = std::max(2, static_cast<int>(std::ceil(len / knots_)) + 1);
    std::vector<Vec> kv(nk);
    for (auto& v : kv) {
      v = Vec(n);
      for (int c = 0; c < n; ++c) v(c) = amp * rng.normal() / std::sqrt(static_cast<double>(n));
    }
    const double hk = nk > 1 ? len / (nk - 1) : 1.0;
    auto value = [&](double s) {
      Vec x(n);
      if (len <= 0.0) {
        x = kv[0];
      } else {
        const double u = std::clamp((s - lo) / hk, 0.0, static_cast<double>(nk - 1));
        const int i = std::min(static_cast<int>(u), nk - 2);
        const double th = u - i;
        const Vec m0 = (kv[std::min(i + 1, nk - 1)] - kv[std::max(i - 1, 0)]) / (i == 0 ? 1.0 : 2.0);
        const Vec m1 = (kv[std::min(i + 2, nk - 1)] - kv[i]) / (i + 2 > nk - 1 ? 1.0 : 2.0);
        const double th2 = th * th, th3 = th2 * th;
        x = (2 * th3 - 3 * th2 + 1) * kv[i] + (th3 - 2 * th2 + th) * m0 + (-2 * th3 + 3 * th2) * kv[i + 1] +
            (th3 - th2) * m1;
      }
      if (ci >= 0) x(ci) = tau_top + (s - top);
      return x;
    };
    const int steps = len > 0.0 ? std::max(1, static_cast<int>(std::ceil(len / grid_ - 1e-9))) : 0;
    for (int i = 0; i <= steps; ++i) {
      const double s = i == steps ? top : lo + len * i / steps;
      seg.times.push_back(s);
      const Vec x = value(s);
      seg.values.insert(seg.values.end(), x.data(), x.data() + n);
    }
    return seg;
  };

  for (int attempt = 0; attempt < opts_.max_attempts; ++attempt) {
    const double amp = std::exp(rng.uniform(std::log(opts_.amplitude_min), std::log(opts_.amplitude_max)));
    // Level tops and (uncut) bottoms, newest first.
    std::vector<std::pair<double, double>> spans;  // (bottom, top) in s
    double tau0 = 0.0;
    if (spec_.clock) {
      tau0 = region == Region::C ? rng.uniform(0.0, period) : period;
      double top = 0.0, bottom = -tau0;
      for (int k = 0; k > -100000; --k) {
        spans.emplace_back(bottom, top);
        if (bottom + k <= -Delta || top + k <= -Delta) break;
        top = bottom;
        bottom = top - period;
      }
    } else {
      const int m = rng.integer(0, opts_.max_jumps);
      double top = 0.0;
      for (int k = 0; k >= -m; --k) {
        const double dur = k == -m ? Delta + 1.0 : rng.uniform(0.0, (Delta + 1.0) / (m + 1));
        spans.emplace_back(top - dur, top);
        if (top - dur + k <= -Delta || top + k <= -Delta) break;
        top -= dur;
      }
    }
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const int k = -static_cast<int>(i);
      const double top = spans[i].second;
      const double lo = std::max(spans[i].first, -Delta - k);
      const double tau_top = i == 0 ? tau0 : period;
      segs.push_back(make_level(k, top + k <= -Delta ? top : lo, top, tau_top, amp));
    }
    std::reverse(segs.begin(), segs.end());
    HybridMemoryArc phi(HybridArc(n, std::move(segs)), Delta);
    if (region == Region::C) {
      if (spec_.in_C(phi)) return phi;
      continue;
    }
    if (!spec_.in_D(phi)) continue;
    if (region == Region::D) return phi;
    const std::vector<Vec> gs = spec_.jump_selections(phi);
    if (gs.empty()) continue;
    return append_jump(phi, gs[static_cast<std::size_t>(rng.integer(0, static_cast<int>(gs.size()) - 1))]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- conditions

double dplus_V(const SystemSpec& spec, const Functional& V, const HybridMemoryArc& phi, double h, double event_tol) {
  if (!(h > 0.0)) throw PreconditionError("D+V step must be positive");
  if (!spec.in_C(phi)) throw PreconditionError("D+V needs an arc in the flow set");
  double theta = h;
  Vec y = integrate_flow_step(spec, phi, h).state;
  HybridMemoryArc w = extend_window(phi, h, y);
  if (!spec.in_C(w)) {
    theta = locate_event(spec, phi, h, std::min(event_tol, 1e-3 * h), EventKind::LeaveC);
    if (theta < h / 100.0) throw PreconditionError("flow set is left immediately");
    y = integrate_flow_step(spec, phi, theta).state;
    w = extend_window(phi, theta, y);
  }
  return (V(w) - V(phi)) / theta;
}

std::vector<ConditionValue> evaluate_razumikhin(const SystemSpec& spec, const TargetSet& target,
                                                const RazumikhinCertificate& cert, const HybridMemoryArc& phi,
                                                const CheckOptions& opts) {
  std::vector<ConditionValue> out;
  const double sa = opts.algebraic_slack(), sd = opts.derivative_slack(0.0);
  const Vec x0 = phi.head();
  const double d = target.distW(x0);
  const double v = cert.V(x0);
  out.push_back({"i-lower", cert.alpha1(d), v, sa});
  out.push_back({"i-upper", v, cert.alpha2(d), sa});
  const double vb = vbar(phi, cert.V);
  if (spec.in_C(phi) && cert.p(v) >= vb) {
    const Vec g = cert.gradV(x0);
    for (const Vec& f : spec.flows(phi)) out.push_back({"ii", g.dot(f), -cert.alpha3(v), sd});
  }
  if (spec.in_D(phi))
    for (const Vec& g : spec.jump_selections(phi)) out.push_back({"iii", cert.V(g), cert.rho(vb), sa});
  return out;
}

std::vector<ConditionValue> evaluate_halanay(const SystemSpec& spec, const TargetSet& target,
                                             const HalanayCertificate& cert, const HybridMemoryArc& phi,
                                             const CheckOptions& opts) {
  std::vector<ConditionValue> out;
  const double sa = opts.algebraic_slack(), sd = opts.derivative_slack(0.0);
  const Vec x0 = phi.head();
  const double d = target.distW(x0);
  const double v = cert.V(x0);
  out.push_back({"i-lower", cert.alpha1(d), v, sa});
  out.push_back({"i-upper", v, cert.alpha2(d), sa});
  const double vb = vbar(phi, cert.V);
  if (spec.in_C(phi)) {
    const Vec g = cert.gradV(x0);
    for (const Vec& f : spec.flows(phi)) out.push_back({"ii", g.dot(f), -cert.mu * v + cert.q * vb, sd});
  }
  if (spec.in_D(phi))
    for (const Vec& g : spec.jump_selections(phi)) out.push_back({"iii", cert.V(g), cert.rho * vb, sa});
  return out;
}

std::vector<ConditionValue> evaluate_krasovskii(const SystemSpec& spec, const TargetSet& target,
                                                const KrasovskiiCertificate& cert, const HybridMemoryArc& phi,
                                                const CheckOptions& opts) {
  std::vector<ConditionValue> out;
  const double sa = opts.algebraic_slack(), sd = opts.derivative_slack(opts.h);
  const Vec x0 = phi.head();
  const double d = target.distW(x0);
  const double v = cert.V(phi);
  out.push_back({"i-lower", cert.alpha1(d), v, sa});
  out.push_back({"i-upper", v, cert.alpha2(sup_norm_W(phi, target.distW)), sa});
  if (spec.in_C(phi)) {
    try {
      out.push_back({"ii", dplus_V(spec, cert.V, phi, opts.h), -cert.alpha3(d), sd});
    } catch (const PreconditionError&) {
      // the flow set is left at once: no flow from this arc, nothing to check
    }
  }
  if (spec.in_D(phi))
    for (const Vec& g : spec.jump_selections(phi))
      out.push_back({"iii", cert.V(append_jump(phi, g)) - v, -cert.alpha3(d), sa});
  return out;
}

// ---------------------------------------------------------------- checkers

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace {

using Evaluator = std::function<std::vector<ConditionValue>(const HybridMemoryArc&)>;

CheckReport run_check(const std::string& name, const SystemSpec& spec, const ArcSampler& sampler,
                      const CheckOptions& opts, double derivative_slack, const Evaluator& eval) {
  const auto start = std::chrono::steady_clock::now();
  struct Result {
    std::optional<SampledArc> arc;
    std::vector<ConditionValue> values;
    double flow_norm = 0.0;
  };
  const std::size_t n = sampler.count();
  std::vector<Result> results(n);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    Result& r = results[i];
    r.arc = sampler.sample(i);
    if (!r.arc) return;
    const HybridMemoryArc& phi = r.arc->arc;
    const bool guard_ok = r.arc->region == Region::C   ? spec.in_C(phi)
                          : r.arc->region == Region::D ? spec.in_D(phi)
                                                       : true;
    if (!guard_ok)
      throw SamplerError("sample " + std::to_string(i) + " is outside its region " + to_string(r.arc->region));
    r.values = eval(phi);
    if (spec.in_C(phi))
      for (const Vec& f : spec.flows(phi)) r.flow_norm = std::max(r.flow_norm, f.norm());
  });

  CheckReport rep;
  rep.certificate = name;
  rep.slack = opts.algebraic_slack();
  rep.derivative_slack = derivative_slack;
  for (std::size_t i = 0; i < n; ++i) {
    Result& r = results[i];
    if (!r.arc) {
      ++rep.skipped;
      continue;
    }
    ++rep.samples;
    rep.flow_bound = std::max(rep.flow_bound, r.flow_norm);
    if (!std::isfinite(r.flow_norm)) rep.flow_bound = std::numeric_limits<double>::infinity();
    for (const ConditionValue& c : r.values) {
      ++rep.conditions_checked;
      const double margin = c.margin();
      rep.worst_margin = std::min(rep.worst_margin, margin);
      rep.worst_excess = std::max(rep.worst_excess, c.lhs - c.rhs - c.slack);
      const bool bad = c.violated() || !std::isfinite(c.lhs) || !std::isfinite(c.rhs);
      if (!bad) continue;
      ++rep.violation_count;
      if (rep.violations.size() >= opts.max_reported) continue;
      Violation v{r.arc->index, r.arc->seed, r.arc->region, r.arc->mode, c.condition, c.lhs, c.rhs, c.slack, margin,
                  std::nullopt};
      if (rep.violations.size() < opts.max_witnesses) v.witness = r.arc->arc;
      rep.violations.push_back(std::move(v));
    }
  }
  if (!std::isfinite(rep.flow_bound)) {
    ++rep.violation_count;
    if (rep.violations.size() < opts.max_reported)
      rep.violations.push_back({0, 0, Region::C, SampleMode::Reachable, "local-boundedness", rep.flow_bound, 0.0, 0.0,
                                -std::numeric_limits<double>::infinity(), std::nullopt});
  }
  rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace

CheckReport check_razumikhin(const SystemSpec& spec, const TargetSet& target, const RazumikhinCertificate& cert,
                             const ArcSampler& sampler, const CheckOptions& opts) {
  if (opts.screen) screen_certificate(cert, spec, opts.grid, sampler.options().seed);
  return run_check(cert.name, spec, sampler, opts, opts.derivative_slack(0.0),
                   [&](const HybridMemoryArc& phi) { return evaluate_razumikhin(spec, target, cert, phi, opts); });
}

CheckReport check_halanay(const SystemSpec& spec, const TargetSet& target, const HalanayCertificate& cert,
                          const ArcSampler& sampler, const CheckOptions& opts) {
  if (opts.screen) screen_certificate(cert, spec, opts.grid, sampler.options().seed);
  return run_check(cert.name, spec, sampler, opts, opts.derivative_slack(0.0),
                   [&](const HybridMemoryArc& phi) { return evaluate_halanay(spec, target, cert, phi, opts); });
}

CheckReport check_krasovskii(const SystemSpec& spec, const TargetSet& target, const KrasovskiiCertificate& cert,
                             const ArcSampler& sampler, const CheckOptions& opts) {
  if (opts.screen) screen_certificate(cert, opts.grid);
  return run_check(cert.name, spec, sampler, opts, opts.derivative_slack(opts.h),
                   [&](const HybridMemoryArc& phi) { return evaluate_krasovskii(spec, target, cert, phi, opts); });
}

// ---------------------------------------------------------------- conclusions

MonotoneResult check_vbar_monotone(const Trajectory& traj, const PointFn& V, double tol) {
  MonotoneResult res;
  double prev = 0.0;
  bool first = true;
  for (const HybridTime& p : traj.forward_points()) {
    const double cur = vbar(traj.window(p.t, p.j), V);
    ++res.points;
    if (!first) {
      const double inc = cur - prev;
      res.max_increase = std::max(res.max_increase, inc);
      if (inc > tol && res.ok) {
        res.ok = false;
        res.first_violation = p;
        res.before = prev;
        res.after = cur;
      }
    }
    prev = cur;
    first = false;
  }
  return res;
}

KLReport check_kl_envelope(const std::vector<Trajectory>& trajs, const TargetSet& target,
                           const std::vector<double>& eps_grid, const std::vector<double>& eta_grid,
                           const KLOptions& opts) {
  KLReport rep;
  if (trajs.empty()) throw PreconditionError("no trajectories to check");
  for (const Trajectory& tr : trajs)
    if (tr.system != trajs.front().system)
      throw PreconditionError("trajectories come from different systems ('" + tr.system + "' vs '" +
                              trajs.front().system + "')");

  struct Stat {
    double init = 0.0;
    double peak = 0.0;
    double final_tj = 0.0;
    std::vector<std::pair<double, double>> samples;  // (t + j, |x|_W)
  };
  std::vector<Stat> stats;
  for (const Trajectory& tr : trajs) {
    Stat s;
    s.init = sup_norm_W(tr.initial_window(), target.distW);
    for (const Segment& seg : tr.arc.segments()) {
      if (seg.j < 0) continue;
      for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg.times[i] < -kTimeTol) continue;
        const double d = target.distW(tr.arc.sample(seg, i));
        s.samples.emplace_back(seg.times[i] + seg.j, d);
        s.peak = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(s.peak, d);
        s.final_tj = std::max(s.final_tj, seg.times[i] + seg.j);
      }
    }
    if (s.init > 0.0) {
      rep.max_gain = std::max(rep.max_gain, s.peak / s.init);
    } else if (s.peak > 0.0) {
      rep.max_gain = std::numeric_limits<double>::infinity();
    }
    stats.push_back(std::move(s));
  }

  for (double eta : eta_grid) {
    double g = 0.0;
    for (const Stat& s : stats)
      if (s.init <= eta) g = std::max(g, s.peak);
    rep.gamma.push_back(g);
    if (!std::isfinite(g)) rep.bounded = false;
  }
  if (!(rep.max_gain <= opts.gain_limit)) {
    rep.bounded = false;
    rep.message = "empirical gain " + num(rep.max_gain) + " exceeds " + num(opts.gain_limit);
  }

  for (double eta : eta_grid) {
    for (double eps : eps_grid) {
      KLRow row;
      row.eps = eps;
      row.eta = eta;
      row.horizon = std::numeric_limits<double>::infinity();
      for (const Stat& s : stats) {
        if (s.init > eta) continue;
        ++row.trajectories;
        row.horizon = std::min(row.horizon, s.final_tj);
        for (const auto& [tj, d] : s.samples)
          if (!(d <= eps)) row.T = std::max(row.T, tj);
      }
      if (row.trajectories == 0) row.horizon = 0.0;
      row.ok = row.trajectories == 0 || row.T < row.horizon;
      if (!row.ok) {
        rep.attractive = false;
        if (rep.message.empty())
          rep.message = "|x|_W exceeds " + num(eps) + " up to the horizon for initial norm <= " + num(eta);
      }
      rep.table.push_back(row);
    }
  }
  return rep;
}

}  // namespace hymem
