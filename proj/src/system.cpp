#include "hymem/system.hpp"

#include "hymem/errors.hpp"

#include <cmath>

namespace hymem {

std::vector<Vec> SystemSpec::flows(const HybridMemoryArc& phi) const {
  if (flow_candidates) return flow_candidates(phi);
  return {flow_selection(phi)};
}

Vec SystemSpec::jump_value(const HybridMemoryArc& phi) const {
  const std::vector<Vec> gs = jump_selections(phi);
  if (gs.empty()) throw PreconditionError("jump map returned no candidates");
  const std::size_t i = jump_choice ? jump_choice(phi, gs) : 0;
  if (i >= gs.size()) throw PreconditionError("jump choice out of range");
  return gs[i];
}

void SystemSpec::validate() const {
  if (n <= 0) throw PreconditionError("system dimension must be positive");
  if (!(memory_size >= 0.0) || !std::isfinite(memory_size)) throw PreconditionError("memory size must be finite and >= 0");
  if (!flow_guard || !jump_guard || !flow_selection || !jump_selections)
    throw PreconditionError("system '" + name + "' is missing a guard or a selection map");
  if (clock && (clock->index < 0 || clock->index >= n || !(clock->period > 0.0)))
    throw PreconditionError("invalid clock description");
}

namespace {

double clock_flow_guard(const HybridMemoryArc& phi, int idx, double period) {
  const double tau = phi.head()(idx);
  return std::min(tau, period - tau) + kGuardTol;
}

double clock_jump_guard(const HybridMemoryArc& phi, int idx, double period) {
  return kGuardTol - std::abs(phi.head()(idx) - period);
}

// Distance to {0} x [0, period] with the clock as the last component.
double dist_origin_times_clock(const Vec& z, double period) {
  const Eigen::Index n = z.size() - 1;
  const double tau = z(n);
  const double dt = tau < 0.0 ? -tau : (tau > period ? tau - period : 0.0);
  return std::sqrt(z.head(n).squaredNorm() + dt * dt);
}

}  // namespace

double memory_size_for_delay(double r, double period) {
  if (!(r >= 0.0) || !(period > 0.0)) throw PreconditionError("delay must be >= 0 and period > 0");
  return r + std::floor(r / period) + 1.0;
}

// ---------------------------------------------------------------- example 1

Example1Params Example1Params::nominal() {
  Example1Params p;
  p.A.resize(2, 2);
  p.A << 4, 1, 5, -3;
  p.B.resize(2, 1);
  p.B << -3, -2;
  p.K.resize(1, 2);
  p.K << 4, -2;
  p.delta = 0.2;
  p.r = 0.01;
  return p;
}

Mat Example1Params::Af() const {
  const Eigen::Index nz = A.rows(), m = B.cols();
  Mat out = Mat::Zero(nz + m, nz + m);
  out.topLeftCorner(nz, nz) = A;
  out.topRightCorner(nz, m) = B;
  return out;
}

Mat Example1Params::Ag() const {
  const Eigen::Index nz = A.rows(), m = B.cols();
  Mat out = Mat::Zero(nz + m, nz + m);
  out.topLeftCorner(nz, nz).setIdentity();
  out.bottomLeftCorner(m, nz) = K;
  return out;
}

Mat Example1Params::H() const { return expm(Af() * delta) * Ag(); }

namespace {

void check_example1(const Example1Params& p) {
  if (p.A.rows() == 0 || p.A.rows() != p.A.cols()) throw ConfigError("A must be square", "A");
  if (p.B.rows() != p.A.rows() || p.B.cols() == 0) throw ConfigError("B must have as many rows as A", "B");
  if (p.K.rows() != p.B.cols() || p.K.cols() != p.A.rows()) throw ConfigError("K must be m x n_z", "K");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw ConfigError("delta must be positive and finite", "delta");
  if (!(p.r > 0.0) || !std::isfinite(p.r)) throw ConfigError("r must be positive and finite", "r");
  if (p.r >= p.delta) throw ConfigError("r must be smaller than delta", "r");
}

}  // namespace

HybridSystem build_example1(const Example1Params& p) {
  check_example1(p);
  const int nz = static_cast<int>(p.A.rows());
  const int m = static_cast<int>(p.B.cols());
  const int n = nz + m + 1;
  const int ti = n - 1;
  const double delta = p.delta;
  const double r = p.r;
  const Mat A = p.A, B = p.B, K = p.K;

  SystemSpec s;
  s.name = "example1";
  s.n = n;
  s.memory_size = memory_size_for_delay(r, delta);
  s.clock = ClockInfo{ti, delta};
  s.flow_guard = [ti, delta](const HybridMemoryArc& phi) { return clock_flow_guard(phi, ti, delta); };
  s.jump_guard = [ti, delta](const HybridMemoryArc& phi) { return clock_jump_guard(phi, ti, delta); };
  s.flow_selection = [=](const HybridMemoryArc& phi) {
    const Vec x = phi.head();
    Vec f = Vec::Zero(n);
    f.head(nz) = A * x.head(nz) + B * x.segment(nz, m);
    f(ti) = 1.0;
    return f;
  };
  s.jump_selections = [=](const HybridMemoryArc& phi) {
    const Vec x = phi.head();
    const Vec zr = delayed_value(phi, -r).head(nz);
    Vec g = Vec::Zero(n);
    g.head(nz) = x.head(nz);
    g.segment(nz, m) = K * zr;
    return std::vector<Vec>{g};
  };
  for (int i = 0; i < nz; ++i) s.state_names.push_back("z" + std::to_string(i + 1));
  for (int i = 0; i < m; ++i) s.state_names.push_back(m == 1 ? "u" : "u" + std::to_string(i + 1));
  s.state_names.push_back("tau");

  TargetSet w{"origin_times_clock", [delta](const Vec& z) { return dist_origin_times_clock(z, delta); }};
  return {std::move(s), std::move(w)};
}

// ---------------------------------------------------------------- example 2

Example2Params Example2Params::case_I() {
  Example2Params p;
  p.a = -1.0;
  p.b = 0.25;
  p.rho = 1.2;
  p.r = 0.1;
  p.delta = 1.0;
  p.sigma = -0.5;
  p.mu = 0.5;
  return p;
}

Example2Params Example2Params::case_II() { return Example2Params{}; }

HybridSystem build_example2(const Example2Params& p) {
  if (!(p.r > 0.0) || !std::isfinite(p.r)) throw ConfigError("r must be positive and finite", "r");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw ConfigError("delta must be positive and finite", "delta");
  if (!(p.mu >= 0.0)) throw ConfigError("mu must be nonnegative", "mu");
  if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.rho) || !std::isfinite(p.sigma))
    throw ConfigError("parameters must be finite");
  const double a = p.a, b = p.b, rho = p.rho, r = p.r, delta = p.delta;

  SystemSpec s;
  s.name = "example2";
  s.n = 2;
  s.memory_size = memory_size_for_delay(r, delta);
  s.clock = ClockInfo{1, delta};
  s.flow_guard = [delta](const HybridMemoryArc& phi) { return clock_flow_guard(phi, 1, delta); };
  s.jump_guard = [delta](const HybridMemoryArc& phi) { return clock_jump_guard(phi, 1, delta); };
  s.flow_selection = [=](const HybridMemoryArc& phi) {
    Vec f(2);
    f << a * phi.head()(0) + b * delayed_value(phi, -r)(0), 1.0;
    return f;
  };
  s.jump_selections = [=](const HybridMemoryArc& phi) {
    Vec g(2);
    g << rho * phi.head()(0), 0.0;
    return std::vector<Vec>{g};
  };
  s.state_names = {"x", "tau"};
  TargetSet w{"origin_times_clock", [delta](const Vec& z) { return dist_origin_times_clock(z, delta); }};
  return {std::move(s), std::move(w)};
}

// ---------------------------------------------------------------- linear delay

HybridSystem build_linear_delay_system(const LinearDelaySpec& c) {
  const int d = c.dimension;
  if (d <= 0) throw ConfigError("dimension must be positive", "dimension");
  if (!(c.memory_size >= 0.0) || !std::isfinite(c.memory_size))
    throw ConfigError("memory_size must be finite and >= 0", "memory_size");
  auto check_sq = [d](const Mat& M, const std::string& field) {
    if (M.rows() != d || M.cols() != d)
      throw ConfigError(field + " must be " + std::to_string(d) + "x" + std::to_string(d), field);
    if (!M.allFinite()) throw ConfigError(field + " has non-finite entries", field);
  };
  check_sq(c.A0, "flow.A0");
  auto check_delay = [&](double r, const std::string& field) {
    if (!(r >= 0.0) || r > c.memory_size)
      throw ConfigError(field + " must lie in [0, memory_size]", field);
  };
  for (std::size_t i = 0; i < c.flow_delayed.size(); ++i) {
    const std::string f = "flow.delayed[" + std::to_string(i) + "]";
    check_delay(c.flow_delayed[i].first, f + ".delay");
    check_sq(c.flow_delayed[i].second, f + ".A");
  }
  const bool has_jumps = c.period.has_value();
  if (has_jumps && !(*c.period > 0.0)) throw ConfigError("jump.period must be positive", "jump.period");
  if (c.J0.size() != 0) check_sq(c.J0, "jump.J0");
  for (std::size_t i = 0; i < c.jump_delayed.size(); ++i) {
    const std::string f = "jump.delayed[" + std::to_string(i) + "]";
    check_delay(c.jump_delayed[i].first, f + ".delay");
    check_sq(c.jump_delayed[i].second, f + ".J");
  }
  if (!has_jumps && (c.J0.size() != 0 || !c.jump_delayed.empty()))
    throw ConfigError("jump maps given without a jump period", "jump.period");
  if (c.target_set != "origin_times_clock" && c.target_set != "origin")
    throw ConfigError("target_set must be \"origin_times_clock\" or \"origin\"", "target_set");

  const int n = has_jumps ? d + 1 : d;
  const Mat A0 = c.A0;
  const auto fd = c.flow_delayed;
  const Mat J0 = c.J0.size() != 0 ? c.J0 : Mat::Identity(d, d);
  const auto jd = c.jump_delayed;

  SystemSpec s;
  s.name = "linear_delay";
  s.n = n;
  s.memory_size = c.memory_size;
  s.flow_selection = [=](const HybridMemoryArc& phi) {
    Vec f = Vec::Zero(n);
    f.head(d) = A0 * phi.head().head(d);
    for (const auto& [r, Ai] : fd) f.head(d) += Ai * delayed_value(phi, -r).head(d);
    if (has_jumps) f(d) = 1.0;
    return f;
  };
  if (has_jumps) {
    const double T = *c.period;
    s.clock = ClockInfo{d, T};
    s.flow_guard = [d, T](const HybridMemoryArc& phi) { return clock_flow_guard(phi, d, T); };
    s.jump_guard = [d, T](const HybridMemoryArc& phi) { return clock_jump_guard(phi, d, T); };
    s.jump_selections = [=](const HybridMemoryArc& phi) {
      Vec g = Vec::Zero(n);
      g.head(d) = J0 * phi.head().head(d);
      for (const auto& [r, Ji] : jd) g.head(d) += Ji * delayed_value(phi, -r).head(d);
      return std::vector<Vec>{g};
    };
  } else {
    s.flow_guard = [](const HybridMemoryArc&) { return 1.0; };
    s.jump_guard = [](const HybridMemoryArc&) { return -1.0; };
    s.jump_selections = [](const HybridMemoryArc&) { return std::vector<Vec>{}; };
  }
  for (int i = 0; i < d; ++i)
    s.state_names.push_back(static_cast<std::size_t>(i) < c.state_names.size() ? c.state_names[i]
                                                                               : "x" + std::to_string(i + 1));
  if (has_jumps) s.state_names.push_back("tau");

  TargetSet w;
  w.name = c.target_set;
  if (c.target_set == "origin_times_clock" && has_jumps) {
    const double T = *c.period;
    w.distW = [T](const Vec& z) { return dist_origin_times_clock(z, T); };
  } else if (c.target_set == "origin_times_clock") {
    w.distW = [](const Vec& z) { return z.norm(); };
  } else {
    w.distW = [](const Vec& z) { return z.norm(); };
  }
  return {std::move(s), std::move(w)};
}

LinearDelaySpec linear_delay_form(const Example1Params& p) {
  check_example1(p);
  const Eigen::Index nz = p.A.rows(), m = p.B.cols();
  LinearDelaySpec c;
  c.dimension = static_cast<int>(nz + m);
  c.memory_size = memory_size_for_delay(p.r, p.delta);
  c.A0 = p.Af();
  c.period = p.delta;
  c.J0 = Mat::Zero(nz + m, nz + m);
  c.J0.topLeftCorner(nz, nz).setIdentity();
  Mat J = Mat::Zero(nz + m, nz + m);
  J.bottomLeftCorner(m, nz) = p.K;
  c.jump_delayed.emplace_back(p.r, J);
  return c;
}

LinearDelaySpec linear_delay_form(const Example2Params& p) {
  LinearDelaySpec c;
  c.dimension = 1;
  c.memory_size = memory_size_for_delay(p.r, p.delta);
  c.A0 = Mat::Constant(1, 1, p.a);
  c.flow_delayed.emplace_back(p.r, Mat::Constant(1, 1, p.b));
  c.period = p.delta;
  c.J0 = Mat::Constant(1, 1, p.rho);
  c.state_names = {"x"};
  return c;
}

}  // namespace hymem
