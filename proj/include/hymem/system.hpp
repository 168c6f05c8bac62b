#pragma once

// Hybrid systems with memory H = (C, F, D, G), represented by signed guard
// functions and selection maps on memory arcs, plus the built-in examples and
// the linear delay family.

#include "hymem/hybrid_time.hpp"
#include "hymem/numerics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hymem {

/// Slack folded into the clock guards so that event location, which stops at
/// tau = delta up to rounding, still lands in C and D.
inline constexpr double kGuardTol = 1e-12;

using GuardFn = std::function<double(const HybridMemoryArc&)>;
using FlowFn = std::function<Vec(const HybridMemoryArc&)>;
using CandidatesFn = std::function<std::vector<Vec>(const HybridMemoryArc&)>;
using JumpChoiceFn = std::function<std::size_t(const HybridMemoryArc&, const std::vector<Vec>&)>;

/// A state component that evolves as a clock (derivative 1, reset to 0 at
/// jumps, jump when it reaches `period`). Samplers use it to build arcs whose
/// domain structure matches the system.
struct ClockInfo {
  int index = 0;
  double period = 0.0;
};

struct SystemSpec {
  std::string name;
  int n = 0;
  double memory_size = 0.0;
  GuardFn flow_guard;      // >= 0 on C
  GuardFn jump_guard;      // >= 0 on D
  FlowFn flow_selection;   // the f in F(phi) used for simulation
  CandidatesFn flow_candidates;  // optional; defaults to {flow_selection}
  CandidatesFn jump_selections;  // finite list of g in G(phi)
  JumpChoiceFn jump_choice;      // optional; defaults to the first candidate
  std::vector<std::string> state_names;
  std::optional<ClockInfo> clock;

  bool in_C(const HybridMemoryArc& phi) const { return flow_guard(phi) >= 0.0; }
  bool in_D(const HybridMemoryArc& phi) const { return jump_guard(phi) >= 0.0; }
  std::vector<Vec> flows(const HybridMemoryArc& phi) const;
  Vec jump_value(const HybridMemoryArc& phi) const;
  /// Throws PreconditionError when a required member is missing.
  void validate() const;
};

struct TargetSet {
  std::string name;
  PointFn distW;
};

struct HybridSystem {
  SystemSpec spec;
  TargetSet target;
};

struct Example1Params {
  Mat A;  // nz x nz
  Mat B;  // nz x m
  Mat K;  // m x nz
  double delta = 0.2;
  double r = 0.01;

  /// The values used in the sampled-data example.
  static Example1Params nominal();
  Mat Af() const;
  Mat Ag() const;
  Mat H() const;
};

struct Example2Params {
  double a = 0.5;
  double b = 0.25;
  double rho = 0.5;
  double r = 0.05;
  double delta = 0.1;
  double sigma = 2.0;
  double mu = 0.5;

  static Example2Params case_I();
  static Example2Params case_II();
};

/// Memory size large enough to read x(-r) across every jump level a delay of r
/// can span when jumps are at least `period` apart: r + floor(r/period) + 1.
double memory_size_for_delay(double r, double period);

HybridSystem build_example1(const Example1Params& p);
HybridSystem build_example2(const Example2Params& p);

/// x' = A0 x + sum_i A_i x(-r_i); with a period, a clock is appended and at
/// tau = period the state jumps to J0 x + sum_i J_i x(-r_i).
struct LinearDelaySpec {
  int dimension = 0;
  double memory_size = 0.0;
  Mat A0;
  std::vector<std::pair<double, Mat>> flow_delayed;
  std::optional<double> period;
  Mat J0;  // empty means identity
  std::vector<std::pair<double, Mat>> jump_delayed;
  std::string target_set = "origin_times_clock";  // or "origin"
  std::vector<std::string> state_names;            // optional, without the clock
};

HybridSystem build_linear_delay_system(const LinearDelaySpec& cfg);

/// The linear delay form of the two examples (same state layout).
LinearDelaySpec linear_delay_form(const Example1Params& p);
LinearDelaySpec linear_delay_form(const Example2Params& p);

}  // namespace hymem
