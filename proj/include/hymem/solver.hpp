#pragma once

// Solutions of hybrid systems with memory: fixed-step RK4 on the functional
// ODE while the memory window is in C, bisection to the boundary of C, jumps
// while the window is in D.

#include "hymem/hybrid_time.hpp"
#include "hymem/system.hpp"

#include <string>
#include <vector>

namespace hymem {

enum class Termination { HorizonReached, LeftCandD, ZenoGuard, Error };
std::string to_string(Termination t);

struct SimOptions {
  double t_max = 10.0;
  int j_max = 1000;
  double step = 1e-3;
  double event_tol = 1e-9;
  bool jump_priority = true;
  int max_consecutive_jumps = 10000;

  void validate() const;
};

struct Trajectory {
  std::string system;  // name of the generating system
  HybridArc arc;  // memory side is the initial data, forward side the solution
  double memory_size = 0.0;
  Termination termination = Termination::HorizonReached;
  std::string message;
  std::vector<HybridTime> jumps;  // pre-jump points (t, j); the jump lands at (t, j+1)

  HybridMemoryArc window(double t, int j) const { return memory_window(arc, t, j, memory_size); }
  HybridMemoryArc initial_window() const { return window(0.0, 0); }
  HybridTime final_time() const;
  Vec final_state() const;
  /// Forward samples in (j, t) order.
  std::vector<HybridTime> forward_points() const;
};

Trajectory simulate(const SystemSpec& spec, const HybridMemoryArc& init, const SimOptions& opts);

/// Window after flowing for theta from `window` to state y (level 0 extended
/// linearly by the point (theta, y), then re-cut to the memory size).
HybridMemoryArc extend_window(const HybridMemoryArc& window, double theta, const Vec& y);

struct FlowStep {
  Vec state;       // x after the step
  Vec derivative;  // flow selection at the start of the step
};

/// One RK4 step of length h. Stage windows extend the current level linearly
/// to the stage time, so delayed terms shorter than the step read provisional
/// values and longer ones read stored history.
FlowStep integrate_flow_step(const SystemSpec& spec, const HybridMemoryArc& window, double h);

enum class EventKind {
  LeaveC,  // first time the flow guard turns negative
  EnterD,  // first time the jump guard turns nonnegative
};

/// Time theta in (0, h_bracket] at which the integrated flow from `window`
/// reaches the event, to within event_tol. For LeaveC the returned point is
/// still in C. Throws PreconditionError when the bracket holds no crossing and
/// EventLocationError when the guard jumps across the final bracket.
double locate_event(const SystemSpec& spec, const HybridMemoryArc& window, double h_bracket,
                    double event_tol = 1e-9, EventKind kind = EventKind::LeaveC);

struct VerifyFinding {
  std::string condition;  // "S1-flow", "S1-guard", "S2-guard", "S2-value"
  double t = 0.0;
  int j = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct VerifyReport {
  bool ok = true;
  int flow_points = 0;
  int jumps = 0;
  std::vector<VerifyFinding> findings;
};

/// A-posteriori check of the solution conditions on stored samples.
VerifyReport verify_solution(const SystemSpec& spec, const Trajectory& traj, double tol);

struct RunSummary {
  Termination termination = Termination::HorizonReached;
  std::string message;
  int jumps = 0;
  double t_final = 0.0;
  int j_final = 0;
  double sup_norm_initial = 0.0;
  double final_distW = 0.0;
};

RunSummary run_summary(const Trajectory& traj, const TargetSet& target);

/// Finite-difference weights for the first derivative at x0 (Fornberg).
std::vector<double> fd_weights(const std::vector<double>& nodes, double x0);

}  // namespace hymem
