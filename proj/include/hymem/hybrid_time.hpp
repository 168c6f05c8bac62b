#pragma once

// Hybrid time domains with memory, hybrid arcs and the memory-window machinery.
//
// An arc is stored as one Segment per jump index j, in ascending order of j.
// Memory (t <= 0, j <= 0) and forward (t >= 0, j >= 0) parts share the j = 0
// segment, which may straddle t = 0. Values between samples are interpolated
// piecewise linearly, or with cubic Hermite when derivative samples exist and
// the arc is configured for it.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace hymem {

using Vec = Eigen::VectorXd;

/// Absolute time tolerance for membership tests at segment boundaries.
inline constexpr double kTimeTol = 1e-12;

struct HybridTime {
  double t = 0.0;
  int j = 0;
};

struct DomainInterval {
  double begin = 0.0;
  double end = 0.0;
  int j = 0;
};

/// Forward part ([t_j, t_{j+1}], j) for j = 0, 1, ... and memory part
/// ([s_k, s_{k-1}], -k+1) listed from the newest (index 0) to the oldest.
struct HybridTimeDomain {
  std::vector<DomainInterval> forward;
  std::vector<DomainInterval> memory;
};

struct DomainCheck {
  bool ok = true;
  std::string violation;
  explicit operator bool() const noexcept { return ok; }
};

DomainCheck validate_domain(const HybridTimeDomain& d, double tol = kTimeTol);

enum class Interpolation { Linear, CubicHermite };

struct Segment {
  int j = 0;
  std::vector<double> times;
  std::vector<double> values;       // row-major, dim values per sample
  std::vector<double> derivatives;  // empty, or same layout as values

  std::size_t size() const noexcept { return times.size(); }
  double begin() const { return times.front(); }
  double end() const { return times.back(); }
};

class HybridArc {
 public:
  HybridArc() = default;
  HybridArc(int dim, std::vector<Segment> segments, Interpolation interp = Interpolation::Linear);

  int dim() const noexcept { return dim_; }
  Interpolation interpolation() const noexcept { return interp_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  bool empty() const noexcept { return segments_.empty(); }

  int min_j() const { return segments_.front().j; }
  int max_j() const { return segments_.back().j; }
  const Segment* find(int j) const;

  bool contains(double t, int j, double tol = kTimeTol) const;
  Vec eval(double t, int j) const;
  /// Value of sample i in segment for index j, without interpolation.
  Vec sample(const Segment& seg, std::size_t i) const;

  HybridTimeDomain domain() const;

  // Builder interface used while integrating; the arc is treated as immutable
  // once handed out.
  void open_segment(int j, double t, const Vec& value);
  void push_sample(double t, const Vec& value);
  void truncate_last_segment(std::size_t keep);

 private:
  friend Vec interpolate(const HybridArc&, const Segment&, double);
  int dim_ = 0;
  Interpolation interp_ = Interpolation::Linear;
  std::vector<Segment> segments_;
};

/// Interpolated value of `seg` at time t (t must lie within the segment).
Vec interpolate(const HybridArc& arc, const Segment& seg, double t);

/// A memory arc (t <= 0, j <= 0, containing (0,0)) together with its memory size.
/// Construction enforces membership in M^Delta.
class HybridMemoryArc {
 public:
  HybridMemoryArc(HybridArc arc, double delta);

  /// Constant history on [-delta, 0] at k = 0, sampled with the given grid step.
  static HybridMemoryArc constant(const Vec& value, double delta, double grid_step);
  /// History s -> fn(s) on [-delta, 0] at k = 0.
  static HybridMemoryArc from_function(const std::function<Vec(double)>& fn, int dim, double delta,
                                       double grid_step);

  const HybridArc& arc() const noexcept { return arc_; }
  double delta() const noexcept { return delta_; }
  int dim() const noexcept { return arc_.dim(); }

  Vec at(double s, int k) const { return arc_.eval(s, k); }
  /// phi(0,0).
  Vec head() const;
  /// Smallest value of s + k over the domain.
  double depth() const;

 private:
  HybridArc arc_;
  double delta_ = 0.0;
};

/// Both M^Delta clauses: s+k >= -Delta-1 everywhere, and some s+k <= -Delta.
DomainCheck check_memory_class(const HybridArc& arc, double delta, double tol = kTimeTol);

Vec eval_arc(const HybridArc& x, double t, int j);

/// Smallest delta' >= Delta with some (t+s, j+k) in dom x and s + k = -delta'.
double delta_inf(const HybridArc& x, double t, int j, double Delta);

/// (s,k) -> x(t+s, j+k) restricted to s + k >= -delta_inf.
HybridMemoryArc memory_window(const HybridArc& x, double t, int j, double Delta);

/// Memory arc of phi after a jump to g, re-truncated at s + k = -Delta - 1.
HybridMemoryArc append_jump(const HybridMemoryArc& phi, const Vec& g);

/// phi(s, k(s)) with k(s) the largest jump index present at time s.
Vec delayed_value(const HybridMemoryArc& phi, double s);

struct WindowMaxOptions {
  bool refine = false;
  double rel_tol = 1e-9;
  int max_levels = 16;
};

using PointFn = std::function<double(const Vec&)>;

/// sup over s + k >= -Delta - 1 of fn(phi(s,k)), on samples (plus optional refinement).
double window_max(const HybridMemoryArc& phi, const PointFn& fn, const WindowMaxOptions& opts = {});

double sup_norm_W(const HybridMemoryArc& phi, const PointFn& distW, const WindowMaxOptions& opts = {});
double vbar(const HybridMemoryArc& phi, const PointFn& V, const WindowMaxOptions& opts = {});

/// Integral over s in [a, b] of fn(phi(s, k(s))). Each jump level contributes over
/// its own time interval, so isolated jump points carry no weight. Simpson's rule
/// per sample interval (exact for quadratics of linearly interpolated data).
double integrate_envelope(const HybridMemoryArc& phi, double a, double b, const PointFn& fn);

}  // namespace hymem
