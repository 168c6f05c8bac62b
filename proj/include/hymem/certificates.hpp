#pragma once

// Sampling-based falsification of the Razumikhin, Halanay and Krasovskii
// conditions, plus trajectory-level checks of their conclusions.

#include "hymem/hybrid_time.hpp"
#include "hymem/solver.hpp"
#include "hymem/system.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hymem {

using ScalarFn = std::function<double(double)>;
using GradFn = std::function<Vec(const Vec&)>;
using Functional = std::function<double(const HybridMemoryArc&)>;

struct RazumikhinCertificate {
  std::string name = "razumikhin";
  PointFn V;
  GradFn gradV;
  ScalarFn alpha1, alpha2, alpha3, p, rho;
};

struct HalanayCertificate {
  std::string name = "halanay";
  PointFn V;
  GradFn gradV;
  ScalarFn alpha1, alpha2;
  double mu = 0.0;
  double q = 0.0;
  double rho = 0.0;
};

struct KrasovskiiCertificate {
  std::string name = "krasovskii";
  Functional V;
  ScalarFn alpha1, alpha2, alpha3;
};

/// Log-spaced grid used to screen comparison functions.
struct ValidationGrid {
  double lo = 1e-8;
  double hi = 1e8;
  int points = 50;
  std::vector<double> values() const;
};

/// Screens p(r) > r, rho(r) < r, alpha monotonicity, alpha1 <= alpha2 and
/// positivity of alpha3 on the grid, and gradV against central differences
/// of V at random points. Throws CertificateError on the first failure.
void screen_certificate(const RazumikhinCertificate& c, const SystemSpec& spec, const ValidationGrid& grid = {},
                        std::uint64_t seed = 0, int gradient_points = 1000);
void screen_certificate(const HalanayCertificate& c, const SystemSpec& spec, const ValidationGrid& grid = {},
                        std::uint64_t seed = 0, int gradient_points = 1000);
void screen_certificate(const KrasovskiiCertificate& c, const ValidationGrid& grid = {});

// ---------------------------------------------------------------- sampling

enum class Region { C, D, GplusD };
std::string to_string(Region r);

enum class SampleMode { Reachable, Cover };
std::string to_string(SampleMode m);

struct SamplerOptions {
  std::size_t count = 10000;
  std::uint64_t seed = 0;
  double amplitude_min = 1e-3;  // log-uniform sup-norm scale of non-clock components
  double amplitude_max = 1.0;
  bool reachable = true;
  bool cover = true;
  double grid_step = 0.0;     // 0: clock period / 50, or memory size / 50 without a clock
  double knot_spacing = 0.0;  // cover splines; 0: clock period / 2, or memory size / 4
  int max_jumps = 3;          // jump levels in cover arcs without a clock, and in reachable D arcs
  int max_attempts = 50;
};

struct SampledArc {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;  // sub-seed for this sample
  Region region = Region::C;
  SampleMode mode = SampleMode::Reachable;
  HybridMemoryArc arc;
};

/// Deterministic generator of memory arcs in C, D and G+(D). Sample i depends
/// only on (seed, i): its sub-seed comes from a splitmix64 counter. Regions
/// cycle C, D, G+(D); modes alternate between reachable and cover when both
/// are enabled.
class ArcSampler {
 public:
  ArcSampler(const SystemSpec& spec, SamplerOptions opts);

  const SamplerOptions& options() const noexcept { return opts_; }
  std::size_t count() const noexcept { return opts_.count; }
  /// std::nullopt when the region could not be reached (e.g. no jumps).
  std::optional<SampledArc> sample(std::uint64_t index) const;

  static std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::optional<HybridMemoryArc> reachable(Region region, std::uint64_t sub) const;
  std::optional<HybridMemoryArc> cover(Region region, std::uint64_t sub) const;

  const SystemSpec& spec_;
  SamplerOptions opts_;
  double grid_;
  double knots_;
};

// ---------------------------------------------------------------- checking

struct CheckOptions {
  std::optional<double> slack;  // overrides both defaults when set
  double h = 1e-5;              // step for D+V
  std::size_t max_reported = 1000;
  std::size_t max_witnesses = 20;
  unsigned threads = 1;
  ValidationGrid grid;
  bool screen = true;

  double algebraic_slack() const { return slack ? *slack : 1e-9; }
  /// Slack for derivative conditions; `fd_step` is 0 for analytic gradients.
  double derivative_slack(double fd_step) const { return slack ? *slack : 1e-7 + 10.0 * fd_step; }
};

struct ConditionValue {
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double margin() const { return rhs - lhs; }
  bool violated() const { return lhs > rhs + slack; }
};

struct Violation {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  Region region = Region::C;
  SampleMode mode = SampleMode::Reachable;
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double margin = 0.0;
  std::optional<HybridMemoryArc> witness;
};

struct CheckReport {
  std::string certificate;
  std::size_t samples = 0;  // arcs evaluated
  std::size_t skipped = 0;  // indices the sampler could not realize
  std::size_t conditions_checked = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first max_reported, in sample order
  double worst_margin = std::numeric_limits<double>::infinity();
  /// max over checks of lhs - rhs - slack; no violations iff this is <= 0.
  double worst_excess = -std::numeric_limits<double>::infinity();
  double slack = 0.0;             // algebraic slack
  double derivative_slack = 0.0;  // slack for the flow condition
  double flow_bound = 0.0;        // largest |f| seen (local boundedness screen)
  std::optional<double> elapsed;

  bool ok() const { return violation_count == 0; }
};

/// Condition values of one sampled arc (used by the checkers and to re-check
/// reported witnesses).
std::vector<ConditionValue> evaluate_razumikhin(const SystemSpec& spec, const TargetSet& target,
                                                const RazumikhinCertificate& cert, const HybridMemoryArc& phi,
                                                const CheckOptions& opts = {});
std::vector<ConditionValue> evaluate_halanay(const SystemSpec& spec, const TargetSet& target,
                                             const HalanayCertificate& cert, const HybridMemoryArc& phi,
                                             const CheckOptions& opts = {});
std::vector<ConditionValue> evaluate_krasovskii(const SystemSpec& spec, const TargetSet& target,
                                                const KrasovskiiCertificate& cert, const HybridMemoryArc& phi,
                                                const CheckOptions& opts = {});

CheckReport check_razumikhin(const SystemSpec& spec, const TargetSet& target, const RazumikhinCertificate& cert,
                             const ArcSampler& sampler, const CheckOptions& opts = {});
CheckReport check_halanay(const SystemSpec& spec, const TargetSet& target, const HalanayCertificate& cert,
                          const ArcSampler& sampler, const CheckOptions& opts = {});
CheckReport check_krasovskii(const SystemSpec& spec, const TargetSet& target, const KrasovskiiCertificate& cert,
                             const ArcSampler& sampler, const CheckOptions& opts = {});

/// (V(window after flowing h) - V(phi)) / h along the selected solution, with
/// no jumps. When C is left before h the step shrinks to the exit time; an
/// exit before h/100 throws PreconditionError.
double dplus_V(const SystemSpec& spec, const Functional& V, const HybridMemoryArc& phi, double h,
               double event_tol = 1e-12);

// ---------------------------------------------------------------- conclusions

struct MonotoneResult {
  bool ok = true;
  std::size_t points = 0;
  double max_increase = 0.0;
  std::optional<HybridTime> first_violation;
  double before = 0.0;  // V-bar values around the first violation
  double after = 0.0;
};

/// V-bar along the stored forward samples, in (j, t) order, never increases by
/// more than tol.
MonotoneResult check_vbar_monotone(const Trajectory& traj, const PointFn& V, double tol);

struct KLRow {
  double eps = 0.0;
  double eta = 0.0;
  std::size_t trajectories = 0;  // with initial norm <= eta
  double T = 0.0;                // last t+j with |x|_W > eps over the group
  double horizon = 0.0;          // smallest final t+j over the group
  bool ok = true;
};

struct KLReport {
  bool bounded = true;
  bool attractive = true;
  double max_gain = 0.0;            // sup |x|_W / ||init||_W
  std::vector<double> gamma;        // envelope gamma(eta) per eta-grid entry
  std::vector<KLRow> table;
  std::string message;
  bool ok() const { return bounded && attractive; }
};

struct KLOptions {
  double gain_limit = 1e6;
};

/// Empirical uniform boundedness and uniform attractivity over a set of
/// trajectories of one system. Throws PreconditionError on mixed systems.
KLReport check_kl_envelope(const std::vector<Trajectory>& trajs, const TargetSet& target,
                           const std::vector<double>& eps_grid, const std::vector<double>& eta_grid,
                           const KLOptions& opts = {});

/// Runs body(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace hymem
