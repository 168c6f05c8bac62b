#pragma once

// JSON reports and plot data. Output is deterministic: doubles are written in
// shortest round-trip form and wall-clock time only appears when asked for.

#include "hymem/certificates.hpp"
#include "hymem/solver.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace hymem {

struct ReportContext {
  std::string system;
  std::uint64_t seed = 0;
  bool timing = false;  // include elapsed seconds
  /// Wall-clock seconds for reports whose result carries no timing of its own.
  std::optional<double> elapsed;
};

std::string check_report_json(const CheckReport& r, const ReportContext& ctx);
std::string run_summary_json(const RunSummary& s, const ReportContext& ctx);
std::string kl_report_json(const KLReport& r, const ReportContext& ctx);

/// Rows "t_plus_j,t,j,dist_W,jump": one per stored forward sample, with jump = 1
/// on the first sample after each jump.
void write_plot_data(const Trajectory& traj, const TargetSet& target, std::ostream& out);

}  // namespace hymem
