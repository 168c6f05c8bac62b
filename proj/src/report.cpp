#include "hymem/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace hymem {

using nlohmann::ordered_json;

namespace {

// Non-finite values have no JSON form; they are written as null.
ordered_json num(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json arc_points(const HybridMemoryArc& phi) {
  ordered_json pts = ordered_json::array();
  const HybridArc& a = phi.arc();
  for (const Segment& s : a.segments())
    for (std::size_t i = 0; i < s.size(); ++i) {
      ordered_json row = ordered_json::array({s.times[i], s.j});
      const Vec x = a.sample(s, i);
      for (Eigen::Index c = 0; c < x.size(); ++c) row.push_back(x(c));
      pts.push_back(std::move(row));
    }
  return pts;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json elapsed(const ReportContext& ctx, const std::optional<double>& own = {}) {
  const std::optional<double> e = own ? own : ctx.elapsed;
  return ctx.timing && e ? ordered_json(*e) : ordered_json(nullptr);
}

}  // namespace

std::string check_report_json(const CheckReport& r, const ReportContext& ctx) {
  ordered_json j;
  j["certificate"] = r.certificate;
  j["system"] = ctx.system;
  j["seed"] = ctx.seed;
  j["samples"] = r.samples;
  j["skipped"] = r.skipped;
  j["conditions_checked"] = r.conditions_checked;
  j["violation_count"] = r.violation_count;
  ordered_json vs = ordered_json::array();
  for (const Violation& v : r.violations) {
    ordered_json o;
    o["seed"] = v.seed;
    o["index"] = v.index;
    o["region"] = to_string(v.region);
    o["mode"] = to_string(v.mode);
    o["condition"] = v.condition;
    o["lhs"] = num(v.lhs);
    o["rhs"] = num(v.rhs);
    o["slack"] = v.slack;
    o["margin"] = num(v.margin);
    if (v.witness) o["witness"] = {{"memory_size", v.witness->delta()}, {"points", arc_points(*v.witness)}};
    vs.push_back(std::move(o));
  }
  j["violations"] = std::move(vs);
  j["worst_margin"] = num(r.worst_margin);
  j["worst_excess"] = num(r.worst_excess);
  j["slack"] = r.slack;
  j["derivative_slack"] = r.derivative_slack;
  j["flow_bound"] = num(r.flow_bound);
  j["elapsed"] = elapsed(ctx, r.elapsed);
  return dump(j);
}

std::string run_summary_json(const RunSummary& s, const ReportContext& ctx) {
  ordered_json j;
  j["system"] = ctx.system;
  j["termination"] = to_string(s.termination);
  if (!s.message.empty()) j["message"] = s.message;
  j["jumps"] = s.jumps;
  j["t_final"] = num(s.t_final);
  j["j_final"] = s.j_final;
  j["sup_norm_initial"] = num(s.sup_norm_initial);
  j["final_distW"] = num(s.final_distW);
  j["elapsed"] = elapsed(ctx);
  return dump(j);
}

std::string kl_report_json(const KLReport& r, const ReportContext& ctx) {
  ordered_json j;
  j["system"] = ctx.system;
  j["seed"] = ctx.seed;
  j["bounded"] = r.bounded;
  j["attractive"] = r.attractive;
  j["max_gain"] = num(r.max_gain);
  ordered_json g = ordered_json::array();
  for (double x : r.gamma) g.push_back(num(x));
  j["gamma"] = std::move(g);
  ordered_json rows = ordered_json::array();
  for (const KLRow& row : r.table)
    rows.push_back({{"eps", row.eps},
                    {"eta", row.eta},
                    {"trajectories", row.trajectories},
                    {"T", num(row.T)},
                    {"horizon", num(row.horizon)},
                    {"ok", row.ok}});
  j["table"] = std::move(rows);
  if (!r.message.empty()) j["message"] = r.message;
  j["elapsed"] = elapsed(ctx);
  return dump(j);
}

void write_plot_data(const Trajectory& traj, const TargetSet& target, std::ostream& out) {
  out << "t_plus_j,t,j,dist_W,jump\n";
  char buf[128];
  for (const Segment& s : traj.arc.segments()) {
    if (s.j < 0) continue;
    bool first = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.times[i] < -kTimeTol) continue;
      const double d = target.distW(traj.arc.sample(s, i));
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%d\n", s.times[i] + s.j, s.times[i], s.j, d,
                    first && s.j > 0 ? 1 : 0);
      out << buf;
      first = false;
    }
  }
}

}  // namespace hymem
