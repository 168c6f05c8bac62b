#include "hymem/solver.hpp"

#include "hymem/errors.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <limits>

namespace hymem {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::HorizonReached: return "horizon_reached";
    case Termination::LeftCandD: return "left_C_and_D";
    case Termination::ZenoGuard: return "zeno_guard";
    case Termination::Error: return "error";
  }
  return "unknown";
}

void SimOptions::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw PreconditionError("step must be positive and finite");
  if (!(event_tol > 0.0)) throw PreconditionError("event_tol must be positive");
  if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
  if (j_max <= 0) throw PreconditionError("j_max must be positive");
  if (max_consecutive_jumps <= 0) throw PreconditionError("max_consecutive_jumps must be positive");
}

HybridTime Trajectory::final_time() const {
  const Segment& s = arc.segments().back();
  return {s.end(), s.j};
}

Vec Trajectory::final_state() const { return arc.sample(arc.segments().back(), arc.segments().back().size() - 1); }

std::vector<HybridTime> Trajectory::forward_points() const {
  std::vector<HybridTime> out;
  for (const Segment& s : arc.segments()) {
    if (s.j < 0) continue;
    for (double t : s.times)
      if (t >= -kTimeTol) out.push_back({t, s.j});
  }
  return out;
}

// ---------------------------------------------------------------- flow steps

HybridMemoryArc extend_window(const HybridMemoryArc& window, double theta, const Vec& y) {
  if (!(theta > 0.0)) throw PreconditionError("window extension needs a positive time");
  std::vector<Segment> segs = window.arc().segments();
  Segment& head = segs.back();
  head.times.push_back(theta);
  head.values.insert(head.values.end(), y.data(), y.data() + y.size());
  head.derivatives.clear();
  HybridArc ext(window.dim(), std::move(segs), window.arc().interpolation());
  return memory_window(ext, theta, 0, window.delta());
}

FlowStep integrate_flow_step(const SystemSpec& spec, const HybridMemoryArc& window, double h) {
  if (!(h > 0.0)) throw PreconditionError("flow step must be positive");
  const Vec y0 = window.head();
  const Vec k1 = spec.flow_selection(window);
  const Vec k2 = spec.flow_selection(extend_window(window, 0.5 * h, y0 + 0.5 * h * k1));
  const Vec k3 = spec.flow_selection(extend_window(window, 0.5 * h, y0 + 0.5 * h * k2));
  const Vec k4 = spec.flow_selection(extend_window(window, h, y0 + h * k3));
  return {y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1};
}

double locate_event(const SystemSpec& spec, const HybridMemoryArc& window, double h_bracket, double event_tol,
                    EventKind kind) {
  if (!(h_bracket > 0.0) || !(event_tol > 0.0)) throw PreconditionError("event bracket and tolerance must be positive");
  const GuardFn& guard = kind == EventKind::LeaveC ? spec.flow_guard : spec.jump_guard;
  // `before(v)` holds on the side of the bracket that precedes the event.
  auto before = [kind](double v) { return kind == EventKind::LeaveC ? v >= 0.0 : v < 0.0; };
  auto window_at = [&](double theta) {
    if (theta <= 0.0) return window;
    return extend_window(window, theta, integrate_flow_step(spec, window, theta).state);
  };
  auto value_at = [&](double theta) { return guard(window_at(theta)); };

  double lo = 0.0, hi = h_bracket;
  double v_lo = value_at(lo), v_hi = value_at(hi);
  if (!before(v_lo) || before(v_hi)) throw PreconditionError("no guard crossing in the event bracket");
  const double span = std::abs(v_hi - v_lo);
  auto update = [&](double x, double v) {
    if (before(v)) {
      lo = x;
      v_lo = v;
    } else {
      hi = x;
      v_hi = v;
    }
  };
  // Safeguarded regula falsi: a secant probe plus a companion probe half a
  // tolerance away, so smooth guards close the bracket in a few steps. Falls
  // back to bisection whenever the bracket does not at least halve.
  while (hi - lo > event_tol) {
    const double width = hi - lo;
    double x = 0.5 * (lo + hi);
    if (v_lo != v_hi) {
      const double s = lo + v_lo * (hi - lo) / (v_lo - v_hi);
      if (std::isfinite(s)) x = std::clamp(s, lo + 0.25 * event_tol, hi - 0.25 * event_tol);
    }
    const double v = value_at(x);
    update(x, v);
    if (hi - lo > event_tol) {
      const double c = before(v) ? std::min(x + 0.5 * event_tol, hi) : std::max(x - 0.5 * event_tol, lo);
      if (c > lo && c < hi) update(c, value_at(c));
    }
    if (hi - lo > 0.5 * width) {
      const double mid = 0.5 * (lo + hi);
      update(mid, value_at(mid));
    }
  }
  if (std::abs(v_hi - v_lo) > std::max(0.01 * span, 1e-9))
    throw EventLocationError("guard is discontinuous along the flow", lo, hi);

  // One secant step refines the crossing inside the final bracket.
  double theta = kind == EventKind::LeaveC ? lo : hi;
  if (v_lo != v_hi) {
    const double s = lo + v_lo * (hi - lo) / (v_lo - v_hi);
    if (s > lo && s < hi && value_at(s) >= 0.0) {
      theta = s;
      if (kind == EventKind::LeaveC) lo = s;
    }
  }
  if (kind == EventKind::EnterD) return theta;

  // A thin jump set (an equality guard) can sit on the exit boundary of C
  // closer than event_tol. Keep shrinking the exit bracket until the exit
  // point is in D, or the bracket reaches rounding level.
  const double floor_width = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi);
  for (int it = 0; it < 64 && !spec.in_D(window_at(lo)) && hi - lo > floor_width; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value_at(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

// ---------------------------------------------------------------- simulate

namespace {

class Simulator {
 public:
  Simulator(const SystemSpec& spec, const HybridMemoryArc& init, const SimOptions& opts)
      : spec_(spec), opts_(opts), window_(init), seg_start_(init) {
    traj_.system = spec.name;
    traj_.arc = init.arc();
    traj_.memory_size = init.delta();
  }

  Trajectory run() {
    if (!spec_.in_C(window_) && !spec_.in_D(window_))
      throw PreconditionError("initial memory arc is in neither the flow set nor the jump set");
    try {
      loop();
    } catch (const InsufficientHistory& e) {
      traj_.termination = Termination::Error;
      traj_.message = e.what();
    }
    return std::move(traj_);
  }

 private:
  void loop() {
    int consecutive = 0;
    while (true) {
      if (t_ >= opts_.t_max - opts_.event_tol || j_ >= opts_.j_max) {
        finish_segment();
        traj_.termination = Termination::HorizonReached;
        return;
      }
      bool inC = spec_.in_C(window_);
      bool inD = spec_.in_D(window_);
      if (inD && (opts_.jump_priority || !inC)) {
        if (finish_segment()) continue;
        if (consecutive >= opts_.max_consecutive_jumps) {
          traj_.termination = Termination::ZenoGuard;
          traj_.message = "more than " + std::to_string(opts_.max_consecutive_jumps) + " consecutive jumps at t = " +
                          std::to_string(t_);
          return;
        }
        jump();
        ++consecutive;
        continue;
      }
      if (!inC) {
        finish_segment();
        traj_.termination = Termination::LeftCandD;
        traj_.message = "memory window left C and D";
        return;
      }
      double h = std::min(opts_.step, opts_.t_max - t_);
      FlowStep st = integrate_flow_step(spec_, window_, h);
      HybridMemoryArc next = extend_window(window_, h, st.state);
      std::optional<EventKind> event;
      if (!spec_.in_C(next))
        event = EventKind::LeaveC;
      else if (opts_.jump_priority && !inD && spec_.in_D(next))
        event = EventKind::EnterD;
      if (event) {
        const double theta = locate_event(spec_, window_, h, opts_.event_tol, *event);
        if (theta <= opts_.event_tol) {
          if (inD) {
            if (finish_segment()) continue;
            jump();
            ++consecutive;
            continue;
          }
          finish_segment();
          traj_.termination = Termination::LeftCandD;
          traj_.message = "flow blocked outside the jump set";
          return;
        }
        h = theta;
        st = integrate_flow_step(spec_, window_, h);
        next = extend_window(window_, h, st.state);
      }
      t_ += h;
      traj_.arc.push_sample(t_, st.state);
      window_ = std::move(next);
      ++seg_samples_;
      consecutive = 0;
    }
  }

  void jump() {
    const Vec g = spec_.jump_value(window_);
    traj_.jumps.push_back({t_, j_});
    window_ = append_jump(window_, g);
    ++j_;
    traj_.arc.open_segment(j_, t_, g);
    seg_start_ = window_;
    seg_start_t_ = t_;
    seg_samples_ = 1;
  }

  // A flow segment with positive length but fewer than five samples is
  // re-integrated with four equal steps so that every flow segment supports a
  // five-point derivative stencil. Returns true when the segment changed.
  bool finish_segment() {
    const double len = t_ - seg_start_t_;
    if (seg_samples_ >= 5 || seg_samples_ < 2 || !(len > 0.0)) return false;
    const Segment& last = traj_.arc.segments().back();
    traj_.arc.truncate_last_segment(last.size() - static_cast<std::size_t>(seg_samples_ - 1));
    HybridMemoryArc w = seg_start_;
    const double h = len / 4.0;
    for (int i = 1; i <= 4; ++i) {
      const Vec y = integrate_flow_step(spec_, w, h).state;
      w = extend_window(w, h, y);
      traj_.arc.push_sample(i == 4 ? t_ : seg_start_t_ + i * h, y);
    }
    window_ = std::move(w);
    seg_samples_ = 5;
    return true;
  }

  const SystemSpec& spec_;
  const SimOptions& opts_;
  Trajectory traj_;
  HybridMemoryArc window_;
  HybridMemoryArc seg_start_;
  double seg_start_t_ = 0.0;
  int seg_samples_ = 1;
  double t_ = 0.0;
  int j_ = 0;
};

}  // namespace

Trajectory simulate(const SystemSpec& spec, const HybridMemoryArc& init, const SimOptions& opts) {
  spec.validate();
  opts.validate();
  if (init.dim() != spec.n) throw PreconditionError("initial memory arc has the wrong dimension");
  if (std::abs(init.delta() - spec.memory_size) > 1e-12)
    throw PreconditionError("initial memory arc was built for a different memory size");
  return Simulator(spec, init, opts).run();
}

// ---------------------------------------------------------------- verification

std::vector<double> fd_weights(const std::vector<double>& x, double x0) {
  const std::size_t n = x.size();
  if (n < 2) throw PreconditionError("finite differences need at least two nodes");
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1.0, c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

VerifyReport verify_solution(const SystemSpec& spec, const Trajectory& traj, double tol) {
  VerifyReport rep;
  auto add = [&](std::string cond, double t, int j, double lhs, double rhs) {
    rep.ok = false;
    rep.findings.push_back({std::move(cond), t, j, lhs, rhs});
  };
  const HybridArc& arc = traj.arc;
  if (auto d = validate_domain(arc.domain(), 1e-9); !d) add("domain: " + d.violation, 0.0, 0, 0.0, 0.0);

  for (const Segment& seg : arc.segments()) {
    if (seg.j < 0) continue;
    std::size_t first = 0;
    while (first < seg.size() && seg.times[first] < -kTimeTol) ++first;
    const std::size_t count = seg.size() - first;
    if (count < 2) continue;
    for (std::size_t i = first; i < seg.size(); ++i) {
      const double t = seg.times[i];
      std::optional<HybridMemoryArc> wopt;
      try {
        wopt.emplace(traj.window(t, seg.j));
      } catch (const DomainError&) {
        add("S1-window", t, seg.j, 0.0, 0.0);
        continue;
      }
      const HybridMemoryArc& w = *wopt;
      ++rep.flow_points;
      const double g = spec.flow_guard(w);
      if (g < -tol) add("S1-guard", t, seg.j, -g, tol);
      const std::vector<Vec> fs = spec.flows(w);

      // Best of the left, centred and right five-point stencils: derivative
      // kinks (delayed terms crossing a past jump) spoil at most one side.
      double best = std::numeric_limits<double>::infinity();
      double best_rhs = 0.0;
      const std::size_t width = std::min<std::size_t>(5, count);
      for (int shift : {0, 2, 4}) {
        const std::ptrdiff_t lo_i = static_cast<std::ptrdiff_t>(i) - shift;
        const std::ptrdiff_t lo_c = std::clamp<std::ptrdiff_t>(lo_i, static_cast<std::ptrdiff_t>(first),
                                                               static_cast<std::ptrdiff_t>(seg.size() - width));
        std::vector<double> nodes;
        for (std::size_t k = 0; k < width; ++k) nodes.push_back(seg.times[lo_c + k]);
        const std::vector<double> wts = fd_weights(nodes, t);
        Vec fd = Vec::Zero(arc.dim());
        for (std::size_t k = 0; k < width; ++k) fd += wts[k] * arc.sample(seg, lo_c + k);
        for (const Vec& f : fs) {
          const double err = (fd - f).norm();
          const double rhs = tol * (1.0 + f.norm());
          if (err - rhs < best - best_rhs) {
            best = err;
            best_rhs = rhs;
          }
        }
      }
      if (best > best_rhs) add("S1-flow", t, seg.j, best, best_rhs);
    }
  }

  for (std::size_t s = 1; s < arc.segments().size(); ++s) {
    const Segment& prev = arc.segments()[s - 1];
    const Segment& cur = arc.segments()[s];
    if (prev.j < 0 || cur.j <= 0) continue;
    const double t = cur.begin();
    ++rep.jumps;
    HybridMemoryArc w = traj.window(t, prev.j);
    const double g = spec.jump_guard(w);
    if (g < -tol) add("S2-guard", t, prev.j, -g, tol);
    const Vec post = arc.sample(cur, 0);
    double best = std::numeric_limits<double>::infinity();
    double best_rhs = 0.0;
    for (const Vec& cand : spec.jump_selections(w)) {
      const double err = (post - cand).norm();
      const double rhs = tol * (1.0 + cand.norm());
      if (err - rhs < best - best_rhs) {
        best = err;
        best_rhs = rhs;
      }
    }
    if (best > best_rhs) add("S2-value", t, prev.j, best, best_rhs);
  }
  return rep;
}

RunSummary run_summary(const Trajectory& traj, const TargetSet& target) {
  RunSummary s;
  s.termination = traj.termination;
  s.message = traj.message;
  s.jumps = static_cast<int>(traj.jumps.size());
  const HybridTime tf = traj.final_time();
  s.t_final = tf.t;
  s.j_final = tf.j;
  s.sup_norm_initial = sup_norm_W(traj.initial_window(), target.distW);
  s.final_distW = target.distW(traj.final_state());
  return s;
}

}  // namespace hymem
