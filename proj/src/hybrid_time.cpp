#include "hymem/hybrid_time.hpp"

#include "hymem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hymem {

namespace {

double ttol(double t) { return kTimeTol * std::max(1.0, std::abs(t)); }

std::string point_str(double t, int j) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << t << ", " << j << ")";
  return os.str();
}

Vec hermite_derivative(const HybridArc& arc, const Segment& seg, std::size_t i, double t) {
  const int n = arc.dim();
  const double t0 = seg.times[i];
  const double t1 = seg.times[i + 1];
  const double h = t1 - t0;
  const double th = (t - t0) / h;
  Eigen::Map<const Vec> y0(seg.values.data() + i * n, n);
  Eigen::Map<const Vec> y1(seg.values.data() + (i + 1) * n, n);
  Eigen::Map<const Vec> m0(seg.derivatives.data() + i * n, n);
  Eigen::Map<const Vec> m1(seg.derivatives.data() + (i + 1) * n, n);
  const double d00 = (6 * th * th - 6 * th) / h;
  const double d10 = 3 * th * th - 4 * th + 1;
  const double d01 = (-6 * th * th + 6 * th) / h;
  const double d11 = 3 * th * th - 2 * th;
  return d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
}

bool uses_hermite(const HybridArc& arc, const Segment& seg) {
  return arc.interpolation() == Interpolation::CubicHermite && !seg.derivatives.empty();
}

// Index of the sample interval [i, i+1] holding t, or the sample index itself
// when t coincides with a sample (second = true).
std::pair<std::size_t, bool> locate(const Segment& seg, double t) {
  const double tol = ttol(t);
  auto it = std::upper_bound(seg.times.begin(), seg.times.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - seg.times.begin());
  if (idx < seg.size() && std::abs(seg.times[idx] - t) <= tol) return {idx, true};
  if (idx == 0) return {0, true};
  if (idx == seg.size()) return {seg.size() - 1, true};
  if (std::abs(seg.times[idx - 1] - t) <= tol) return {idx - 1, true};
  return {idx - 1, false};
}

// Copies the samples of `seg` with time in [from, to] into a new segment with
// index new_j, interpolating the endpoints when they fall between samples.
// Stored times are (time - shift); `from_s`, when finite, overrides the shifted
// time of an interpolated lower endpoint.
Segment slice(const HybridArc& arc, const Segment& seg, double from, double to, double shift, int new_j,
              double from_s = std::numeric_limits<double>::quiet_NaN()) {
  const int n = arc.dim();
  const bool with_der = !seg.derivatives.empty();
  Segment out;
  out.j = new_j;
  auto push = [&](double time, const Vec& v, const Vec* d) {
    out.times.push_back(time);
    out.values.insert(out.values.end(), v.data(), v.data() + n);
    if (with_der) out.derivatives.insert(out.derivatives.end(), d->data(), d->data() + n);
  };
  auto push_sample = [&](std::size_t i, double time) {
    out.times.push_back(time);
    out.values.insert(out.values.end(), seg.values.begin() + i * n, seg.values.begin() + (i + 1) * n);
    if (with_der)
      out.derivatives.insert(out.derivatives.end(), seg.derivatives.begin() + i * n,
                             seg.derivatives.begin() + (i + 1) * n);
  };
  auto derivative_at = [&](double time) -> Vec {
    auto [i, exact] = locate(seg, time);
    if (exact) return Eigen::Map<const Vec>(seg.derivatives.data() + i * n, n);
    if (uses_hermite(arc, seg)) return hermite_derivative(arc, seg, i, time);
    const double w = (time - seg.times[i]) / (seg.times[i + 1] - seg.times[i]);
    Eigen::Map<const Vec> d0(seg.derivatives.data() + i * n, n);
    Eigen::Map<const Vec> d1(seg.derivatives.data() + (i + 1) * n, n);
    return (1 - w) * d0 + w * d1;
  };

  const double tf = ttol(from);
  const double tt = ttol(to);
  std::size_t first = static_cast<std::size_t>(
      std::lower_bound(seg.times.begin(), seg.times.end(), from - tf) - seg.times.begin());
  std::size_t last = static_cast<std::size_t>(
      std::upper_bound(seg.times.begin(), seg.times.end(), to + tt) - seg.times.begin());
  const std::size_t cap = (last > first ? last - first : 0) + 2;
  out.times.reserve(cap);
  out.values.reserve(cap * n);
  if (with_der) out.derivatives.reserve(cap * n);

  if (first >= seg.size() || seg.times[first] > from + tf) {
    Vec v = interpolate(arc, seg, from);
    Vec d = with_der ? derivative_at(from) : Vec();
    push(std::isnan(from_s) ? from - shift : from_s, v, with_der ? &d : nullptr);
  }
  for (std::size_t i = first; i < last; ++i) {
    double time = seg.times[i] - shift;
    if (i + 1 == last && std::abs(seg.times[i] - to) <= tt) time = to - shift;
    if (!out.times.empty() && time <= out.times.back()) continue;
    push_sample(i, time);
  }
  if (out.times.empty() || seg.times[last == 0 ? 0 : last - 1] < to - tt) {
    double time = to - shift;
    if (out.times.empty() || time > out.times.back()) {
      Vec v = interpolate(arc, seg, to);
      Vec d = with_der ? derivative_at(to) : Vec();
      push(time, v, with_der ? &d : nullptr);
    }
  }
  // A cut that lands within tolerance of a stored sample keeps the exact cut time.
  if (!std::isnan(from_s) && out.times.size() > 1 && from_s < out.times[1]) out.times.front() = from_s;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- domains

DomainCheck validate_domain(const HybridTimeDomain& d, double tol) {
  auto fail = [](std::string msg) { return DomainCheck{false, std::move(msg)}; };
  if (d.forward.empty()) return fail("forward domain is empty");
  if (std::abs(d.forward.front().begin) > tol || d.forward.front().j != 0)
    return fail("forward domain must start at t = 0 with j = 0");
  for (std::size_t i = 0; i < d.forward.size(); ++i) {
    const auto& iv = d.forward[i];
    if (iv.end < iv.begin - tol) return fail("interval end precedes its begin at forward index " + std::to_string(iv.j));
    if (iv.begin < -tol) return fail("forward times must be nonnegative");
    if (i > 0) {
      const auto& prev = d.forward[i - 1];
      if (iv.j != prev.j + 1) return fail("forward jump index must increase by exactly 1");
      if (std::abs(iv.begin - prev.end) > tol * std::max(1.0, std::abs(prev.end)))
        return fail("segments must share boundary time (forward j = " + std::to_string(iv.j) + ")");
    }
  }
  if (!d.memory.empty()) {
    if (std::abs(d.memory.front().end) > tol || d.memory.front().j != 0)
      return fail("memory domain must end at s = 0 with index 0");
    for (std::size_t i = 0; i < d.memory.size(); ++i) {
      const auto& iv = d.memory[i];
      if (iv.end < iv.begin - tol) return fail("interval end precedes its begin at memory index " + std::to_string(iv.j));
      if (iv.end > tol) return fail("memory times must be nonpositive");
      if (i > 0) {
        const auto& prev = d.memory[i - 1];
        if (iv.j != prev.j - 1) return fail("memory jump index must decrease by exactly 1");
        if (std::abs(iv.end - prev.begin) > tol * std::max(1.0, std::abs(prev.begin)))
          return fail("segments must share boundary time (memory k = " + std::to_string(iv.j) + ")");
      }
    }
  }
  return {};
}

// ---------------------------------------------------------------- arcs

HybridArc::HybridArc(int dim, std::vector<Segment> segments, Interpolation interp)
    : dim_(dim), interp_(interp), segments_(std::move(segments)) {
  if (dim_ <= 0) throw PreconditionError("arc dimension must be positive");
  if (segments_.empty()) throw PreconditionError("arc needs at least one segment");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (s.times.empty()) throw PreconditionError("arc segment " + std::to_string(s.j) + " has no samples");
    if (s.values.size() != s.times.size() * static_cast<std::size_t>(dim_))
      throw PreconditionError("arc segment " + std::to_string(s.j) + " has inconsistent value storage");
    if (!s.derivatives.empty() && s.derivatives.size() != s.values.size())
      throw PreconditionError("arc segment " + std::to_string(s.j) + " has inconsistent derivative storage");
    for (std::size_t k = 1; k < s.times.size(); ++k)
      if (!(s.times[k] > s.times[k - 1]))
        throw PreconditionError("arc segment " + std::to_string(s.j) + " sample times must increase strictly");
    if (i > 0) {
      const Segment& p = segments_[i - 1];
      if (s.j != p.j + 1) throw PreconditionError("arc segments must have consecutive jump indices");
      if (std::abs(s.begin() - p.end()) > 1e-9 * std::max(1.0, std::abs(p.end())))
        throw PreconditionError("segments must share boundary time at j = " + std::to_string(s.j));
    }
  }
}

const Segment* HybridArc::find(int j) const {
  if (segments_.empty() || j < min_j() || j > max_j()) return nullptr;
  return &segments_[static_cast<std::size_t>(j - min_j())];
}

bool HybridArc::contains(double t, int j, double tol) const {
  const Segment* s = find(j);
  if (!s) return false;
  const double eps = tol * std::max(1.0, std::abs(t));
  return t >= s->begin() - eps && t <= s->end() + eps;
}

Vec HybridArc::sample(const Segment& seg, std::size_t i) const {
  return Eigen::Map<const Vec>(seg.values.data() + i * dim_, dim_);
}

Vec interpolate(const HybridArc& arc, const Segment& seg, double t) {
  const int n = arc.dim();
  auto [i, exact] = locate(seg, t);
  if (exact) return arc.sample(seg, i);
  const double t0 = seg.times[i];
  const double t1 = seg.times[i + 1];
  Eigen::Map<const Vec> y0(seg.values.data() + i * n, n);
  Eigen::Map<const Vec> y1(seg.values.data() + (i + 1) * n, n);
  if (uses_hermite(arc, seg)) {
    const double h = t1 - t0;
    const double th = (t - t0) / h;
    Eigen::Map<const Vec> m0(seg.derivatives.data() + i * n, n);
    Eigen::Map<const Vec> m1(seg.derivatives.data() + (i + 1) * n, n);
    const double th2 = th * th;
    const double th3 = th2 * th;
    return (2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * m0 + (-2 * th3 + 3 * th2) * y1 +
           (th3 - th2) * h * m1;
  }
  const double w = (t - t0) / (t1 - t0);
  return (1 - w) * y0 + w * y1;
}

Vec HybridArc::eval(double t, int j) const {
  if (!contains(t, j)) throw DomainError("hybrid arc queried off its domain at " + point_str(t, j), t, j);
  return interpolate(*this, *find(j), t);
}

HybridTimeDomain HybridArc::domain() const {
  HybridTimeDomain d;
  for (const Segment& s : segments_) {
    if (s.j >= 0) {
      if (s.j == 0)
        d.forward.push_back({std::max(s.begin(), 0.0), std::max(s.end(), 0.0), 0});
      else
        d.forward.push_back({s.begin(), s.end(), s.j});
    }
  }
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    if (it->j <= 0 && it->begin() <= 0.0) d.memory.push_back({it->begin(), std::min(it->end(), 0.0), it->j});
  }
  return d;
}

void HybridArc::open_segment(int j, double t, const Vec& value) {
  if (!segments_.empty() && j != max_j() + 1) throw PreconditionError("new segment must increment j by one");
  Segment s;
  s.j = j;
  s.times.push_back(t);
  s.values.assign(value.data(), value.data() + dim_);
  segments_.push_back(std::move(s));
}

void HybridArc::push_sample(double t, const Vec& value) {
  Segment& s = segments_.back();
  if (!(t > s.times.back())) throw PreconditionError("samples must be appended in increasing time");
  s.times.push_back(t);
  s.values.insert(s.values.end(), value.data(), value.data() + dim_);
  if (!s.derivatives.empty()) s.derivatives.clear();
}

void HybridArc::truncate_last_segment(std::size_t keep) {
  Segment& s = segments_.back();
  keep = std::max<std::size_t>(keep, 1);
  if (keep >= s.size()) return;
  s.times.resize(keep);
  s.values.resize(keep * static_cast<std::size_t>(dim_));
  if (!s.derivatives.empty()) s.derivatives.resize(keep * static_cast<std::size_t>(dim_));
}

// ---------------------------------------------------------------- memory arcs

DomainCheck check_memory_class(const HybridArc& arc, double delta, double tol) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Segment& s : arc.segments()) lo = std::min(lo, s.begin() + s.j);
  const double eps = tol * std::max(1.0, delta + 1.0);
  if (lo < -delta - 1.0 - eps) return {false, "memory reaches below s + k = -Delta - 1"};
  if (lo > -delta + eps) return {false, "memory does not reach s + k = -Delta"};
  return {};
}

HybridMemoryArc::HybridMemoryArc(HybridArc arc, double delta) : arc_(std::move(arc)), delta_(delta) {
  if (!(delta_ >= 0.0) || !std::isfinite(delta_)) throw PreconditionError("memory size must be finite and >= 0");
  if (arc_.empty() || arc_.max_j() != 0) throw PreconditionError("memory arc must have its newest segment at k = 0");
  for (const Segment& s : arc_.segments())
    if (s.end() > kTimeTol) throw PreconditionError("memory arc times must be nonpositive");
  if (std::abs(arc_.segments().back().end()) > kTimeTol) throw PreconditionError("memory arc must contain (0, 0)");
  if (auto c = check_memory_class(arc_, delta_); !c) throw PreconditionError("memory arc not in M^Delta: " + c.violation);
}

HybridMemoryArc HybridMemoryArc::constant(const Vec& value, double delta, double grid_step) {
  return from_function([&](double) { return value; }, static_cast<int>(value.size()), delta, grid_step);
}

HybridMemoryArc HybridMemoryArc::from_function(const std::function<Vec(double)>& fn, int dim, double delta,
                                               double grid_step) {
  if (!(grid_step > 0.0)) throw PreconditionError("history grid step must be positive");
  Segment s;
  s.j = 0;
  const std::size_t n = delta > 0.0 ? static_cast<std::size_t>(std::ceil(delta / grid_step - 1e-9)) : 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = n == 0 ? 0.0 : -delta * (1.0 - static_cast<double>(i) / static_cast<double>(n));
    Vec v = fn(t);
    if (v.size() != dim) throw PreconditionError("history function returned a vector of the wrong size");
    s.times.push_back(t);
    s.values.insert(s.values.end(), v.data(), v.data() + dim);
  }
  return HybridMemoryArc(HybridArc(dim, {std::move(s)}), delta);
}

Vec HybridMemoryArc::head() const { return arc_.sample(arc_.segments().back(), arc_.segments().back().size() - 1); }

double HybridMemoryArc::depth() const {
  double lo = 0.0;
  for (const Segment& s : arc_.segments()) lo = std::min(lo, s.begin() + s.j);
  return lo;
}

// ---------------------------------------------------------------- operators

Vec eval_arc(const HybridArc& x, double t, int j) { return x.eval(t, j); }

namespace {

struct Level {
  const Segment* seg;
  int k;         // level relative to the window head
  double lower;  // absolute time range of the level that lies at or before t
  double upper;
};

// Levels of x below (t, j), from the newest (k = 0) to the oldest.
std::vector<Level> levels_before(const HybridArc& x, double t, int j) {
  if (j < 0 || t < -ttol(t) || !x.contains(t, j))
    throw DomainError("window origin " + point_str(t, j) + " is not in the forward domain", t, j);
  std::vector<Level> out;
  for (int k = 0; x.find(j + k) != nullptr; --k) {
    const Segment* s = x.find(j + k);
    out.push_back({s, k, s->begin(), k == 0 ? std::min(t, s->end()) : s->end()});
  }
  return out;
}

double delta_inf_levels(const std::vector<Level>& levels, double t, int j, double Delta) {
  for (const Level& L : levels) {
    const double hi = (L.upper - t) + L.k;
    const double lo = (L.lower - t) + L.k;
    const double eps = ttol(t) + kTimeTol;
    if (hi < -Delta - eps) return -hi;
    if (lo <= -Delta + eps) return Delta;
  }
  throw InsufficientHistory("history too short for memory size " + std::to_string(Delta) + " at " + point_str(t, j),
                            t, j);
}

}  // namespace

double delta_inf(const HybridArc& x, double t, int j, double Delta) {
  return delta_inf_levels(levels_before(x, t, j), t, j, Delta);
}

HybridMemoryArc memory_window(const HybridArc& x, double t, int j, double Delta) {
  const auto levels = levels_before(x, t, j);
  const double D = delta_inf_levels(levels, t, j, Delta);
  std::vector<Segment> segs;
  for (const Level& L : levels) {
    const double s_cut = -D - L.k;  // keep s >= s_cut on this level
    const double hi_s = L.upper - t;
    const double eps = ttol(t) + kTimeTol;
    if (s_cut > hi_s + eps) break;
    if (std::abs(s_cut - hi_s) <= eps) {
      // the cut lands on the top of this level: a single boundary point
      Segment p;
      p.j = L.k;
      p.times.push_back(L.k == 0 ? 0.0 : hi_s);
      Vec v = interpolate(x, *L.seg, L.upper);
      p.values.assign(v.data(), v.data() + x.dim());
      segs.push_back(std::move(p));
      break;
    }
    const double from = std::max(L.lower, t + s_cut);
    const bool cut_inside = t + s_cut > L.lower + eps;
    Segment seg = slice(x, *L.seg, from, L.upper, t, L.k,
                        cut_inside ? s_cut : std::numeric_limits<double>::quiet_NaN());
    if (L.k == 0) seg.times.back() = 0.0;
    segs.push_back(std::move(seg));
    if (cut_inside || (L.lower - t) + L.k <= -D + eps) break;
  }
  std::reverse(segs.begin(), segs.end());
  // Level tops must coincide with the next level's bottom exactly.
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    segs[i].times.back() = segs[i + 1].times.front();
    if (segs[i].times.size() > 1 && !(segs[i].times.back() > segs[i].times[segs[i].times.size() - 2])) {
      segs[i].times.erase(segs[i].times.end() - 2);
      segs[i].values.erase(segs[i].values.end() - 2 * x.dim(), segs[i].values.end() - x.dim());
      if (!segs[i].derivatives.empty())
        segs[i].derivatives.erase(segs[i].derivatives.end() - 2 * x.dim(), segs[i].derivatives.end() - x.dim());
    }
  }
  return HybridMemoryArc(HybridArc(x.dim(), std::move(segs), x.interpolation()), Delta);
}

HybridMemoryArc append_jump(const HybridMemoryArc& phi, const Vec& g) {
  const HybridArc& a = phi.arc();
  if (g.size() != a.dim()) throw PreconditionError("jump value has the wrong dimension");
  const double Delta = phi.delta();
  std::vector<Segment> segs;
  for (const Segment& s : a.segments()) {
    const int k = s.j - 1;
    const double s_min = -Delta - 1.0 - k;
    const double eps = kTimeTol * std::max(1.0, std::abs(s_min));
    if (s.end() < s_min - eps) continue;
    if (s.begin() < s_min - eps) {
      segs.push_back(slice(a, s, s_min, s.end(), 0.0, k));
    } else {
      Segment c = s;
      c.j = k;
      segs.push_back(std::move(c));
    }
  }
  Segment head;
  head.j = 0;
  head.times.push_back(0.0);
  head.values.assign(g.data(), g.data() + g.size());
  segs.push_back(std::move(head));
  return HybridMemoryArc(HybridArc(a.dim(), std::move(segs), a.interpolation()), Delta);
}

Vec delayed_value(const HybridMemoryArc& phi, double s) {
  const auto& segs = phi.arc().segments();
  for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
    const double eps = ttol(s);
    if (s >= it->begin() - eps && s <= it->end() + eps) return interpolate(phi.arc(), *it, s);
  }
  if (s > 0.0) throw DomainError("delayed lookup in the future at s = " + std::to_string(s), s, 0);
  throw InsufficientHistory("delayed lookup at s = " + std::to_string(s) + " precedes the stored history", s, 0);
}

double window_max(const HybridMemoryArc& phi, const PointFn& fn, const WindowMaxOptions& opts) {
  const HybridArc& a = phi.arc();
  if (a.empty()) throw PreconditionError("window maximum of an empty arc");
  const double floor_sk = -phi.delta() - 1.0 - kTimeTol;
  double best = -std::numeric_limits<double>::infinity();
  for (const Segment& s : a.segments()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.times[i] + s.j < floor_sk) continue;
      best = std::max(best, fn(a.sample(s, i)));
    }
  }
  if (!opts.refine) return best;
  for (int level = 1; level <= opts.max_levels; ++level) {
    const int parts = 1 << level;
    double refined = best;
    for (const Segment& s : a.segments()) {
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double t0 = std::max(s.times[i], floor_sk - s.j);
        const double t1 = s.times[i + 1];
        if (t1 <= t0) continue;
        for (int m = 1; m < parts; m += 2) {
          const double t = t0 + (t1 - t0) * m / parts;
          refined = std::max(refined, fn(interpolate(a, s, t)));
        }
      }
    }
    const bool converged = refined - best <= opts.rel_tol * std::max(std::abs(refined), 1e-300);
    best = refined;
    if (converged) break;
  }
  return best;
}

double sup_norm_W(const HybridMemoryArc& phi, const PointFn& distW, const WindowMaxOptions& opts) {
  return window_max(phi, distW, opts);
}

double vbar(const HybridMemoryArc& phi, const PointFn& V, const WindowMaxOptions& opts) {
  return window_max(phi, V, opts);
}

double integrate_envelope(const HybridMemoryArc& phi, double a, double b, const PointFn& fn) {
  if (b < a) throw PreconditionError("integration bounds out of order");
  const HybridArc& arc = phi.arc();
  double total = 0.0;
  for (const Segment& s : arc.segments()) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const double lo = std::max(a, s.times[i]);
      const double hi = std::min(b, s.times[i + 1]);
      if (hi <= lo) continue;
      const double mid = 0.5 * (lo + hi);
      total += (hi - lo) / 6.0 *
               (fn(interpolate(arc, s, lo)) + 4.0 * fn(interpolate(arc, s, mid)) + fn(interpolate(arc, s, hi)));
    }
  }
  return total;
}

}  // namespace hymem
