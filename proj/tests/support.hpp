#pragma once

#include "hymem/hybrid_time.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace hymem::test {

struct Level {
  int j;
  double begin;
  double end;
};

/// Arc with one segment per level; each level is sampled at `samples` evenly
/// spaced times (one sample when the level is a single instant).
inline HybridArc make_arc(int dim, const std::vector<Level>& levels, const std::function<Vec(double, int)>& fn,
                          int samples = 11) {
  std::vector<Segment> segs;
  for (const Level& L : levels) {
    Segment s;
    s.j = L.j;
    const int m = L.end > L.begin ? samples : 1;
    for (int i = 0; i < m; ++i) {
      const double t = m == 1 ? L.begin : L.begin + (L.end - L.begin) * i / (m - 1);
      s.times.push_back(t);
      const Vec v = fn(t, L.j);
      s.values.insert(s.values.end(), v.data(), v.data() + dim);
    }
    segs.push_back(std::move(s));
  }
  return HybridArc(dim, std::move(segs));
}

inline Vec scalar(double x) { return Vec::Constant(1, x); }

/// Random arc with K memory levels (ending at s = 0) followed by forward levels,
/// random sample spacing and values. `delta` receives a memory size for which
/// the initial window is in M^Delta.
struct RandomArc {
  HybridArc arc;
  double delta = 0.0;
};

inline RandomArc random_arc(std::mt19937_64& g, int dim = 2) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> levels_mem(1, 4), levels_fwd(1, 4), samples(1, 12);
  const int K = levels_mem(g);
  const int J = levels_fwd(g);
  // mem[i] is the start time of memory level -i; level 0 ends in forward time.
  double s = 0.0;
  std::vector<double> mem;
  for (int i = 0; i < K; ++i) {
    s -= U(g) < 0.15 ? 0.0 : 0.8 * U(g);
    mem.push_back(s);
  }
  std::vector<Segment> segs;
  // Zero-length levels are single jump instants.
  auto fill = [&](int j, double a, double b) {
    Segment seg;
    seg.j = j;
    const int m = b > a ? std::max(2, samples(g)) : 1;
    std::vector<double> ts;
    for (int i = 0; i < m; ++i) ts.push_back(m == 1 ? a : a + (b - a) * i / (m - 1));
    for (int i = 1; i + 1 < m; ++i) ts[i] += 0.3 * (U(g) - 0.5) * (b - a) / (m - 1);  // jitter
    for (double t : ts) {
      seg.times.push_back(t);
      for (int c = 0; c < dim; ++c) seg.values.push_back(2.0 * U(g) - 1.0);
    }
    segs.push_back(std::move(seg));
  };
  // memory level k < 0 covers [mem[-k], mem[-k-1]]
  for (int k = -(K - 1); k <= -1; ++k) fill(k, mem[-k], mem[-k - 1]);
  // level 0 spans [mem[0], t1]
  double t = U(g) < 0.15 ? 0.0 : 0.8 * U(g);
  fill(0, mem[0], t);
  for (int j = 1; j < J; ++j) {
    const double t2 = t + (U(g) < 0.15 ? 0.0 : 0.8 * U(g));
    fill(j, t, t2);
    t = t2;
  }
  RandomArc out;
  out.arc = HybridArc(dim, std::move(segs));
  const double depth = -(mem.back() - (K - 1));  // -(min s + k) over memory
  out.delta = std::max(0.0, depth - U(g));
  return out;
}

}  // namespace hymem::test
