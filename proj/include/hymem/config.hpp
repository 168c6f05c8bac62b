#pragma once

// System configuration for the command line and the Python module: the JSON
// linear-delay schema, the built-in examples and `key=value` overrides.

#include "hymem/hybrid_time.hpp"
#include "hymem/solver.hpp"
#include "hymem/system.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hymem {

/// Initial data: a constant value over the window, or explicit (s, k, x...) points.
struct InitialHistory {
  enum class Kind { Constant, Samples };
  Kind kind = Kind::Constant;
  Vec value;
  struct Point {
    double s = 0.0;
    int k = 0;
    Vec x;
  };
  std::vector<Point> points;
};

/// Partial simulation options read from a config; unset fields keep the defaults.
struct SimOverrides {
  std::optional<double> t_max;
  std::optional<int> j_max;
  std::optional<double> step;
  std::optional<bool> jump_priority;
  void apply(SimOptions& o) const;
};

struct LinearDelayConfig {
  LinearDelaySpec spec;
  std::optional<InitialHistory> initial_history;
  SimOverrides sim;
};

/// Parses the JSON schema {dimension, memory_size, flow: {A0, delayed: [{delay, A}]},
/// jump: {period, J0, delayed: [{delay, J}]}, target_set, initial_history:
/// {kind, value | points}, sim: {t_max, j_max, step, jump_priority}}. Unknown
/// fields and malformed values throw ConfigError naming the dotted field.
LinearDelayConfig parse_linear_delay_config(const std::string& json_text,
                                            const std::vector<std::string>& overrides = {});
LinearDelayConfig load_linear_delay_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Applies `key=value` overrides (values are JSON) to the example parameters.
/// Example 1 keys: A, B, K, delta, r. Example 2 keys: case (I or II, applied
/// first), a, b, rho, r, delta, sigma, mu.
Example1Params example1_params(const std::vector<std::string>& overrides);
Example2Params example2_params(const std::vector<std::string>& overrides);

/// A system chosen by name ("example1", "example2"), by path to a JSON file, or
/// by inline JSON text starting with '{'.
struct ResolvedSystem {
  std::string source;  // "example1", "example2" or "linear"
  HybridSystem system;
  std::optional<Example1Params> example1;
  std::optional<Example2Params> example2;
  std::optional<LinearDelayConfig> linear;
  InitialHistory initial_history;
  SimOverrides sim;
};

ResolvedSystem resolve_system(const std::string& system, const std::vector<std::string>& overrides = {});

/// Memory arc for the initial history on a grid of `grid_step` (0: period / 50,
/// or memory size / 50 without a clock).
HybridMemoryArc make_initial_arc(const SystemSpec& spec, const InitialHistory& h, double grid_step = 0.0);

}  // namespace hymem
