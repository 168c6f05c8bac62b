#include "hymem/config.hpp"

#include "hymem/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hymem {

using nlohmann::json;

namespace {

enum class FlatShape { Row, Column, Reject };

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError((where.empty() ? "config" : where) + " must be an object", where);
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown field '" + join(where, key) + "'", join(where, key));
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field + " must be a number", field);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(field + " must be finite", field);
  return x;
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field + " must be an integer", field);
  return v.get<int>();
}

Vec vector_of(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field + " must be a nonempty array of numbers", field);
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], field);
  return out;
}

Mat matrix_of(const json& v, const std::string& field, FlatShape flat = FlatShape::Reject) {
  if (!v.is_array() || v.empty()) throw ConfigError(field + " must be a nonempty array", field);
  if (!v[0].is_array()) {
    if (flat == FlatShape::Reject && v.size() != 1)
      throw ConfigError(field + " must be an array of rows", field);
    const Vec x = vector_of(v, field);
    if (flat == FlatShape::Column) return x;
    return x.transpose();
  }
  const std::size_t cols = v[0].size();
  Mat M(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols || cols == 0)
      throw ConfigError(field + " rows must be arrays of equal nonzero length", field);
    for (std::size_t k = 0; k < cols; ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number(v[i][k], field);
  }
  return M;
}

std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' must have the form key=value");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

// Values are JSON; anything that does not parse is taken as a bare string.
json override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

// Dotted path with optional [i] indices: "flow.delayed[0].delay" or "flow.delayed.0.delay".
std::vector<std::string> path_tokens(const std::string& key) {
  std::string k = key;
  std::string norm;
  for (char c : k) {
    if (c == '[') norm += '.';
    else if (c != ']') norm += c;
  }
  std::vector<std::string> out;
  std::stringstream ss(norm);
  std::string tok;
  while (std::getline(ss, tok, '.'))
    if (!tok.empty()) out.push_back(tok);
  if (out.empty()) throw ConfigError("empty override key");
  return out;
}

void apply_json_override(json& doc, const std::string& kv) {
  const auto [key, text] = split_override(kv);
  const auto toks = path_tokens(key);
  json* cur = &doc;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string& t = toks[i];
    const bool last = i + 1 == toks.size();
    if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(t);
      } catch (const std::exception&) {
        throw ConfigError("override path '" + key + "' indexes an array with '" + t + "'", key);
      }
      if (idx >= cur->size()) throw ConfigError("override index out of range in '" + key + "'", key);
      cur = &(*cur)[idx];
    } else {
      if (cur->is_null()) *cur = json::object();
      if (!cur->is_object()) throw ConfigError("override path '" + key + "' descends into a non-object", key);
      cur = &(*cur)[t];
    }
    if (last) *cur = override_value(text);
  }
}

InitialHistory parse_history(const json& h, const std::string& where) {
  require_keys(h, where, {"kind", "value", "points"});
  if (!h.contains("kind") || !h["kind"].is_string())
    throw ConfigError(where + ".kind must be \"constant\" or \"samples\"", where + ".kind");
  InitialHistory out;
  const std::string kind = h["kind"].get<std::string>();
  if (kind == "constant") {
    if (!h.contains("value")) throw ConfigError(where + ".value is required for a constant history", where + ".value");
    if (h.contains("points")) throw ConfigError(where + ".points is not allowed for a constant history", where + ".points");
    out.kind = InitialHistory::Kind::Constant;
    out.value = vector_of(h["value"], where + ".value");
  } else if (kind == "samples") {
    if (!h.contains("points")) throw ConfigError(where + ".points is required for sampled history", where + ".points");
    if (h.contains("value")) throw ConfigError(where + ".value is not allowed for sampled history", where + ".value");
    const json& pts = h["points"];
    if (!pts.is_array() || pts.empty()) throw ConfigError(where + ".points must be a nonempty array", where + ".points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string f = where + ".points[" + std::to_string(i) + "]";
      const Vec row = vector_of(pts[i], f);
      if (row.size() < 3) throw ConfigError(f + " must be [s, k, x...]", f);
      if (row(1) != std::floor(row(1))) throw ConfigError(f + " has a non-integer k", f);
      out.points.push_back({row(0), static_cast<int>(row(1)), row.tail(row.size() - 2)});
    }
    out.kind = InitialHistory::Kind::Samples;
  } else {
    throw ConfigError(where + ".kind must be \"constant\" or \"samples\"", where + ".kind");
  }
  return out;
}

SimOverrides parse_sim(const json& s, const std::string& where) {
  require_keys(s, where, {"t_max", "j_max", "step", "jump_priority"});
  SimOverrides o;
  if (s.contains("t_max")) o.t_max = number(s["t_max"], where + ".t_max");
  if (s.contains("j_max")) o.j_max = integer(s["j_max"], where + ".j_max");
  if (s.contains("step")) o.step = number(s["step"], where + ".step");
  if (s.contains("jump_priority")) {
    const json& v = s["jump_priority"];
    if (!v.is_string() || (v != "jump" && v != "flow"))
      throw ConfigError(where + ".jump_priority must be \"jump\" or \"flow\"", where + ".jump_priority");
    o.jump_priority = v == "jump";
  }
  if (o.t_max && !(*o.t_max > 0.0)) throw ConfigError(where + ".t_max must be positive", where + ".t_max");
  if (o.j_max && *o.j_max <= 0) throw ConfigError(where + ".j_max must be positive", where + ".j_max");
  if (o.step && !(*o.step > 0.0)) throw ConfigError(where + ".step must be positive", where + ".step");
  return o;
}

std::vector<std::pair<double, Mat>> parse_delayed(const json& arr, const std::string& where, const char* mat_key) {
  if (!arr.is_array()) throw ConfigError(where + " must be an array", where);
  std::vector<std::pair<double, Mat>> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string f = where + "[" + std::to_string(i) + "]";
    require_keys(arr[i], f, {"delay", mat_key});
    if (!arr[i].contains("delay") || !arr[i].contains(mat_key))
      throw ConfigError(f + " needs both delay and " + mat_key, f);
    out.emplace_back(number(arr[i]["delay"], f + ".delay"), matrix_of(arr[i][mat_key], f + "." + mat_key));
  }
  return out;
}

LinearDelayConfig parse_document(const json& doc) {
  require_keys(doc, "", {"dimension", "memory_size", "flow", "jump", "target_set", "initial_history", "sim",
                         "state_names"});
  for (const char* req : {"dimension", "memory_size", "flow"})
    if (!doc.contains(req)) throw ConfigError(std::string("missing required field '") + req + "'", req);
  LinearDelayConfig c;
  c.spec.dimension = integer(doc["dimension"], "dimension");
  c.spec.memory_size = number(doc["memory_size"], "memory_size");

  const json& flow = doc["flow"];
  require_keys(flow, "flow", {"A0", "delayed"});
  if (!flow.contains("A0")) throw ConfigError("missing required field 'flow.A0'", "flow.A0");
  c.spec.A0 = matrix_of(flow["A0"], "flow.A0");
  if (flow.contains("delayed")) c.spec.flow_delayed = parse_delayed(flow["delayed"], "flow.delayed", "A");

  if (doc.contains("jump") && !doc["jump"].is_null()) {
    const json& jump = doc["jump"];
    require_keys(jump, "jump", {"period", "J0", "delayed"});
    if (!jump.contains("period")) throw ConfigError("missing required field 'jump.period'", "jump.period");
    c.spec.period = number(jump["period"], "jump.period");
    if (jump.contains("J0")) c.spec.J0 = matrix_of(jump["J0"], "jump.J0");
    if (jump.contains("delayed")) c.spec.jump_delayed = parse_delayed(jump["delayed"], "jump.delayed", "J");
  }
  if (doc.contains("target_set")) {
    if (!doc["target_set"].is_string())
      throw ConfigError("target_set must be \"origin_times_clock\" or \"origin\"", "target_set");
    c.spec.target_set = doc["target_set"].get<std::string>();
  }
  if (doc.contains("state_names")) {
    const json& names = doc["state_names"];
    if (!names.is_array()) throw ConfigError("state_names must be an array of strings", "state_names");
    for (const auto& n : names) {
      if (!n.is_string()) throw ConfigError("state_names must be an array of strings", "state_names");
      c.spec.state_names.push_back(n.get<std::string>());
    }
    if (static_cast<int>(c.spec.state_names.size()) != c.spec.dimension)
      throw ConfigError("state_names must have one entry per state", "state_names");
  }
  if (doc.contains("initial_history")) c.initial_history = parse_history(doc["initial_history"], "initial_history");
  if (doc.contains("sim")) c.sim = parse_sim(doc["sim"], "sim");
  return c;
}

json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
}

// Example parameters: each override key maps onto one field.
template <class Params>
using Setter = std::function<void(Params&, const json&, const std::string&)>;

template <class Params>
Params apply_params(Params p, const std::vector<std::string>& overrides, const std::map<std::string, Setter<Params>>& setters) {
  for (const auto& kv : overrides) {
    const auto [key, text] = split_override(kv);
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown parameter '" + key + "'", key);
    it->second(p, override_value(text), key);
  }
  return p;
}

}  // namespace

void SimOverrides::apply(SimOptions& o) const {
  if (t_max) o.t_max = *t_max;
  if (j_max) o.j_max = *j_max;
  if (step) o.step = *step;
  if (jump_priority) o.jump_priority = *jump_priority;
}

LinearDelayConfig parse_linear_delay_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json doc = parse_text(json_text, "config");
  for (const auto& kv : overrides) apply_json_override(doc, kv);
  LinearDelayConfig c = parse_document(doc);
  build_linear_delay_system(c.spec);  // dimension and delay checks
  return c;
}

LinearDelayConfig load_linear_delay_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_linear_delay_config(ss.str(), overrides);
}

Example1Params example1_params(const std::vector<std::string>& overrides) {
  static const std::map<std::string, Setter<Example1Params>> setters = {
      {"A", [](Example1Params& p, const json& v, const std::string& k) { p.A = matrix_of(v, k); }},
      {"B", [](Example1Params& p, const json& v, const std::string& k) { p.B = matrix_of(v, k, FlatShape::Column); }},
      {"K", [](Example1Params& p, const json& v, const std::string& k) { p.K = matrix_of(v, k, FlatShape::Row); }},
      {"delta", [](Example1Params& p, const json& v, const std::string& k) { p.delta = number(v, k); }},
      {"r", [](Example1Params& p, const json& v, const std::string& k) { p.r = number(v, k); }},
  };
  return apply_params(Example1Params::nominal(), overrides, setters);
}

Example2Params example2_params(const std::vector<std::string>& overrides) {
  // The case selects the base instance, so it is applied before any field.
  Example2Params base = Example2Params::case_II();
  std::vector<std::string> rest;
  for (const auto& kv : overrides) {
    const auto [key, text] = split_override(kv);
    if (key != "case") {
      rest.push_back(kv);
      continue;
    }
    const json v = override_value(text);
    if (v == "I") base = Example2Params::case_I();
    else if (v == "II") base = Example2Params::case_II();
    else throw ConfigError("case must be I or II", "case");
  }
  static const std::map<std::string, Setter<Example2Params>> setters = {
      {"a", [](Example2Params& p, const json& v, const std::string& k) { p.a = number(v, k); }},
      {"b", [](Example2Params& p, const json& v, const std::string& k) { p.b = number(v, k); }},
      {"rho", [](Example2Params& p, const json& v, const std::string& k) { p.rho = number(v, k); }},
      {"r", [](Example2Params& p, const json& v, const std::string& k) { p.r = number(v, k); }},
      {"delta", [](Example2Params& p, const json& v, const std::string& k) { p.delta = number(v, k); }},
      {"sigma", [](Example2Params& p, const json& v, const std::string& k) { p.sigma = number(v, k); }},
      {"mu", [](Example2Params& p, const json& v, const std::string& k) { p.mu = number(v, k); }},
  };
  return apply_params(base, rest, setters);
}

ResolvedSystem resolve_system(const std::string& system, const std::vector<std::string>& overrides) {
  ResolvedSystem out;
  if (system == "example1") {
    out.source = "example1";
    out.example1 = example1_params(overrides);
    out.system = build_example1(*out.example1);
    // z = (1, ..., 1), u = 0, tau = 0
    out.initial_history.value = Vec::Zero(out.system.spec.n);
    out.initial_history.value.head(out.example1->A.rows()).setOnes();
  } else if (system == "example2") {
    out.source = "example2";
    out.example2 = example2_params(overrides);
    out.system = build_example2(*out.example2);
    out.initial_history.value = Vec::Zero(2);
    out.initial_history.value(0) = 1.0;
  } else {
    out.source = "linear";
    const bool inline_json = !system.empty() && system.find_first_not_of(" \t\n") != std::string::npos &&
                             system[system.find_first_not_of(" \t\n")] == '{';
    out.linear = inline_json ? parse_linear_delay_config(system, overrides)
                             : load_linear_delay_config(system, overrides);
    out.system = build_linear_delay_system(out.linear->spec);
    out.sim = out.linear->sim;
    if (out.linear->initial_history) {
      out.initial_history = *out.linear->initial_history;
    } else {
      out.initial_history.value = Vec::Ones(out.system.spec.n);
      if (out.system.spec.clock) out.initial_history.value(out.system.spec.clock->index) = 0.0;
    }
  }
  return out;
}

HybridMemoryArc make_initial_arc(const SystemSpec& spec, const InitialHistory& h, double grid_step) {
  const int n = spec.n;
  const int d = spec.clock ? n - 1 : n;
  // Values may omit the clock, which then starts at 0.
  auto full = [&](const Vec& x, const std::string& field) -> Vec {
    if (x.size() == n) return x;
    if (spec.clock && x.size() == d) {
      Vec y = Vec::Zero(n);
      y.head(d) = x;
      return y;
    }
    throw ConfigError(field + " must have " + std::to_string(d) + (spec.clock ? " or " + std::to_string(n) : "") +
                          " entries",
                      field);
  };
  const double step = grid_step > 0.0 ? grid_step
                      : spec.clock    ? spec.clock->period / 50.0
                                      : std::max(spec.memory_size, 1e-3) / 50.0;
  if (h.kind == InitialHistory::Kind::Constant)
    return HybridMemoryArc::constant(full(h.value, "initial_history.value"), spec.memory_size, step);

  std::map<int, std::vector<std::pair<double, Vec>>> levels;
  for (const auto& p : h.points) levels[p.k].emplace_back(p.s, full(p.x, "initial_history.points"));
  std::vector<Segment> segs;
  for (auto& [k, pts] : levels) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Segment seg;
    seg.j = k;
    for (const auto& [s, x] : pts) {
      seg.times.push_back(s);
      seg.values.insert(seg.values.end(), x.data(), x.data() + n);
    }
    segs.push_back(std::move(seg));
  }
  try {
    return HybridMemoryArc(HybridArc(n, std::move(segs)), spec.memory_size);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("initial_history.points: ") + e.what(), "initial_history.points");
  }
}

}  // namespace hymem
