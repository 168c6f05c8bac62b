#include "hymem/cli.hpp"

#include "hymem/arc_io.hpp"
#include "hymem/config.hpp"
#include "hymem/errors.hpp"
#include "hymem/examples.hpp"
#include "hymem/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace hymem::cli {

namespace {

struct Options {
  std::string command;
  std::string system = "example1";
  std::vector<std::string> sets;
  std::optional<double> t_max;
  std::optional<int> j_max;
  std::optional<double> step;
  std::optional<std::string> jump_priority;
  std::optional<std::size_t> samples;
  std::uint64_t seed = 0;
  std::optional<double> slack;
  unsigned threads = 0;
  std::string out_path;
  std::string report_path;
  std::string plot_path;
  bool timing = false;
};

// Overrides under "certificate." configure the certificate, not the plant.
struct CertificateOverrides {
  std::optional<double> lyapunov_decay;
  std::optional<double> alpha3;
  std::optional<Mat> K;
};

CertificateOverrides split_certificate_overrides(std::vector<std::string>& sets) {
  CertificateOverrides c;
  std::vector<std::string> plant;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    if (key.rfind("certificate.", 0) != 0) {
      plant.push_back(kv);
      continue;
    }
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' must have the form key=value", key);
    const std::string field = key.substr(12);
    const auto v = nlohmann::json::parse(kv.substr(eq + 1), nullptr, false);
    if (field == "K") {
      c.K = example1_params({"K=" + kv.substr(eq + 1)}).K;
      continue;
    }
    if (!v.is_number()) throw ConfigError(key + " must be a number", key);
    if (field == "lyapunov_decay") c.lyapunov_decay = v.get<double>();
    else if (field == "alpha3") c.alpha3 = v.get<double>();
    else throw ConfigError("unknown field '" + key + "'", key);
  }
  sets = std::move(plant);
  return c;
}

SimOptions sim_options(const Options& o, const ResolvedSystem& rs) {
  SimOptions s;
  rs.sim.apply(s);
  if (o.t_max) s.t_max = *o.t_max;
  if (o.j_max) s.j_max = *o.j_max;
  if (o.step) s.step = *o.step;
  if (o.jump_priority) s.jump_priority = *o.jump_priority == "jump";
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.report_path.empty())
    out << text;
  else
    write_file(o.report_path, text);
}

unsigned thread_count(const Options& o) {
  if (o.threads > 0) return o.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  std::vector<std::string> sets = o.sets;
  split_certificate_overrides(sets);
  ResolvedSystem rs = resolve_system(o.system, sets);
  const SimOptions so = sim_options(o, rs);
  const HybridMemoryArc init = make_initial_arc(rs.system.spec, rs.initial_history);
  const Trajectory tr = simulate(rs.system.spec, init, so);
  if (!o.out_path.empty()) write_file(o.out_path, arc_to_csv(tr.arc, rs.system.spec.state_names));
  if (!o.plot_path.empty()) {
    std::ostringstream ss;
    write_plot_data(tr, rs.system.target, ss);
    write_file(o.plot_path, ss.str());
  }
  emit(o, run_summary_json(run_summary(tr, rs.system.target), {rs.system.spec.name, o.seed, o.timing, seconds_since(start)}),
       out);
  return tr.termination == Termination::Error ? kRuntime : kOk;
}

CheckOptions check_options(const Options& o) {
  CheckOptions c;
  c.slack = o.slack;
  c.threads = thread_count(o);
  return c;
}

SamplerOptions sampler_options(const Options& o) {
  SamplerOptions s;
  s.count = o.samples.value_or(10000);
  s.seed = o.seed;
  return s;
}

int finish_check(const Options& o, const CheckReport& r, const std::string& system, std::ostream& out,
                 std::ostream& err) {
  emit(o, check_report_json(r, {system, o.seed, o.timing, std::nullopt}), out);
  err << r.certificate << ": " << r.samples << " samples, " << r.violation_count << " violations\n";
  return r.ok() ? kOk : kViolations;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> sets = o.sets;
  const CertificateOverrides co = split_certificate_overrides(sets);
  ResolvedSystem rs = resolve_system(o.system, sets);
  const HybridSystem& sys = rs.system;
  const ArcSampler sampler(sys.spec, sampler_options(o));
  const CheckOptions copts = check_options(o);

  if (o.command == "check-razumikhin" || o.command == "check-halanay") {
    if (!rs.example1)
      throw ConfigError("no built-in " + o.command.substr(6) + " certificate for system '" + o.system + "'",
                        "system");
    // The certificate is designed for the nominal feedback gain; a K override
    // changes the plant only, so the check tests the nominal certificate on it.
    Example1Params cp = *rs.example1;
    cp.K = co.K ? *co.K : Example1Params::nominal().K;
    Example1CertificateOptions eo;
    if (co.lyapunov_decay) eo.lyapunov_decay = *co.lyapunov_decay;
    const Example1Certificate cert = make_example1_certificate(cp, eo);
    const CheckReport r = o.command == "check-razumikhin"
                              ? check_razumikhin(sys.spec, sys.target, cert.razumikhin, sampler, copts)
                              : check_halanay(sys.spec, sys.target, cert.halanay, sampler, copts);
    return finish_check(o, r, sys.spec.name, out, err);
  }
  if (!rs.example2)
    throw ConfigError("no built-in krasovskii certificate for system '" + o.system + "'", "system");
  const Example2Certificate cert = make_example2_certificate(*rs.example2, co.alpha3);
  return finish_check(o, check_krasovskii(sys.spec, sys.target, cert.krasovskii, sampler, copts), sys.spec.name, out,
                      err);
}

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

int cmd_kl(const Options& o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  std::vector<std::string> sets = o.sets;
  split_certificate_overrides(sets);
  ResolvedSystem rs = resolve_system(o.system, sets);
  const SystemSpec& spec = rs.system.spec;
  SimOptions so = sim_options(o, rs);
  if (!o.t_max && !rs.sim.t_max) so.t_max = 30.0;
  const std::size_t count = o.samples.value_or(50);
  const int ci = spec.clock ? spec.clock->index : -1;

  std::vector<Trajectory> trajs(count);
  parallel_for(count, thread_count(o), [&](std::size_t i) {
    std::mt19937_64 g(ArcSampler::sub_seed(o.seed, i));
    // Constant history with |x|_W at most 1: a random direction scaled by a
    // uniform radius; the clock starts uniformly in its period.
    Vec x = Vec::Zero(spec.n);
    for (int c = 0; c < spec.n; ++c)
      if (c != ci) x(c) = 2.0 * unit(g) - 1.0;
    const double nrm = x.norm();
    if (nrm > 0.0) x *= unit(g) / nrm;
    if (ci >= 0) x(ci) = unit(g) * spec.clock->period;
    const HybridMemoryArc init = HybridMemoryArc::constant(
        x, spec.memory_size, spec.clock ? spec.clock->period / 50.0 : std::max(spec.memory_size, 1e-3) / 50.0);
    trajs[i] = simulate(spec, init, so);
  });
  const KLReport rep = check_kl_envelope(trajs, rs.system.target, {1e-1, 1e-2, 1e-3}, {0.25, 0.5, 1.0});
  emit(o, kl_report_json(rep, {spec.name, o.seed, o.timing, seconds_since(start)}), out);
  err << "kl: bounded " << (rep.bounded ? "yes" : "no") << ", attractive " << (rep.attractive ? "yes" : "no") << "\n";
  return rep.ok() ? kOk : kViolations;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--system", o.system, "example1, example2, a JSON config path, or inline JSON");
  sub->add_option("--set", o.sets, "key=value override (repeatable; dotted paths for JSON configs)");
  sub->add_option("--t-max", o.t_max, "continuous-time horizon");
  sub->add_option("--j-max", o.j_max, "jump horizon");
  sub->add_option("--step", o.step, "integrator step");
  sub->add_option("--jump-priority", o.jump_priority, "what to do in C and D: jump or flow")
      ->check(CLI::IsMember({"jump", "flow"}));
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
  sub->add_option("--out", o.out_path, "trajectory CSV path");
  sub->add_option("--report", o.report_path, "JSON report path (default: standard output)");
  sub->add_option("--plot", o.plot_path, "plot data CSV path");
  sub->add_flag("--timing", o.timing, "include elapsed seconds in reports");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and stability checks for hybrid systems with memory", "hymem"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate one solution from the configured initial history"},
      {"check-razumikhin", "sample the Razumikhin conditions of the built-in certificate"},
      {"check-halanay", "sample the Halanay conditions of the built-in certificate"},
      {"check-krasovskii", "sample the Krasovskii conditions of the built-in certificate"},
      {"check-kl", "check boundedness and attractivity over random constant histories"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    if (name != "simulate") {
      sub->add_option("--samples", o.samples, "number of sampled arcs or trajectories");
      sub->add_option("--slack", o.slack, "slack for every condition");
    }
    sub->callback([&o, n = name] { o.command = n; });
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (o.command == "simulate") return cmd_simulate(o, out);
    if (o.command == "check-kl") return cmd_kl(o, out, err);
    return cmd_check(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.field().empty()) err << " [" << e.field() << "]";
    err << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace hymem::cli
