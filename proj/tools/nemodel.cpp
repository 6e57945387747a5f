// nemodel: command-line front end for the northeast model library.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "northeast/backward_engine.hpp"
#include "northeast/experiments.hpp"
#include "northeast/forward_engine.hpp"
#include "northeast/io.hpp"
#include "northeast/measures.hpp"
#include "northeast/percolation.hpp"
#include "northeast/pgm.hpp"
#include "northeast/simd/kernels.hpp"
#include "northeast/validation.hpp"

#ifndef NEMODEL_VERSION
#define NEMODEL_VERSION "0.0.0"
#endif

namespace {

using json = nlohmann::ordered_json;
using namespace ne;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- parsing helpers ---------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + ": not an integer: '" + s + "'");
  }
}

/// "WxH" anchored at `origin`.
Region parse_extent(const std::string& text, Site origin, const char* what) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2) throw UsageError(std::string(what) + " must look like WxH, got '" + text + "'");
  const int w = to_int(parts[0], what), h = to_int(parts[1], what);
  if (w < 1 || h < 1) throw UsageError(std::string(what) + " sides must be positive");
  return Region(origin, w, h);
}

Site parse_site(const std::string& text, const char* what) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw UsageError(std::string(what) + " must look like X,Y, got '" + text + "'");
  return {to_int(parts[0], what), to_int(parts[1], what)};
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(to_double(trim(part), "--samples"));
  return out;
}

BoundaryRule parse_boundary_arg(const std::string& s) {
  try {
    return parse_boundary(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

InitialKind parse_initial_arg(const std::string& s) {
  try {
    return parse_initial(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

/// Explicit times, or `fallback` clipped to [0, t]; t itself is always last.
std::vector<double> resolve_times(const std::string& text, double t, const std::vector<double>& fallback) {
  std::vector<double> ts = parse_times(text);
  if (ts.empty()) {
    for (double v : fallback)
      if (v >= 0.0 && v < t) ts.push_back(v);
  }
  if (ts.empty() || ts.back() < t) ts.push_back(t);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] >= 0.0) || ts[i] > t) throw UsageError("sample times must lie in [0, t]");
    if (i && !(ts[i] > ts[i - 1])) throw UsageError("sample times must be increasing");
  }
  return ts;
}

std::vector<double> even_grid(double t, int n) {
  std::vector<double> out;
  for (int k = 0; k <= n; ++k) out.push_back(t * k / n);
  return out;
}

std::string site_text(Site s) { return std::to_string(s.x) + "," + std::to_string(s.y); }

const auto kOpenUnit = CLI::Validator(
    [](std::string& s) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(s);
      } catch (const std::exception&) {
        return "not a number: " + s;
      }
      return v > 0.0 && v < 1.0 ? std::string() : "p must lie strictly between 0 and 1, got " + s;
    },
    "in (0,1)");

// --- run bookkeeping ---------------------------------------------------------

struct Globals {
  std::string out = "runs";
  std::string config;
  unsigned workers = 1;
  std::string replay;
};

/// One command invocation: its output directory and manifest.
class Run {
 public:
  Run(const Globals& g, const std::string& experiment, std::uint64_t seed, std::vector<std::string> argv,
      json args)
      : dir_(g.out, experiment, seed) {
    manifest_["tool"] = "nemodel";
    manifest_["version"] = NEMODEL_VERSION;
    manifest_["experiment"] = experiment;
    manifest_["argv"] = argv;
    manifest_["plan"] = std::move(args);
    manifest_["seeds"] = {{"master", seed}};
    manifest_["workers"] = g.workers;
    manifest_["simd_isa"] = std::string(simd::to_string(simd::active_isa()));
    manifest_["started"] = io::utc_timestamp();
  }

  io::RunDirectory& dir() { return dir_; }
  json& seeds() { return manifest_["seeds"]; }

  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    dir_.write(name, [&](std::ostream& os) {
      io::CsvWriter w(os, header);
      for (const auto& r : rows) w.row(r);
    });
  }

  void finish(json summary) {
    manifest_["finished"] = io::utc_timestamp();
    json outs = json::array();
    for (const auto& f : dir_.files()) outs.push_back({{"file", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    manifest_["outputs"] = outs;
    manifest_["summary"] = std::move(summary);
    const std::string text = manifest_.dump(2) + "\n";
    std::ofstream(dir_.path() / "manifest.json", std::ios::binary) << text;
    std::cout << "run directory: " << dir_.path().string() << "\n";
  }

 private:
  io::RunDirectory dir_;
  json manifest_;
};

std::string num(double v) { return io::csv_number(v); }

json fit_json(const ExponentialFit& f) {
  json j = {{"ok", f.ok}};
  if (f.ok) {
    j["rate"] = f.rate;
    j["log_prefactor"] = f.log_prefactor;
    j["r2"] = f.r2;
    j["points"] = f.points;
    j["t_first"] = f.t_first;
    j["t_last"] = f.t_last;
  } else {
    j["reason"] = f.reason;
  }
  return j;
}

// --- command options ---------------------------------------------------------

struct SimOptions {
  double p = 0.8;
  std::string window = "64x64";
  std::string origin = "0,0";
  std::string boundary = "ghost-ones";
  double t = 100.0;
  std::uint64_t seed = 1;
  std::string engine = "graphical";
  std::string samples;
  std::string initial = "bernoulli";
  std::uint64_t budget = BackwardEngine::kDefaultBudget;
};

struct PlanOptions {
  double p = 0.8;
  std::string window = "64x64";
  std::string boundary = "ghost-ones";
  double t = 100.0;
  std::string samples;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  std::string initial = "bernoulli";
};

struct ExperimentOptions {
  PlanOptions plan;
  std::string block = "2x2";
  std::string block_at;  // default: centred in the window
  std::string site;      // default: window centre
  double margin = 0.25;
  std::uint64_t trials = 100000;
  std::uint32_t depth = 1000;
  double tolerance = 0.02;
};

struct ValidateOptions {
  std::string level = "fast";
  std::uint64_t seed = 1;
  bool fault_mark = false;
};

void add_plan_options(CLI::App* sub, PlanOptions& o) {
  sub->add_option("--p", o.p, "Reset probability")->check(kOpenUnit);
  sub->add_option("--window", o.window, "Window size WxH, origin at (0,0)");
  sub->add_option("--boundary", o.boundary, "ghost-ones, ghost-zeros or periodic");
  sub->add_option("--t", o.t, "Final time");
  sub->add_option("--samples", o.samples, "Comma-separated sample times");
  sub->add_option("--replicas", o.replicas, "Independent replicas");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--initial", o.initial, "bernoulli, all-zeros, all-ones or quadrant-zero");
}

ExperimentPlan make_plan(const PlanOptions& o, const Globals& g, std::vector<double> times) {
  ExperimentPlan plan;
  plan.p = o.p;
  plan.window = parse_extent(o.window, {0, 0}, "--window");
  plan.boundary = parse_boundary_arg(o.boundary);
  if (plan.boundary == BoundaryRule::HalfPlaneExperiment) throw UsageError("experiments need a finite window boundary");
  plan.t_max = o.t;
  plan.sample_times = std::move(times);
  plan.replicas = o.replicas;
  plan.seed = o.seed;
  plan.initial = parse_initial_arg(o.initial);
  plan.workers = std::max(1u, g.workers);
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return plan;
}

Region centred_block(const Region& window, const std::string& extent, const std::string& at) {
  Region b = parse_extent(extent, {0, 0}, "--block");
  const Site o = at.empty() ? Site{window.origin().x + (window.width() - b.width()) / 2,
                                   window.origin().y + (window.height() - b.height()) / 2}
                            : parse_site(at, "--block-at");
  b = Region(o, b.width(), b.height());
  if (!window.contains(b.sw_corner()) || !window.contains(b.ne_corner())) throw UsageError("block must lie inside the window");
  return b;
}

// --- simulate ----------------------------------------------------------------

Configuration simulate_initial(const SimOptions& o, const Region& window, BoundaryRule b) {
  switch (parse_initial_arg(o.initial)) {
    case InitialKind::AllZeros: return Configuration(window, b, 0);
    case InitialKind::AllOnes: return Configuration(window, b, 1);
    case InitialKind::Bernoulli: return sample_bernoulli(window, o.p, o.seed, b);
    case InitialKind::QuadrantZero: {
      Configuration c = sample_bernoulli(window, o.p, o.seed, b);
      for (std::size_t i = 0; i < window.size(); ++i) {
        const Site s = window.site_at(i);
        if (s.x >= 0 && s.y >= 0) c.spins()[i] = 0;
      }
      return c;
    }
  }
  return {};
}

int cmd_simulate(const SimOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
                 std::optional<io::RunDirectory>* produced) {
  const Region window = parse_extent(o.window, parse_site(o.origin, "--origin"), "--window");
  const BoundaryRule boundary = parse_boundary_arg(o.boundary);
  if (boundary == BoundaryRule::HalfPlaneExperiment) throw UsageError("simulate needs a finite window boundary");
  if (!(o.t >= 0.0) || !std::isfinite(o.t)) throw UsageError("--t must be finite and >= 0");
  if (o.engine != "graphical" && o.engine != "rejection-free" && o.engine != "backward")
    throw UsageError("--engine must be graphical, rejection-free or backward");
  if (o.engine == "rejection-free" && boundary == BoundaryRule::Periodic)
    throw UsageError("the rejection-free engine supports ghost boundaries only");
  const std::vector<double> times = resolve_times(o.samples, o.t, {});
  const Configuration init = simulate_initial(o, window, boundary);

  Run run(g, "simulate", o.seed, argv, args);
  run.seeds()["dynamics_domain"] =
      std::string(to_string(o.engine == "rejection-free" ? StreamDomain::RejectionFree : StreamDomain::Dynamics));
  run.seeds()["initial_seed"] = o.seed;

  std::vector<std::vector<std::string>> index_rows;
  std::vector<ResetLogEntry> log;
  json summary;
  auto snapshot = [&](const Configuration& c, double t) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%03zu.pgm", index_rows.size());
    const auto& f = run.dir().write(name, [&](std::ostream& os) { write_snapshot(os, c, t); });
    index_rows.push_back({std::to_string(index_rows.size()), num(t), name, std::to_string(c.count_ones())});
    summary["final_snapshot_sha256"] = f.sha256;
    summary["final_density"] = static_cast<double>(c.count_ones()) / static_cast<double>(window.size());
  };

  if (o.engine == "graphical") {
    GraphicalEngine eng(init, o.p, EventFabric(EventSeed{o.seed, StreamDomain::Dynamics}));
    eng.set_observer([&](const ResetLogEntry& e) { log.push_back(e); });
    for (double t : times) {
      eng.run_until(t);
      snapshot(eng.state().config, t);
    }
  } else if (o.engine == "rejection-free") {
    RejectionFreeEngine eng(init, o.p, o.seed);
    eng.set_observer([&](const ResetLogEntry& e) { log.push_back(e); });
    for (double t : times) {
      eng.run_until(t);
      snapshot(eng.state().config, t);
    }
  } else {
    BackwardEngine eng(EventFabric(EventSeed{o.seed, StreamDomain::Dynamics}), o.p,
                       InitialLaw::from_configuration(init), window, boundary);
    eng.set_budget(o.budget);
    QueryMemo memo;
    QueryStats stats;
    for (double t : times) snapshot(eng.evaluate_region(window, t, memo, &stats), t);
    summary["query_tree_nodes"] = stats.tree_size;
    summary["max_query_depth"] = stats.max_depth;
  }

  run.write_csv("snapshots.csv", {"index", "time", "file", "ones"}, index_rows);
  if (o.engine != "backward") {
    run.dir().write("resets.csv", [&](std::ostream& os) {
      io::CsvWriter w(os, {"time", "site_x", "site_y", "old", "new"});
      for (const auto& e : log)
        w.row({num(e.time), std::to_string(e.site.x), std::to_string(e.site.y), std::to_string(e.old_spin),
               std::to_string(e.new_spin)});
    });
    summary["resets"] = log.size();
  }
  run.finish(summary);
  if (produced) produced->emplace(run.dir());
  return kExitOk;
}

// --- experiments -------------------------------------------------------------

int cmd_mixing(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
               std::optional<io::RunDirectory>* produced) {
  const ExperimentPlan plan = make_plan(o.plan, g, resolve_times(o.plan.samples, o.plan.t, {0.0, 1.0, 10.0, 100.0}));
  const Region block = centred_block(plan.window, o.block, o.block_at);
  const MixingSeries m = block_mixing(plan, block);
  Run run(g, "mixing", plan.seed, argv, args);
  std::vector<std::vector<std::string>> rows, pats;
  bool within = true;
  for (std::size_t i = 0; i < m.times.size(); ++i) {
    rows.push_back({num(m.times[i]), num(m.tv[i]), num(m.noise_floor()), num(m.corner_one_fraction[i])});
    within = within && m.tv[i] <= m.noise_floor();
    for (std::size_t s = 0; s < m.counts[i].size(); ++s)
      pats.push_back({num(m.times[i]), std::to_string(s), std::to_string(m.counts[i][s])});
  }
  run.write_csv("mixing.csv", {"time", "tv", "noise_floor", "sw_corner_one_fraction"}, rows);
  run.write_csv("patterns.csv", {"time", "pattern", "count"}, pats);
  run.finish({{"block", site_text(block.origin()) + " " + o.block},
              {"noise_mean", m.noise_mean},
              {"noise_sd", m.noise_sd},
              {"noise_floor", m.noise_floor()},
              {"tv", m.tv},
              {"all_within_floor", within}});
  if (produced) produced->emplace(run.dir());
  return kExitOk;
}

int cmd_correlation(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv,
                    const json& args, std::optional<io::RunDirectory>* produced) {
  const double t = o.plan.t;
  const ExperimentPlan plan =
      make_plan(o.plan, g, resolve_times(o.plan.samples, t, even_grid(t, std::clamp(static_cast<int>(t), 1, 200))));
  const Site site = o.site.empty() ? Site{plan.window.width() / 2, plan.window.height() / 2}
                                   : parse_site(o.site, "--site");
  if (!plan.window.contains(site)) throw UsageError("--site must lie inside the window");
  const CorrelationSeries c = autocorrelation(plan, site);
  Run run(g, "correlation", plan.seed, argv, args);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < c.times.size(); ++i)
    rows.push_back({num(c.times[i]), num(c.rho[i]), num(c.se[i]), num(c.one_fraction[i])});
  run.write_csv("correlation.csv", {"time", "rho", "se", "one_fraction"}, rows);
  run.finish({{"site", site_text(site)}, {"fit", fit_json(c.fit)}, {"rho_final", c.rho.back()}});
  if (produced) produced->emplace(run.dir());
  return kExitOk;
}

int cmd_tau(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
            std::optional<io::RunDirectory>* produced) {
  const ExperimentPlan plan = make_plan(o.plan, g, parse_times(o.plan.samples));
  const Region block = centred_block(plan.window, o.block, o.block_at);
  const TauTail tail = tau_lambda_tail(plan, block);
  Run run(g, "tau", plan.seed, argv, args);
  std::vector<std::vector<std::string>> rows, taus;
  for (std::size_t i = 0; i < tail.times.size(); ++i)
    rows.push_back({num(tail.times[i]), num(tail.survival[i]), num(tail.se[i])});
  for (std::size_t r = 0; r < tail.taus.size(); ++r)
    taus.push_back({std::to_string(r), tail.taus[r] == kNever ? std::string() : num(tail.taus[r])});
  run.write_csv("tau_survival.csv", {"time", "survival", "se"}, rows);
  run.write_csv("taus.csv", {"replica", "tau"}, taus);
  json median = tail.completed * 2 > tail.taus.size() ? json(tail.median()) : json(nullptr);
  run.finish({{"block", site_text(block.origin()) + " " + o.block},
              {"completed", tail.completed},
              {"median", median},
              {"fit", fit_json(tail.fit)}});
  if (produced) produced->emplace(run.dir());
  return kExitOk;
}

int cmd_freeze(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
               std::optional<io::RunDirectory>* produced) {
  const ExperimentPlan plan = make_plan(o.plan, g, resolve_times(o.plan.samples, o.plan.t, even_grid(o.plan.t, 20)));
  const FreezeSeries f = freeze_fraction(plan);
  Run run(g, "freeze", plan.seed, argv, args);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < f.times.size(); ++i) rows.push_back({num(f.times[i]), num(f.fraction[i])});
  run.write_csv("freeze.csv", {"time", "never_reset_fraction"}, rows);
  run.finish({{"static_frozen_density", f.static_frozen}, {"final_fraction", f.fraction.back()}, {"monotone", f.monotone}});
  if (produced) produced->emplace(run.dir());
  return f.monotone ? kExitOk : kExitFailure;
}

int cmd_shape(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
              std::optional<io::RunDirectory>* produced) {
  std::vector<double> doubling;
  for (double v = 100.0; v < o.plan.t; v *= 2.0) doubling.push_back(v);
  const ExperimentPlan plan = make_plan(o.plan, g, resolve_times(o.plan.samples, o.plan.t, doubling));
  if (!(o.margin > 0.0)) throw UsageError("--margin must be positive");
  ShapeOptions so;
  so.margin_fraction = o.margin;
  const ShapeSeries s = influence_region(plan, so);
  Run run(g, "shape", plan.seed, argv, args);
  run.seeds()["replica_seed"] = replica_seed(plan, 0);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    const ShapeSnapshot& snap = s.snapshots[i];
    char name[64];
    std::snprintf(name, sizeof name, "shape_%03zu.pgm", i);
    run.dir().write(name, [&](std::ostream& os) { write_pgm(os, shape_graymap(s, snap)); });
    rows.push_back({std::to_string(i), num(snap.t), name, std::to_string(snap.influenced_count),
                    std::to_string(snap.queried_count), i ? num(s.hausdorff[i - 1]) : std::string()});
  }
  run.write_csv("shape.csv", {"index", "time", "file", "influenced", "queried", "hausdorff_to_previous"}, rows);
  json summary = {{"monotone", s.monotone}, {"exhausted", s.exhausted}, {"hausdorff", s.hausdorff}};
  if (s.exhausted) {
    summary["exhausted_at"] = s.exhausted_at;
    summary["diagnostic"] = s.diagnostic;
    std::cerr << "note: " << s.diagnostic << "\n";
  }
  run.finish(summary);
  if (produced) produced->emplace(run.dir());
  return s.monotone ? kExitOk : kExitFailure;
}

int cmd_beta_c(const ExperimentOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
               std::optional<io::RunDirectory>* produced) {
  if (o.depth < 100 || o.plan.replicas == 0 || o.trials < 1000 || !(o.tolerance > 0.0))
    throw UsageError("beta-c needs --depth >= 100, --trials >= 1000 and --tolerance > 0");
  const BetaInterval iv = estimate_beta_c(o.trials, o.depth, o.tolerance, o.plan.seed);
  Run run(g, "beta-c", o.plan.seed, argv, args);
  run.seeds()["domain"] = std::string(to_string(StreamDomain::Percolation));
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : iv.steps)
    rows.push_back({num(s.beta), num(s.statistic), num(s.std_error), std::to_string(static_cast<int>(s.phase))});
  run.write_csv("beta_c_steps.csv", {"beta", "statistic", "std_error", "phase"}, rows);
  run.finish({{"trials", o.trials},
              {"depth", o.depth},
              {"beta_c_lo", iv.lo},
              {"beta_c_hi", iv.hi},
              {"width", iv.hi - iv.lo},
              {"p_c_lo", 1.0 - iv.hi},
              {"p_c_hi", 1.0 - iv.lo},
              {"inconclusive_steps", iv.inconclusive_steps}});
  std::cout << "beta_c in [" << iv.lo << ", " << iv.hi << "]\n";
  if (produced) produced->emplace(run.dir());
  return kExitOk;
}

int cmd_validate(const ValidateOptions& o, const Globals& g, const std::vector<std::string>& argv, const json& args,
                 std::optional<io::RunDirectory>* produced) {
  ValidationOptions vo;
  try {
    vo.level = parse_validation_level(o.level);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  vo.seed = o.seed;
  vo.inject_fault = o.fault_mark;
  const ValidationReport rep = run_validation(vo);
  rep.print(std::cout);
  Run run(g, "validate", o.seed, argv, args);
  std::vector<std::vector<std::string>> rows;
  for (const auto& i : rep.items)
    rows.push_back({i.name, i.informational ? "info" : (i.passed ? "pass" : "fail"), i.detail});
  run.write_csv("report.csv", {"check", "status", "detail"}, rows);
  run.finish({{"passed", rep.passed()}, {"level", o.level}, {"fault_injected", o.fault_mark}});
  if (produced) produced->emplace(run.dir());
  return rep.passed() ? kExitOk : kExitFailure;
}

// --- application -------------------------------------------------------------

/// The leaf command's options as explicit --name=value arguments, so a
/// manifest replays without the config file or the defaults of this build.
std::vector<std::string> resolved_argv(const std::vector<CLI::App*>& path, json& args) {
  std::vector<std::string> argv;
  for (const CLI::App* a : path) argv.push_back(a->get_name());
  const CLI::App* leaf = path.back();
  for (const CLI::Option* opt : leaf->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "-h" || opt->get_name().empty()) continue;
    std::string value;
    if (opt->count()) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_type_size() == 0 && value.empty()) value = "false";
    if (value.empty()) continue;  // "--name=" would swallow the next argument
    if (opt->get_lnames().empty()) {
      argv.push_back(value);
      args[opt->get_name()] = value;
    } else {
      argv.push_back("--" + opt->get_lnames().front() + "=" + value);
      args[opt->get_lnames().front()] = value;
    }
  }
  return argv;
}

/// key=value lines applied to options the command line left unset.
void apply_config(const std::string& path, CLI::App* leaf) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = leaf->get_option_no_throw("--" + key);
    if (!opt) throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + leaf->get_name());
    if (opt->count()) continue;
    opt->add_result(value);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

struct Outcome {
  int code = kExitOk;
  std::optional<io::RunDirectory> produced;
};

/// Parses and runs one command line. `args` excludes the program name.
Outcome execute(std::vector<std::string> args, Globals& g, bool allow_replay) {
  CLI::App app("Northeast model: simulation, experiments and validation", "nemodel");
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", NEMODEL_VERSION);
  app.fallthrough();
  app.add_option("--out", g.out, "Root of the output tree");
  app.add_option("--config", g.config, "key=value file for the command's options; flags win");
  app.add_option("--workers", g.workers, "Worker threads for replicas")->check(CLI::Range(1u, 1024u));
  if (allow_replay) app.add_option("--replay", g.replay, "Re-run a manifest and compare digests");
  app.require_subcommand(0, 1);

  SimOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run one engine and write snapshots");
  simulate->add_option("--p", sim.p, "Reset probability")->check(kOpenUnit);
  simulate->add_option("--window", sim.window, "Window size WxH");
  simulate->add_option("--origin", sim.origin, "South-west corner X,Y");
  simulate->add_option("--boundary", sim.boundary, "ghost-ones, ghost-zeros or periodic");
  simulate->add_option("--t", sim.t, "Final time");
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--engine", sim.engine, "graphical, rejection-free or backward");
  simulate->add_option("--samples", sim.samples, "Comma-separated snapshot times (t is always included)");
  simulate->add_option("--initial", sim.initial, "bernoulli, all-zeros, all-ones or quadrant-zero");
  simulate->add_option("--budget", sim.budget, "Node budget of the backward engine");

  CLI::App* experiment = app.add_subcommand("experiment", "Run an experiment driver");
  experiment->require_subcommand(1);
  static const std::pair<const char*, const char*> kExperiments[] = {
      {"mixing", "Block pattern law vs product measure over time"},
      {"correlation", "Single-site autocorrelation and decay fit"},
      {"tau", "Tail of the ordered block reset time"},
      {"shape", "Influenced and queried regions of the zero quadrant"},
      {"freeze", "Never-reset fraction over time"},
      {"beta-c", "Bisection for the oriented percolation threshold"}};
  std::map<std::string, ExperimentOptions> eo;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, about] : kExperiments) {
    ExperimentOptions& o = eo[name];
    CLI::App* s = experiment->add_subcommand(name, about);
    subs[name] = s;
    const std::string n = name;
    if (n == "beta-c") {
      s->add_option("--trials", o.trials, "Percolation trials per bisection step");
      s->add_option("--depth", o.depth, "Lattice depth (generations)");
      s->add_option("--tolerance", o.tolerance, "Bracket width");
      s->add_option("--seed", o.plan.seed, "Master seed");
      continue;
    }
    add_plan_options(s, o.plan);
    if (n == "mixing" || n == "tau") {
      s->add_option("--block", o.block, "Block size WxH");
      s->add_option("--block-at", o.block_at, "Block south-west corner X,Y (default: centred)");
    }
    if (n == "correlation") s->add_option("--site", o.site, "Observed site X,Y (default: window centre)");
    if (n == "shape") s->add_option("--margin", o.margin, "Padding as a fraction of the quadrant side");
  }
  subs["shape"]->get_option("--p")->default_val(0.8);
  subs["shape"]->get_option("--window")->default_val("500x500");
  subs["shape"]->get_option("--t")->default_val(1000.0);
  subs["shape"]->get_option("--initial")->default_val("quadrant-zero");
  subs["freeze"]->get_option("--window")->default_val("128x128");
  subs["freeze"]->get_option("--t")->default_val(200.0);
  subs["freeze"]->get_option("--replicas")->default_val(20);

  ValidateOptions vopt;
  CLI::App* validate = app.add_subcommand("validate", "Run the invariant suites");
  validate->add_option("level", vopt.level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  validate->add_option("--seed", vopt.seed, "Master seed");
  validate->add_flag("--fault-mark", vopt.fault_mark, "Corrupt one mark of the forward engine's fabric");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0 && experiment->parsed() && experiment->get_subcommands().empty()) {
      std::cerr << "valid experiments: mixing, correlation, tau, shape, freeze, beta-c\n";
    }
    return {code == 0 ? kExitOk : kExitUsage, {}};
  }

  std::vector<CLI::App*> path;
  for (CLI::App* a = &app; !a->get_subcommands().empty();) {
    a = a->get_subcommands().front();
    path.push_back(a);
  }
  if (path.empty()) {
    if (allow_replay && !g.replay.empty()) return {-1, {}};  // caller handles replay
    std::cerr << app.help();
    return {kExitUsage, {}};
  }
  if (!g.config.empty()) apply_config(g.config, path.back());

  json resolved = json::object();
  const std::vector<std::string> argv = resolved_argv(path, resolved);
  Outcome out;
  const std::string top = path.front()->get_name();
  if (top == "simulate") {
    out.code = cmd_simulate(sim, g, argv, resolved, &out.produced);
  } else if (top == "validate") {
    out.code = cmd_validate(vopt, g, argv, resolved, &out.produced);
  } else {
    const std::string name = path.back()->get_name();
    const ExperimentOptions& o = eo[name];
    if (name == "mixing") out.code = cmd_mixing(o, g, argv, resolved, &out.produced);
    else if (name == "correlation") out.code = cmd_correlation(o, g, argv, resolved, &out.produced);
    else if (name == "tau") out.code = cmd_tau(o, g, argv, resolved, &out.produced);
    else if (name == "shape") out.code = cmd_shape(o, g, argv, resolved, &out.produced);
    else if (name == "freeze") out.code = cmd_freeze(o, g, argv, resolved, &out.produced);
    else out.code = cmd_beta_c(o, g, argv, resolved, &out.produced);
  }
  return out;
}

int replay(const Globals& g) {
  std::ifstream in(g.replay);
  if (!in) throw UsageError("cannot read manifest " + g.replay);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.contains("argv") || !m.contains("outputs")) throw UsageError("manifest lacks argv or outputs");
  const auto argv = m["argv"].get<std::vector<std::string>>();
  Globals rg = g;
  rg.replay.clear();
  rg.config.clear();
  Outcome o = execute(argv, rg, false);
  if (!o.produced) return o.code == kExitOk ? kExitFailure : o.code;

  std::map<std::string, std::string> fresh;
  for (const auto& f : o.produced->files()) fresh[f.name] = f.sha256;
  std::size_t mismatches = 0;
  for (const auto& f : m["outputs"]) {
    const auto name = f["file"].get<std::string>();
    const auto it = fresh.find(name);
    if (it == fresh.end()) {
      std::cout << "missing  " << name << "\n";
      ++mismatches;
    } else if (it->second != f["sha256"].get<std::string>()) {
      std::cout << "differs  " << name << "\n";
      ++mismatches;
    } else {
      std::cout << "same     " << name << "\n";
    }
    fresh.erase(name);
  }
  for (const auto& [name, _] : fresh) {
    std::cout << "extra    " << name << "\n";
    ++mismatches;
  }
  std::cout << (mismatches ? "replay: digests differ" : "replay: all digests match") << "\n";
  return mismatches ? kExitFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    Globals g;
    std::vector<std::string> args(argv + 1, argv + argc);
    const Outcome o = execute(args, g, true);
    if (o.code != -1) return o.code;
    return replay(g);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BudgetExhausted& e) {
    std::cerr << "error: backward engine ran out of its budget of " << e.budget()
              << " query nodes; raise --budget or shorten --t\n";
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
