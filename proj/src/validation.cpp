#include "northeast/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "northeast/backward_engine.hpp"
#include "northeast/event_fabric.hpp"
#include "northeast/forward_engine.hpp"
#include "northeast/measures.hpp"
#include "northeast/percolation.hpp"
#include "northeast/stats.hpp"

namespace ne {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string fmt_fixed(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  return os.str();
}

std::string region_text(const Region& r) {
  std::ostringstream os;
  os << r.width() << "x" << r.height();
  return os.str();
}

Configuration case_initial(const Region& r, int kind, double p, std::uint64_t seed) {
  switch (kind % 3) {
    case 0: return sample_bernoulli(r, p, seed);
    case 1: return Configuration(r, BoundaryRule::GhostOnes, 0);
    default: return Configuration(r, BoundaryRule::GhostOnes, 1);
  }
}

/// The last reset of some site whose mark lands on the other side of p once
/// replaced by 1 - u. Changing it changes that site's final spin, because
/// nothing the site does can alter its own constraint.
bool decisive_event(const EventFabric& f, const std::vector<ResetLogEntry>& log, double p, Site& site,
                    std::uint64_t& index) {
  std::unordered_set<std::uint64_t> seen;
  for (auto it = log.rbegin(); it != log.rend(); ++it) {
    if (!seen.insert(pack_site(it->site)).second) continue;
    const auto events = events_in_window(f, it->site, 0.0, it->time);
    if (events.empty()) continue;
    const SiteEvent& e = events.back();
    if ((e.mark <= p) != (1.0 - e.mark <= p)) {
      site = e.site;
      index = e.index;
      return true;
    }
  }
  return false;
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const ValidationItem& i) { return i.passed || i.informational; });
}

void ValidationReport::print(std::ostream& out) const {
  for (const auto& i : items) {
    const char* tag = i.informational ? "INFO" : (i.passed ? "PASS" : "FAIL");
    out << tag << "  " << i.name << "  (" << std::fixed << std::setprecision(1) << i.seconds << " s)\n";
    out.unsetf(std::ios::floatfield);
    if (!i.detail.empty()) out << "      " << i.detail << "\n";
  }
  out << (passed() ? "validation passed" : "validation FAILED") << "\n";
}

ValidationItem check_fabric_statistics(std::uint64_t samples, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const EventFabric f(EventSeed{seed, StreamDomain::Dynamics});
  std::vector<double> gaps, marks;
  gaps.reserve(samples);
  marks.reserve(samples);
  for (std::int32_t i = 0; gaps.size() < samples; ++i) {
    const Site s{i % 1000, i / 1000};
    for (std::uint64_t k = 1; k <= 10 && gaps.size() < samples; ++k) {
      gaps.push_back(f.gap(s, k));
      marks.push_back(f.mark(s, k));
    }
  }
  const double dg = stats::ks_statistic(gaps, [](double x) { return 1.0 - std::exp(-x); });
  const double dm = stats::ks_statistic(marks, [](double x) { return x; });
  const double pg = stats::ks_pvalue(dg, gaps.size());
  const double pm = stats::ks_pvalue(dm, marks.size());
  ValidationItem item;
  item.name = "event fabric: exponential gaps and uniform marks (KS, " + std::to_string(samples) + " draws)";
  item.passed = pg > 0.01 && pm > 0.01;
  std::ostringstream os;
  os << "gap D=" << dg << " p=" << pg << "; mark D=" << dm << " p=" << pm;
  item.detail = os.str();
  item.seconds = seconds_since(t0);
  return item;
}

ValidationItem check_cross_engine(const CrossEngineOptions& opts) {
  const auto t0 = Clock::now();
  static constexpr double kPs[] = {0.3, 0.5, 0.8};
  const Region r({0, 0}, opts.side, opts.side);
  std::uint64_t mismatched_cases = 0, mismatched_sites = 0;
  std::string first;
  std::string fault_note;
  for (int k = 0; k < opts.cases; ++k) {
    const std::uint64_t seed = derive_seed(opts.seed, static_cast<std::uint64_t>(k));
    const double p = kPs[k % 3];
    const double t = opts.t_max * (0.2 + 0.8 * rng::to_open_unit(rng::mix64(seed)));
    const Configuration init = case_initial(r, k / 3, p, seed);
    EventFabric fabric(EventSeed{seed, StreamDomain::Dynamics});

    if (opts.inject_fault && k == 0) {
      std::vector<ResetLogEntry> log;
      GraphicalEngine probe(init, p, fabric);
      probe.set_observer([&](const ResetLogEntry& e) { log.push_back(e); });
      probe.run_until(t);
      Site s;
      std::uint64_t idx = 0;
      if (!decisive_event(fabric, log, p, s, idx)) throw std::runtime_error("no event to corrupt in the first case");
      fabric.inject_mark_fault(s, idx);
      fault_note = "; fault injected at (" + std::to_string(s.x) + "," + std::to_string(s.y) + ") event " +
                   std::to_string(idx);
    }

    GraphicalEngine fwd(init, p, fabric);
    fwd.run_until(t);
    const BackwardEngine bwd(EventFabric(EventSeed{seed, StreamDomain::Dynamics}), p,
                             InitialLaw::from_configuration(init), r, BoundaryRule::GhostOnes);
    QueryMemo memo;
    const Configuration got = bwd.evaluate_region(r, t, memo);
    std::uint64_t bad = 0;
    for (std::size_t i = 0; i < r.size(); ++i) bad += got[i] != fwd.state().config[i];
    if (bad) {
      ++mismatched_cases;
      mismatched_sites += bad;
      if (first.empty()) {
        std::ostringstream os;
        os << "first mismatch: case " << k << " seed " << seed << " p " << p << " t " << t;
        first = os.str();
      }
    }
  }
  ValidationItem item;
  item.name = "cross-engine equality: " + std::to_string(opts.cases) + " cases on " + region_text(r) +
              " ghost-ones, t <= " + num(opts.t_max);
  item.passed = mismatched_cases == 0;
  item.detail = std::to_string(mismatched_cases) + " mismatched cases, " + std::to_string(mismatched_sites) +
                " mismatched sites" + (first.empty() ? "" : "; " + first) + fault_note;
  item.seconds = seconds_since(t0);
  return item;
}

ValidationItem check_exact_stationarity(const std::vector<Region>& boxes, const std::vector<double>& ps) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool all_unique = true;
  std::string names;
  for (const Region& b : boxes) {
    names += (names.empty() ? "" : ", ") + region_text(b);
    for (double p : ps) {
      const StationaryResult res = exact_stationary(make_exact_chain(b, BoundaryRule::GhostOnes, p));
      if (!res.unique) {
        all_unique = false;
        continue;
      }
      worst = std::max(worst, (res.pi - product_measure(b.size(), p)).cwiseAbs().maxCoeff());
    }
  }
  std::string plist;
  for (double p : ps) plist += (plist.empty() ? "" : ", ") + num(p);
  ValidationItem item;
  item.name = "exact stationary law equals the product measure (" + names + "; p = " + plist + ")";
  item.passed = all_unique && worst <= 1e-10;
  item.detail = "max deviation " + num(worst) + (all_unique ? "" : "; a chain was not irreducible");
  item.seconds = seconds_since(t0);
  return item;
}

ValidationItem check_long_run_occupation(double p, std::uint64_t samples, std::uint64_t seed, double spacing) {
  const auto t0 = Clock::now();
  const Region r({0, 0}, 2, 2);
  if (!(spacing > 0.0)) spacing = 5.0 / spectral_gap(make_exact_chain(r, BoundaryRule::GhostOnes, p));
  GraphicalEngine e(sample_bernoulli(r, p, seed), p, EventFabric(EventSeed{seed, StreamDomain::Dynamics}),
                    ForwardOptions{true, false});
  std::vector<double> counts(16, 0.0);
  for (std::uint64_t k = 1; k <= samples; ++k) {
    e.run_until(spacing * static_cast<double>(k));
    unsigned s = 0;
    for (unsigned i = 0; i < 4; ++i) s |= static_cast<unsigned>(e.state().config[i]) << i;
    counts[s] += 1.0;
  }
  const auto nu = product_measure(4, p);
  std::vector<double> expected(16);
  for (int s = 0; s < 16; ++s) expected[s] = nu[s] * static_cast<double>(samples);
  const auto chi = stats::chi_square_gof(counts, expected);
  ValidationItem item;
  item.name = "2x2 long-run occupation vs product measure (p = " + num(p) + ", " + std::to_string(samples) +
              " samples spaced by " + fmt_fixed(spacing) + ")";
  item.passed = chi.p_value > 0.01;
  item.detail = "chi2=" + num(chi.statistic) + " dof=" + num(chi.dof) + " p=" + num(chi.p_value);
  item.seconds = seconds_since(t0);
  return item;
}

ClusterSweepResult sweep_cluster_ratio(double p, std::uint64_t configurations, std::uint64_t traces,
                                       double trace_t, std::uint64_t seed) {
  ClusterSweepResult out;
  auto note = [&](std::size_t a, std::size_t b, std::size_t a_topo, bool nonempty) {
    if (b > 2 * a) {
      ++out.literal_violations;
      if (b - 2 * a > out.worst_b - 2 * out.worst_a) {
        out.worst_a = a;
        out.worst_b = b;
      }
    }
    if (b > 2 * a_topo) ++out.topological_violations;
    if (nonempty && a == 0) ++out.empty_interior;
    if (nonempty && !(p * static_cast<double>(a) > (1.0 - p) * static_cast<double>(b))) ++out.drift_violations;
  };

  const Region window({0, 0}, 32, 32);
  const Region block({16, 16}, 8, 8);
  for (std::uint64_t k = 0; k < configurations; ++k) {
    const Configuration c = sample_bernoulli(window, p, derive_seed(seed, k));
    const ClusterSnapshot s = cluster_attached(c, block);
    ++out.snapshots;
    note(s.a(), s.b(), s.interior_topological, !s.members.empty());
  }

  const Region trace_block({0, 0}, 4, 4);
  for (std::uint64_t k = 0; k < traces; ++k) {
    const ClusterTrace tr = trace_cluster_process(trace_block, p, derive_seed(seed + 1, k), trace_t);
    for (const ClusterJump& j : tr.jumps) {
      ++out.jumps;
      const std::size_t d = j.x_after > j.x_before ? j.x_after - j.x_before : j.x_before - j.x_after;
      if (d != 1) ++out.unit_jump_violations;
      note(j.a, j.b, j.a_topological, j.x_before > 0);
    }
  }
  return out;
}

ValidationLevel parse_validation_level(std::string_view text) {
  if (text == "fast") return ValidationLevel::Fast;
  if (text == "full") return ValidationLevel::Full;
  throw std::invalid_argument("validation level must be fast or full");
}

ValidationReport run_validation(const ValidationOptions& opts) {
  const bool full = opts.level == ValidationLevel::Full;
  ValidationReport rep;
  rep.items.push_back(check_fabric_statistics(full ? 1'000'000 : 100'000, opts.seed));

  CrossEngineOptions ce;
  ce.cases = full ? 50 : 10;
  ce.side = full ? 32 : 16;
  ce.t_max = full ? 50.0 : 20.0;
  ce.seed = opts.seed;
  ce.inject_fault = opts.inject_fault;
  rep.items.push_back(check_cross_engine(ce));

  const std::vector<double> ps = full ? std::vector<double>{0.3, 0.5, 0.8} : std::vector<double>{0.8};
  const std::vector<Region> boxes =
      full ? std::vector<Region>{Region({0, 0}, 1, 1), Region({0, 0}, 1, 2), Region({0, 0}, 2, 2)}
           : std::vector<Region>{Region({0, 0}, 2, 2)};
  rep.items.push_back(check_exact_stationarity(boxes, ps));
  rep.items.push_back(check_long_run_occupation(0.8, full ? 100'000 : 10'000, opts.seed));

  const auto t0 = Clock::now();
  const std::uint64_t configs = full ? 10'000 : 1'000;
  const std::uint64_t traces = full ? 1'000 : 50;
  const ClusterSweepResult sw = sweep_cluster_ratio(0.8, configs, traces, 20.0, opts.seed);
  const double secs = seconds_since(t0);
  const std::string scope = std::to_string(sw.snapshots) + " configurations and " + std::to_string(sw.jumps) +
                            " jumps of " + std::to_string(traces) + " traces, p = 0.8";

  ValidationItem topo;
  topo.name = "cluster boundary: B <= 2 x (members with an outside S or W neighbor), A >= 1, unit jumps";
  topo.passed = sw.topological_violations == 0 && sw.empty_interior == 0 && sw.unit_jump_violations == 0;
  topo.detail = scope + "; " + std::to_string(sw.topological_violations) + " ratio violations, " +
                std::to_string(sw.empty_interior) + " empty interiors, " + std::to_string(sw.unit_jump_violations) +
                " non-unit jumps";
  topo.seconds = secs;
  rep.items.push_back(topo);

  ValidationItem literal;
  literal.name = "cluster boundary: B <= 2A with A = flip-eligible members";
  literal.informational = true;
  literal.passed = sw.literal_violations == 0;
  literal.detail = std::to_string(sw.literal_violations) + " of " + std::to_string(sw.snapshots + sw.jumps) +
                   " snapshots exceed it";
  if (sw.literal_violations)
    literal.detail += " (largest excess at A=" + std::to_string(sw.worst_a) + ", B=" + std::to_string(sw.worst_b) + ")";
  literal.detail += "; pA <= (1-p)B on " + std::to_string(sw.drift_violations) + " nonempty snapshots";
  rep.items.push_back(literal);
  return rep;
}

}  // namespace ne
