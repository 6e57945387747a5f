// Acceptance criteria, one per invocation: acceptance --criterion N.
// Prints "criterion N: PASS|FAIL ..." lines and exits nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../unit/oracles.hpp"
#include "northeast/backward_engine.hpp"
#include "northeast/experiments.hpp"
#include "northeast/percolation.hpp"
#include "northeast/validation.hpp"

using namespace ne;

namespace {

struct Verdict {
  bool passed = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    passed = passed && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... T>
std::string str(const T&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

// 1. forward and backward engines agree on every site.
Verdict criterion_1() {
  Verdict v;
  CrossEngineOptions o;
  o.cases = 50;
  o.side = 32;
  o.t_max = 50.0;
  o.seed = 2024;
  const ValidationItem item = check_cross_engine(o);
  v.check(item.passed, item.name + ": " + item.detail);
  return v;
}

// 2. exact stationary law and long-run occupation of the 2x2 box.
Verdict criterion_2() {
  Verdict v;
  const ValidationItem exact = check_exact_stationarity(
      {Region({0, 0}, 1, 1), Region({0, 0}, 1, 2), Region({0, 0}, 2, 2)}, {0.3, 0.5, 0.8});
  v.check(exact.passed, exact.name + ": " + exact.detail);
  for (double p : {0.3, 0.5, 0.8}) {
    const ValidationItem occ = check_long_run_occupation(p, 100'000, 7);
    v.check(occ.passed, occ.name + ": " + occ.detail);
  }
  return v;
}

// 3. spin law at t among replicas already reset at the site.
Verdict criterion_3() {
  Verdict v;
  for (double p : {0.5, 0.8}) {
    for (double t : {5.0, 20.0}) {
      ExperimentPlan plan;
      plan.p = p;
      plan.window = Region({0, 0}, 32, 32);
      plan.t_max = t;
      plan.replicas = 10'000;
      plan.seed = 31;
      const RegenerationCheck r = regeneration_check(plan, {16, 16}, t);
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.reset));
      v.check(r.reset > 0 && std::abs(r.fraction() - p) <= 3 * sigma,
              str("p=", p, " t=", t, ": ", r.ones, "/", r.reset, " = ", r.fraction(), ", 3 sigma = ", 3 * sigma));
    }
  }
  return v;
}

// 4. 2x2 block law against the product measure.
Verdict criterion_4() {
  Verdict v;
  ExperimentPlan plan;
  plan.p = 0.8;
  plan.window = Region({0, 0}, 64, 64);
  plan.t_max = 100.0;
  plan.sample_times = {1.0, 10.0, 100.0};
  plan.replicas = 10'000;
  plan.seed = 4;

  const MixingSeries st = block_mixing(plan, Region({31, 31}, 2, 2));
  for (std::size_t i = 0; i < st.times.size(); ++i) {
    v.check(st.tv[i] <= st.noise_floor(), str("stationary start, centre block, t=", st.times[i], ": TV ", st.tv[i],
                                              " vs noise floor ", st.noise_floor()));
  }

  plan.initial = InitialKind::AllZeros;
  const MixingSeries z = block_mixing(plan, Region({0, 0}, 2, 2));
  for (std::size_t i = 0; i < z.times.size(); ++i)
    v.note(str("all-0 start, south-west corner block, t=", z.times[i], ": TV ", z.tv[i]));
  v.check(z.tv.front() > z.tv.back(), "all-0 start: TV decreases from t=1 to t=100");
  v.check(z.tv.back() <= z.noise_floor(), str("all-0 start: TV at t=100 ", z.tv.back(), " within noise floor ",
                                              z.noise_floor()));
  return v;
}

// 5. autocorrelation decay at p = 0.8, plateau at p = 0.2.
Verdict criterion_5() {
  Verdict v;
  ExperimentPlan plan;
  plan.window = Region({0, 0}, 64, 64);
  plan.replicas = 2000;
  plan.seed = 5;

  plan.p = 0.8;
  plan.t_max = 40.0;
  for (int k = 0; k <= 40; ++k) plan.sample_times.push_back(k);
  const CorrelationSeries hi = autocorrelation(plan, {32, 32});
  v.check(hi.fit.ok && hi.fit.rate > 0.0 && hi.fit.r2 >= 0.95,
          str("p=0.8: fit ", hi.fit.ok ? "ok" : hi.fit.reason, ", rate ", hi.fit.rate, ", R2 ", hi.fit.r2, " over ",
              hi.fit.points, " points"));

  plan.p = 0.2;
  plan.t_max = 200.0;
  plan.sample_times.clear();
  for (int k = 0; k <= 40; ++k) plan.sample_times.push_back(5.0 * k);
  const CorrelationSeries lo = autocorrelation(plan, {32, 32});
  const double floor = *std::min_element(lo.rho.begin(), lo.rho.end());
  v.check(floor > 0.2, str("p=0.2: minimum rho over t in [0,200] is ", floor));
  return v;
}

// 6. B <= 2A on random configurations and traced cluster processes.
Verdict criterion_6() {
  Verdict v;
  const ClusterSweepResult r = sweep_cluster_ratio(0.8, 10'000, 1'000, 20.0, 6);
  const std::uint64_t total = r.snapshots + r.jumps;
  v.check(r.literal_violations == 0,
          str("B <= 2A with A = flip-eligible members: ", r.literal_violations, " of ", total,
              " snapshots violate it (", r.snapshots, " configurations, ", r.jumps, " jumps of 1000 traces)"));
  if (r.literal_violations) v.note(str("largest excess at A=", r.worst_a, ", B=", r.worst_b));
  v.note(str("with A counted as members having a S or W neighbor outside the cluster: ", r.topological_violations,
             " violations"));
  v.check(r.drift_violations == 0,
          str("pA/(pA+(1-p)B) > 1/2 on nonempty snapshots: ", r.drift_violations, " violate it"));
  v.check(r.empty_interior == 0, str("nonempty clusters with A = 0: ", r.empty_interior));
  v.check(r.unit_jump_violations == 0, str("jumps with |dX| != 1: ", r.unit_jump_violations));
  return v;
}

// 7. tail of the ordered block reset time.
Verdict criterion_7() {
  Verdict v;
  ExperimentPlan plan;
  plan.p = 0.8;
  plan.window = Region({0, 0}, 64, 64);
  plan.t_max = 100.0;
  plan.replicas = 10'000;
  plan.seed = 7;
  const TauTail tail = tau_lambda_tail(plan, Region({31, 31}, 2, 2));
  v.note(str("completed ", tail.completed, " of ", tail.taus.size(), ", median ", tail.median()));
  v.check(tail.fit.ok && tail.fit.r2 >= 0.95,
          str("log-linear fit: ", tail.fit.ok ? "ok" : tail.fit.reason, ", rate ", tail.fit.rate, ", R2 ", tail.fit.r2,
              " over ", tail.fit.points, " points, t in [", tail.fit.t_first, ", ", tail.fit.t_last, "]"));
  return v;
}

// 8. percolation bracket against the dynamical freeze transition.
Verdict criterion_8() {
  Verdict v;
  const BetaInterval iv = estimate_beta_c(100'000, 1000, 0.02, 8);
  v.check(iv.hi - iv.lo <= 0.02, str("beta_c in [", iv.lo, ", ", iv.hi, "], width ", iv.hi - iv.lo, " (",
                                     iv.inconclusive_steps, " steps decided by sign)"));
  const double pc_lo = 1.0 - iv.hi, pc_hi = 1.0 - iv.lo;
  v.check(0.2 < pc_lo && pc_hi < 0.4, str("1 - beta_c in [", pc_lo, ", ", pc_hi, "] lies between 0.2 and 0.4"));

  ExperimentPlan plan;
  plan.window = Region({0, 0}, 128, 128);
  plan.t_max = 200.0;
  plan.sample_times = {200.0};
  plan.replicas = 20;
  plan.seed = 8;
  plan.p = 0.4;
  const FreezeSeries above = freeze_fraction(plan);
  v.check(above.fraction.back() <= 0.01,
          str("p=0.4: never-reset fraction at t=200 is ", above.fraction.back(), " (threshold 0.01)"));
  plan.p = 0.2;
  const FreezeSeries below = freeze_fraction(plan);
  v.check(below.fraction.back() >= 0.1,
          str("p=0.2: never-reset fraction at t=200 is ", below.fraction.back(), " (static frozen density ",
              below.static_frozen, ")"));
  v.check(above.monotone && below.monotone, "never-reset fraction nonincreasing on every run");
  return v;
}

// 9. query trees against binary fission.
Verdict criterion_9() {
  Verdict v;
  const double p = 0.8;
  const std::uint64_t seed = 9;
  const BackwardEngine eng(EventFabric(EventSeed{seed}), p, InitialLaw::lazy_plane(seed, p), Region({0, 0}, 1, 1),
                           BoundaryRule::HalfPlaneExperiment);
  std::mt19937_64 gen(99);
  for (double t : {1.0, 2.0}) {
    std::vector<Probe> probes;
    for (int i = 0; i < 10'000; ++i) probes.push_back({{(i % 100) * 9, (i / 100) * 9}, t});
    const TreeHistogram h = query_tree_histogram(eng, probes);
    double pop = 0.0;
    for (int i = 0; i < 10'000; ++i) pop += static_cast<double>(oracle::fission_sample(t, gen).population);
    pop /= 10'000.0;
    v.check(h.mean_tree() * 1.1 <= pop, str("t=", t, ": mean tree ", h.mean_tree(), " x 1.1 <= fission population ",
                                            pop, " (exact mean e^", 2 * t, " = ", std::exp(2 * t), ")"));
  }
  return v;
}

bool connected_from_corner(const std::vector<std::uint8_t>& set, int w, int h) {
  if (!set[0]) return false;
  std::vector<std::uint8_t> seen(set.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t reached = 0;
  while (!q.empty()) {
    const int i = q.front();
    q.pop();
    ++reached;
    const int x = i % w, y = i / w;
    const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
    for (const auto& n : nb) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
      const int j = n[1] * w + n[0];
      if (set[j] && !seen[j]) {
        seen[j] = 1;
        q.push(j);
      }
    }
  }
  return reached == static_cast<std::size_t>(std::count(set.begin(), set.end(), 1));
}

// 10. influence region shape on a 500x500 quadrant.
Verdict criterion_10() {
  Verdict v;
  ExperimentPlan plan;
  plan.p = 0.8;
  plan.window = Region({0, 0}, 500, 500);
  plan.replicas = 1;

  int decreasing = 0;
  bool all_monotone = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    plan.seed = seed;
    const bool long_run = seed == 1;
    plan.t_max = long_run ? 1000.0 : 800.0;
    plan.sample_times = {100.0, 200.0, 400.0, 800.0};
    if (long_run) plan.sample_times.push_back(1000.0);
    const ShapeSeries s = influence_region(plan, ShapeOptions{0.25, long_run});
    all_monotone = all_monotone && s.monotone;
    if (s.exhausted || s.hausdorff.size() < 3) {
      v.note(str("seed ", seed, ": ", s.diagnostic));
      continue;
    }
    const bool dec = s.hausdorff[2] < s.hausdorff[0];
    decreasing += dec;
    v.note(str("seed ", seed, ": H(100,200) ", s.hausdorff[0], ", H(200,400) ", s.hausdorff[1], ", H(400,800) ",
               s.hausdorff[2], dec ? "" : "  (not decreasing)"));

    if (long_run && s.snapshots.size() == 5) {
      const ShapeSnapshot& last = s.snapshots.back();
      const int w = plan.window.width(), h = plan.window.height();
      v.check(connected_from_corner(last.influenced, w, h),
              str("t=1000: influenced region (", last.influenced_count, " sites) is connected and holds the corner"));
      v.check(last.queried_count > last.influenced_count,
              str("t=1000: query halo of ", last.queried_count - last.influenced_count, " sites"));
      const Graymap img = shape_graymap(s, last);
      const bool white = std::count(img.pixels.begin(), img.pixels.end(), 255) > 0;
      const bool grey = std::count(img.pixels.begin(), img.pixels.end(), 128) > 0;
      v.check(white && grey && img.width == w && img.height == h, "t=1000 raster has white and halo pixels");
    }
  }
  v.check(all_monotone, "influenced region nondecreasing on every run");
  v.check(decreasing >= 8, str("Hausdorff distance decreases from (100,200) to (400,800) in ", decreasing, " of 10 seeds"));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance criteria");
  int which = 0;
  app.add_option("--criterion", which, "Criterion number, 1 to 10")->required()->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  Verdict (*const table[])() = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  const auto t0 = std::chrono::steady_clock::now();
  const Verdict v = table[which - 1]();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& l : v.lines) std::cout << "  " << l << "\n";
  std::cout << "criterion " << which << ": " << (v.passed ? "PASS" : "FAIL") << fmt(" (%.1f s)", secs) << std::endl;
  return v.passed ? 0 : 1;
}
