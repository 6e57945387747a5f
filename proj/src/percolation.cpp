#include "northeast/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "northeast/measures.hpp"
#include "northeast/simd/kernels.hpp"

namespace ne {

std::vector<std::uint8_t> frozen_zero_cluster(const Configuration& c) {
  const Region& r = c.region();
  const auto spins = c.spins();
  const auto w = static_cast<std::size_t>(r.width());
  std::vector<std::uint8_t> frozen(r.size(), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (spins[i]) continue;
    const std::size_t col = i % w;
    const bool edge = i < w || col == 0;
    frozen[i] = edge || frozen[i - w] || frozen[i - 1];
  }
  return frozen;
}

std::vector<Site> frozen_zero_sites(const Configuration& c) {
  const auto mask = frozen_zero_cluster(c);
  std::vector<Site> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(c.region().site_at(i));
  }
  return out;
}

namespace {

struct ClusterMask {
  std::vector<std::uint8_t> in;
  std::vector<std::uint32_t> members;  // region indices, row-major order
};

void require_boundary_inside(const Region& window, const Region& block) {
  for (const Site s : sw_exterior_boundary(block)) {
    if (!window.contains(s)) {
      throw std::invalid_argument("cluster_attached: the block's SW boundary leaves the window");
    }
  }
}

ClusterMask grow_cluster(const Configuration& c, const Region& block) {
  const Region& r = c.region();
  const auto spins = c.spins();
  ClusterMask m;
  m.in.assign(r.size(), 0);
  std::vector<std::uint32_t> stack;
  auto visit = [&](Site s) {
    if (!r.contains(s) || block.contains(s)) return;
    const auto i = static_cast<std::uint32_t>(r.index_of(s));
    if (spins[i] || m.in[i]) return;
    m.in[i] = 1;
    stack.push_back(i);
  };
  for (const Site s : sw_exterior_boundary(block)) visit(s);
  while (!stack.empty()) {
    const Site s = r.site_at(stack.back());
    m.members.push_back(stack.back());
    stack.pop_back();
    visit(south_of(s));
    visit(west_of(s));
  }
  std::sort(m.members.begin(), m.members.end());
  return m;
}

// A, B and the topological interior count of a member set. `spin` resolves
// any site, including ones outside the window.
template <class SpinFn>
void boundary_counts(const Region& r, const std::vector<std::uint8_t>& in, const std::vector<std::uint32_t>& members,
                     SpinFn spin, std::vector<Site>* interior, std::vector<Site>* exterior, std::size_t& a,
                     std::size_t& b, std::size_t& a_topo) {
  a = b = a_topo = 0;
  auto member = [&](Site s) { return r.contains(s) && in[r.index_of(s)]; };
  for (const std::uint32_t i : members) {
    const Site s = r.site_at(i);
    const Site sw[2] = {south_of(s), west_of(s)};
    if (spin(sw[0]) && spin(sw[1])) {
      ++a;
      if (interior) interior->push_back(s);
    }
    bool open_side = false;
    for (const Site n : sw) {
      if (member(n)) continue;
      open_side = true;
      ++b;
      if (exterior) exterior->push_back(n);
    }
    a_topo += open_side;
  }
}

}  // namespace

ClusterSnapshot cluster_attached(const Configuration& c, const Region& block) {
  const Region& r = c.region();
  require_boundary_inside(r, block);
  const ClusterMask m = grow_cluster(c, block);
  ClusterSnapshot snap;
  for (const std::uint32_t i : m.members) snap.members.push_back(r.site_at(i));
  std::size_t a = 0, b = 0;
  boundary_counts(
      r, m.in, m.members, [&](Site s) { return c.at(s); }, &snap.interior_boundary, &snap.exterior_boundary, a,
      b, snap.interior_topological);
  // A non-member site can lie south of one member and west of another.
  std::sort(snap.exterior_boundary.begin(), snap.exterior_boundary.end(), row_major_less);
  snap.exterior_boundary.erase(std::unique(snap.exterior_boundary.begin(), snap.exterior_boundary.end()),
                               snap.exterior_boundary.end());
  return snap;
}

ClusterTrace trace_cluster_process(const Region& block, double p, std::uint64_t seed, double t_max,
                                   TraceOptions opts) {
  require_open_unit(p, "trace_cluster_process");
  if (opts.margin < 1) throw std::invalid_argument("trace_cluster_process: margin must be at least 1");
  const Site o = block.origin();
  const Region window({o.x - opts.margin, o.y - opts.margin}, block.width() + opts.margin + 2,
                      block.height() + opts.margin + 2);
  ClusterTrace trace;
  trace.block = block;
  trace.window = window;

  GraphicalEngine engine(sample_bernoulli(window, p, seed, BoundaryRule::GhostOnes), p,
                         EventSeed{seed, StreamDomain::Dynamics});
  const Configuration& config = engine.state().config;

  ClusterMask k = grow_cluster(config, block);
  std::vector<std::uint8_t> on_boundary(window.size(), 0);
  for (const Site s : sw_exterior_boundary(block)) on_boundary[window.index_of(s)] = 1;

  auto full_check = [&] {
    const ClusterMask fresh = grow_cluster(config, block);
    ++trace.full_checks;
    if (fresh.in != k.in) {
      throw std::logic_error("trace_cluster_process: incremental cluster drifted from recomputation");
    }
  };

  auto pre_jump_counts = [&](ClusterJump& j, std::uint32_t changed, std::uint8_t old_spin) {
    auto spin = [&](Site s) -> std::uint8_t {
      if (window.contains(s) && window.index_of(s) == changed) return old_spin;
      return config.at(s);
    };
    std::vector<Site> ext;
    std::size_t a = 0, b = 0, a_topo = 0;
    boundary_counts(window, k.in, k.members, spin, nullptr, &ext, a, b, a_topo);
    std::sort(ext.begin(), ext.end(), row_major_less);
    ext.erase(std::unique(ext.begin(), ext.end()), ext.end());
    j.a = a;
    j.b = ext.size();
    j.a_topological = a_topo;
  };

  auto is_member = [&](Site s) { return window.contains(s) && k.in[window.index_of(s)]; };

  engine.set_observer([&](const ResetLogEntry& e) {
    ++trace.resets_seen;
    if (e.old_spin != e.new_spin && !block.contains(e.site)) {
      const auto i = static_cast<std::uint32_t>(window.index_of(e.site));
      ClusterJump j;
      j.time = e.time;
      j.site = e.site;
      j.x_before = k.members.size();
      bool jump = false;
      if (e.new_spin == 0 && (on_boundary[i] || is_member(north_of(e.site)) || is_member(east_of(e.site)))) {
        pre_jump_counts(j, i, e.old_spin);
        k.in[i] = 1;
        k.members.insert(std::lower_bound(k.members.begin(), k.members.end(), i), i);
        j.kind = JumpKind::Addition;
        jump = true;
      } else if (e.new_spin == 1 && k.in[i]) {
        pre_jump_counts(j, i, e.old_spin);
        k.in[i] = 0;
        k.members.erase(std::lower_bound(k.members.begin(), k.members.end(), i));
        j.kind = JumpKind::Deletion;
        jump = true;
      }
      if (jump) {
        j.x_after = k.members.size();
        trace.jumps.push_back(j);
      }
    }
    if (opts.check_every && trace.resets_seen % opts.check_every == 0) full_check();
  });
  engine.run_until(t_max);
  full_check();
  return trace;
}

void write_trace_csv(std::ostream& out, const ClusterTrace& trace) {
  out << "time,x_before,x_after,a,b,a_topological,kind,site_x,site_y\n";
  out.precision(17);
  for (const ClusterJump& j : trace.jumps) {
    out << j.time << ',' << j.x_before << ',' << j.x_after << ',' << j.a << ',' << j.b << ',' << j.a_topological
        << ',' << (j.kind == JumpKind::Addition ? "addition" : "deletion") << ',' << j.site.x << ',' << j.site.y
        << '\n';
  }
}

std::uint64_t SurvivalRun::alive(std::uint32_t n) const {
  std::uint64_t dead = 0;
  for (std::uint32_t g = 0; g <= n && g < deaths.size(); ++g) dead += deaths[g];
  return trials - dead;
}

double SurvivalRun::survival(std::uint32_t n) const {
  return trials ? static_cast<double>(alive(n)) / static_cast<double>(trials) : 0.0;
}

namespace {

std::uint32_t beta_q16(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
  return static_cast<std::uint32_t>(std::lround(beta * 65536.0));
}

// Generation at which the front first dies, or depth + 1 if it survives.
std::uint32_t run_trial(std::uint32_t q16, std::uint32_t depth, simd::XoshiroLanes& lanes,
                        std::vector<std::uint64_t>& cur, std::vector<std::uint64_t>& next,
                        std::vector<std::uint64_t>& open) {
  const auto& k = simd::kernels();
  std::fill(cur.begin(), cur.end(), 0);
  cur[0] = 1;
  std::size_t lo = 0, hi = 0;  // live word span
  for (std::uint32_t g = 1; g <= depth; ++g) {
    const std::size_t top = std::min(cur.size() - 1, hi + ((cur[hi] >> 63) ? 1 : 0));
    const std::size_t n = top - lo + 1;
    k.bernoulli_words(lanes, q16, n, open.data());
    if (!k.front_step(cur.data() + lo, open.data(), n, next.data() + lo)) return g;
    std::size_t new_lo = top, new_hi = lo;
    for (std::size_t w = lo; w <= top; ++w) {
      cur[w] = next[w];
      if (cur[w]) {
        new_lo = std::min(new_lo, w);
        new_hi = std::max(new_hi, w);
      }
    }
    lo = new_lo;
    hi = new_hi;
  }
  return depth + 1;
}

}  // namespace

SurvivalRun survival_probability(double beta, std::uint32_t depth, std::uint64_t trials, std::uint64_t seed) {
  const std::uint32_t q16 = beta_q16(beta);
  SurvivalRun run;
  run.beta = beta;
  run.trials = trials;
  run.depth = depth;
  run.deaths.assign(depth + 1, 0);
  const std::size_t words = depth / 64 + 2;
  std::vector<std::uint64_t> cur(words), next(words), open(words + 4);
  const rng::Key key = rng::key_from_seed(seed);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const rng::Counter ctr{static_cast<std::uint32_t>(t), q16, static_cast<std::uint32_t>(depth),
                           stream_tag(StreamDomain::Percolation, 0, t)};
    auto lanes = simd::XoshiroLanes::from_seed(rng::philox_u64(ctr, key));
    const std::uint32_t g = run_trial(q16, depth, lanes, cur, next, open);
    if (g <= depth) ++run.deaths[g];
  }
  return run;
}

PhaseTest classify_phase(const SurvivalRun& run, double z) {
  const std::uint32_t l = run.depth;
  const std::uint64_t n1 = run.alive(l / 4), n2 = run.alive(l / 2), n3 = run.alive(l);
  PhaseTest out;
  out.beta = run.beta;
  // No survivors at L: as subcritical as it gets. No survivors at L/4 gives
  // no information, so the same call is made.
  if (n3 == 0) {
    out.phase = Phase::Subcritical;
    out.statistic = -std::numeric_limits<double>::infinity();
    return out;
  }
  // Nobody died over (L/2, L]: the front has escaped, which only happens
  // above the threshold.
  if (n3 == n2) {
    out.phase = Phase::Supercritical;
    return out;
  }
  const double q1 = static_cast<double>(n2) / static_cast<double>(n1);
  const double q2 = static_cast<double>(n3) / static_cast<double>(n2);
  const double h1 = -std::log(q1), h2 = -std::log(q2);
  out.statistic = h1 - h2;
  const double var = (1.0 - q1) / (static_cast<double>(n1) * q1) + (1.0 - q2) / (static_cast<double>(n2) * q2);
  out.std_error = std::sqrt(var);
  if (out.statistic > z * out.std_error) {
    out.phase = Phase::Supercritical;
  } else if (out.statistic < -z * out.std_error) {
    out.phase = Phase::Subcritical;
  }
  return out;
}

BetaInterval estimate_beta_c(std::uint64_t trials, std::uint32_t depth, double tolerance, std::uint64_t seed) {
  if (depth < 100) throw std::invalid_argument("estimate_beta_c: depth must be at least 100");
  if (trials < 1000) throw std::invalid_argument("estimate_beta_c: trials must be at least 1000");
  if (!(tolerance > 0.0)) throw std::invalid_argument("estimate_beta_c: tolerance must be positive");
  BetaInterval out;
  while (out.hi - out.lo > tolerance) {
    const double mid = 0.5 * (out.lo + out.hi);
    const PhaseTest t = classify_phase(survival_probability(mid, depth, trials, seed));
    out.steps.push_back(t);
    bool above = t.phase == Phase::Supercritical;
    if (t.phase == Phase::Inconclusive) {
      ++out.inconclusive_steps;
      above = t.statistic > 0.0;
    }
    (above ? out.hi : out.lo) = mid;
  }
  return out;
}

}  // namespace ne
