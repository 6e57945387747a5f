#include "northeast/backward_engine.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ne {

BudgetExhausted::BudgetExhausted(std::uint64_t budget)
    : std::runtime_error("backward query exceeded its node budget of " + std::to_string(budget)),
      budget_(budget) {}

InitialLaw InitialLaw::from_configuration(Configuration c) {
  InitialLaw law;
  law.fixed = std::move(c);
  return law;
}

InitialLaw InitialLaw::lazy_plane(std::uint64_t seed, double p, bool zero_first_quadrant) {
  InitialLaw law;
  law.lazy = true;
  law.lazy_seed = seed;
  law.threshold = rng::bernoulli_threshold(p);
  law.zero_first_quadrant = zero_first_quadrant;
  return law;
}

std::uint8_t InitialLaw::spin(Site s) const {
  if (fixed && fixed->region().contains(s)) return fixed->at(s);
  if (lazy) {
    if (zero_first_quadrant && s.x >= 0 && s.y >= 0) return 0;
    return initial_bernoulli(lazy_seed, s, threshold);
  }
  throw InitialSpinError("no initial spin for site (" + std::to_string(s.x) + "," + std::to_string(s.y) + ")");
}

void QueryStats::merge(const QueryStats& other) {
  queried_sites.insert(queried_sites.end(), other.queried_sites.begin(), other.queried_sites.end());
  tree_size += other.tree_size;
  max_depth = std::max(max_depth, other.max_depth);
}

std::vector<Site> QueryMemo::touched_sites() const {
  std::vector<Site> out;
  out.reserve(entries_.size());
  for (const auto& [key, e] : entries_) out.push_back(e.site);
  std::sort(out.begin(), out.end(), row_major_less);
  return out;
}

BackwardEngine::BackwardEngine(EventFabric fabric, double p, InitialLaw initial, Region window,
                               BoundaryRule boundary)
    : fabric_(std::move(fabric)), p_(p), initial_(std::move(initial)), window_(window), boundary_(boundary) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
}

Site BackwardEngine::canonical(Site s) const {
  if (boundary_ != BoundaryRule::Periodic || window_.contains(s)) return s;
  const Site o = window_.origin();
  auto wrap = [](std::int32_t v, std::int32_t n) { return ((v % n) + n) % n; };
  return {o.x + wrap(s.x - o.x, window_.width()), o.y + wrap(s.y - o.y, window_.height())};
}

bool BackwardEngine::is_live(Site s) const {
  return boundary_ == BoundaryRule::HalfPlaneExperiment || boundary_ == BoundaryRule::Periodic ||
         window_.contains(s);
}

BackwardEngine::Call BackwardEngine::begin(QueryMemo& memo, QueryStats* stats) const {
  return Call{memo, stats, ++stamp_, memo.resolved_};
}

QueryMemo::Entry& BackwardEngine::entry(Call& call, Site s) const {
  auto [it, inserted] = call.memo.entries_.try_emplace(pack_site(s));
  QueryMemo::Entry& e = it->second;
  if (inserted) {
    e.site = s;
    e.values.push_back(-1);
  }
  if (e.stamp != call.stamp) {
    e.stamp = call.stamp;
    if (call.stats) call.stats->queried_sites.push_back(s);
  }
  return e;
}

void BackwardEngine::cover(QueryMemo::Entry& e, double t) const {
  if (e.times.empty()) {
    e.times.push_back(fabric_.gap(e.site, 1));
    e.values.push_back(-1);
  }
  while (e.times.back() <= t) {
    e.times.push_back(e.times.back() + fabric_.gap(e.site, e.times.size() + 1));
    e.values.push_back(-1);
  }
}

std::uint32_t BackwardEngine::count_upto(QueryMemo::Entry& e, double t) const {
  cover(e, t);
  return static_cast<std::uint32_t>(std::upper_bound(e.times.begin(), e.times.end(), t) - e.times.begin());
}

// Value of neighbor n just before the event of `of` at time t. The forward
// sweep breaks exact time ties in row-major order, so a neighbor that comes
// later in that order has not yet consumed an event at exactly t.
BackwardEngine::Neighbor BackwardEngine::neighbor(Call& call, Site of, Site n, double t) const {
  Neighbor out;
  if (!is_live(n)) {
    out.constant = boundary_ == BoundaryRule::GhostOnes ? 1 : 0;
    return out;
  }
  const Site c = canonical(n);
  QueryMemo::Entry& e = entry(call, c);
  std::uint32_t j = count_upto(e, t);
  if (j > 0 && e.times[j - 1] == t && !row_major_less(c, of)) --j;
  out.e = &e;
  out.k = j;
  return out;
}

std::int8_t BackwardEngine::resolve(Call& call, QueryMemo::Entry& root, std::uint32_t root_k) const {
  if (root.values[root_k] >= 0) return root.values[root_k];
  stack_.clear();
  stack_.push_back({&root, root_k, 0, 0});
  auto settle = [&](Frame& f, std::int8_t v) {
    f.e->values[f.k] = v;
    ++call.memo.resolved_;
    if (call.memo.resolved_ - call.start_nodes > budget_) throw BudgetExhausted(budget_);
  };
  while (!stack_.empty()) {
    if (call.stats && stack_.size() > call.stats->max_depth) {
      call.stats->max_depth = static_cast<std::uint32_t>(stack_.size());
    }
    Frame& f = stack_.back();
    if (f.e->values[f.k] >= 0) {
      stack_.pop_back();
      continue;
    }
    if (f.k == 0) {
      settle(f, static_cast<std::int8_t>(initial_.spin(f.e->site)));
      stack_.pop_back();
      continue;
    }
    const double t = f.e->times[f.k - 1];
    switch (f.stage) {
      case 0: {
        const Neighbor s = neighbor(call, f.e->site, south_of(f.e->site), t);
        if (s.e && s.e->values[s.k] < 0) {
          stack_.push_back({s.e, s.k, 0, 0});
          continue;
        }
        f.south = s.e ? s.e->values[s.k] : s.constant;
        f.stage = f.south ? 1 : 3;
        continue;
      }
      case 1: {
        const Neighbor w = neighbor(call, f.e->site, west_of(f.e->site), t);
        if (w.e && w.e->values[w.k] < 0) {
          stack_.push_back({w.e, w.k, 0, 0});
          continue;
        }
        const std::int8_t west = w.e ? w.e->values[w.k] : w.constant;
        if (west) {
          settle(f, fabric_.mark(f.e->site, f.k) <= p_ ? 1 : 0);
          stack_.pop_back();
        } else {
          f.stage = 3;
        }
        continue;
      }
      default: {
        const std::int8_t prev = f.e->values[f.k - 1];
        if (prev < 0) {
          const Frame below{f.e, f.k - 1, 0, 0};
          stack_.push_back(below);
          continue;
        }
        settle(f, prev);
        stack_.pop_back();
        continue;
      }
    }
  }
  return root.values[root_k];
}

std::uint8_t BackwardEngine::spin_at(Site s, double t, QueryMemo& memo, QueryStats* stats) const {
  if (!is_live(s)) throw std::domain_error("spin_at: site outside the window");
  Call call = begin(memo, stats);
  QueryMemo::Entry& e = entry(call, canonical(s));
  const std::int8_t v = resolve(call, e, count_upto(e, t));
  if (stats) stats->tree_size += memo.resolved_ - call.start_nodes;
  return static_cast<std::uint8_t>(v);
}

bool BackwardEngine::flipped_by(Site s, double t, QueryMemo& memo, QueryStats* stats) const {
  if (!is_live(s)) throw std::domain_error("flipped_by: site outside the window");
  Call call = begin(memo, stats);
  QueryMemo::Entry& e = entry(call, canonical(s));
  const std::uint32_t n = count_upto(e, t);
  bool flipped = false;
  const std::int8_t v0 = resolve(call, e, 0);
  for (std::uint32_t k = 1; k <= n && !flipped; ++k) flipped = resolve(call, e, k) != v0;
  if (stats) stats->tree_size += memo.resolved_ - call.start_nodes;
  return flipped;
}

Configuration BackwardEngine::evaluate_region(const Region& region, double t, QueryMemo& memo,
                                              QueryStats* stats) const {
  const BoundaryRule out_rule =
      boundary_ == BoundaryRule::HalfPlaneExperiment ? BoundaryRule::HalfPlaneExperiment : boundary_;
  Configuration out(region, out_rule);
  Call call = begin(memo, stats);
  auto spins = out.spins();
  for (std::size_t i = 0; i < region.size(); ++i) {
    const Site s = region.site_at(i);
    if (!is_live(s)) throw std::domain_error("evaluate_region: region leaves the window");
    QueryMemo::Entry& e = entry(call, canonical(s));
    spins[i] = static_cast<std::uint8_t>(resolve(call, e, count_upto(e, t)));
  }
  if (stats) stats->tree_size += memo.resolved_ - call.start_nodes;
  return out;
}

double TreeHistogram::mean_tree() const {
  if (tree_sizes.empty()) return 0.0;
  return std::accumulate(tree_sizes.begin(), tree_sizes.end(), 0.0) / static_cast<double>(tree_sizes.size());
}

double TreeHistogram::mean_depth() const {
  if (depths.empty()) return 0.0;
  return std::accumulate(depths.begin(), depths.end(), 0.0) / static_cast<double>(depths.size());
}

double TreeHistogram::tail(std::uint64_t s) const {
  if (tree_sizes.empty()) return 0.0;
  const auto n = std::count_if(tree_sizes.begin(), tree_sizes.end(), [s](std::uint64_t v) { return v > s; });
  return static_cast<double>(n) / static_cast<double>(tree_sizes.size());
}

TreeHistogram query_tree_histogram(const BackwardEngine& engine, const std::vector<Probe>& probes) {
  if (probes.empty()) throw std::invalid_argument("query_tree_histogram: no probes");
  TreeHistogram h;
  h.tree_sizes.reserve(probes.size());
  h.depths.reserve(probes.size());
  for (const Probe& pr : probes) {
    QueryMemo memo;
    QueryStats st;
    engine.spin_at(pr.site, pr.t, memo, &st);
    h.tree_sizes.push_back(st.tree_size);
    h.depths.push_back(st.max_depth);
  }
  return h;
}

}  // namespace ne
