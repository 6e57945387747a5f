#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "northeast/event_fabric.hpp"
#include "northeast/lattice.hpp"

namespace ne {

/// The recursion ran past its node budget. Never a wrong value: the query is
/// abandoned.
class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(std::uint64_t budget);
  std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t budget_;
};

/// A time-0 spin was requested that the initial law cannot supply.
class InitialSpinError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Time-0 spins: a fixed configuration, a lazily drawn Bernoulli-p plane, or
/// a fixed window embedded in a lazy plane.
struct InitialLaw {
  std::optional<Configuration> fixed;  // authoritative inside its region
  bool lazy = false;
  std::uint64_t lazy_seed = 0;
  std::uint64_t threshold = 0;
  bool zero_first_quadrant = false;  // lazy sites with x >= 0 and y >= 0 start at 0

  static InitialLaw from_configuration(Configuration c);
  static InitialLaw lazy_plane(std::uint64_t seed, double p, bool zero_first_quadrant = false);

  std::uint8_t spin(Site s) const;
};

struct QueryStats {
  std::vector<Site> queried_sites;
  std::uint64_t tree_size = 0;  // distinct (site, event) nodes resolved
  std::uint32_t max_depth = 0;

  void merge(const QueryStats& other);
};

/// Resolved spins keyed by (site, event index). Index 0 is the time-0 spin,
/// index k the spin right after the site's k-th event. Only valid for the
/// engine configuration that filled it.
class QueryMemo {
 public:
  std::size_t site_count() const { return entries_.size(); }
  std::uint64_t resolved_nodes() const { return resolved_; }
  std::vector<Site> touched_sites() const;
  void clear() {
    entries_.clear();
    resolved_ = 0;
  }

 private:
  friend class BackwardEngine;
  struct Entry {
    Site site;
    std::vector<double> times;        // times[k-1] = time of event k; last one exceeds every horizon asked so far
    std::vector<std::int8_t> values;  // -1 = unresolved
    std::uint64_t stamp = 0;
  };
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::uint64_t resolved_ = 0;
};

/// The backward query algorithm: xi_t(s) found by scanning the events of s
/// backwards and recursing into the south and west neighbors at each one.
class BackwardEngine {
 public:
  static constexpr std::uint64_t kDefaultBudget = 100'000'000;

  /// `window` and `boundary` fix which sites are live. GhostOnes/GhostZeros
  /// sites outside the window are constants, Periodic wraps, and
  /// HalfPlaneExperiment makes every site of the plane live.
  BackwardEngine(EventFabric fabric, double p, InitialLaw initial, Region window, BoundaryRule boundary);

  void set_budget(std::uint64_t nodes) { budget_ = nodes; }
  std::uint64_t budget() const { return budget_; }
  double p() const { return p_; }
  const Region& window() const { return window_; }
  BoundaryRule boundary() const { return boundary_; }

  /// xi_t(s). Throws BudgetExhausted, InitialSpinError, or std::domain_error
  /// for a site that is not live.
  std::uint8_t spin_at(Site s, double t, QueryMemo& memo, QueryStats* stats = nullptr) const;

  /// Whether s changed away from its time-0 spin at some event in (0, t].
  bool flipped_by(Site s, double t, QueryMemo& memo, QueryStats* stats = nullptr) const;

  /// Every site of `region` at time t with one shared memo; the budget applies
  /// to the whole call.
  Configuration evaluate_region(const Region& region, double t, QueryMemo& memo, QueryStats* stats = nullptr) const;

 private:
  struct Frame {
    QueryMemo::Entry* e;
    std::uint32_t k;
    std::uint8_t stage;
    std::int8_t south;
  };
  struct Call {
    QueryMemo& memo;
    QueryStats* stats;
    std::uint64_t stamp;
    std::uint64_t start_nodes;
  };
  struct Neighbor {
    QueryMemo::Entry* e = nullptr;  // null for ghost constants
    std::uint32_t k = 0;
    std::int8_t constant = 0;
  };

  Call begin(QueryMemo& memo, QueryStats* stats) const;
  QueryMemo::Entry& entry(Call& call, Site canonical) const;
  Site canonical(Site s) const;
  bool is_live(Site s) const;
  void cover(QueryMemo::Entry& e, double t) const;
  std::uint32_t count_upto(QueryMemo::Entry& e, double t) const;
  Neighbor neighbor(Call& call, Site of, Site n, double t) const;
  std::int8_t resolve(Call& call, QueryMemo::Entry& e, std::uint32_t k) const;

  EventFabric fabric_;
  double p_;
  InitialLaw initial_;
  Region window_;
  BoundaryRule boundary_;
  std::uint64_t budget_ = kDefaultBudget;
  mutable std::uint64_t stamp_ = 0;
  mutable std::vector<Frame> stack_;
};

struct Probe {
  Site site;
  double t;
};

struct TreeHistogram {
  std::vector<std::uint64_t> tree_sizes;
  std::vector<std::uint32_t> depths;

  double mean_tree() const;
  double mean_depth() const;
  /// Fraction of probes with tree_size > s.
  double tail(std::uint64_t s) const;
};

/// Each probe gets a fresh memo.
TreeHistogram query_tree_histogram(const BackwardEngine& engine, const std::vector<Probe>& probes);

}  // namespace ne
