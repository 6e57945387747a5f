#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "northeast/event_fabric.hpp"
#include "northeast/lattice.hpp"

namespace ne {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Configuration plus per-site counters, all indexed by the region's
/// row-major site index.
struct SimulationState {
  Configuration config;
  double clock = 0.0;
  std::vector<std::uint64_t> opportunities;  // flip opportunities up to clock
  std::vector<std::uint64_t> resets;
  std::vector<double> first_reset;  // kNever until the first reset
  std::vector<std::uint8_t> flipped_once;
  std::vector<std::uint64_t> next_index;  // rank of the next unconsumed event

  SimulationState() = default;
  explicit SimulationState(Configuration initial);

  friend bool operator==(const SimulationState&, const SimulationState&) = default;
};

struct ResetLogEntry {
  Site site;
  double time = 0.0;
  std::uint8_t old_spin = 0;
  std::uint8_t new_spin = 0;

  friend bool operator==(const ResetLogEntry&, const ResetLogEntry&) = default;
};

using ResetObserver = std::function<void(const ResetLogEntry&)>;

/// Per-site eligibility of a whole configuration (GhostOnes, GhostZeros or
/// Periodic boundary).
std::vector<std::uint8_t> eligibility_mask(const Configuration& c);

/// Precomputed neighbor indices of a window; ghost neighbors are encoded as
/// kGhostOne / kGhostZero.
class NeighborTable {
 public:
  static constexpr std::uint32_t kGhostZero = 0xFFFFFFFFu;
  static constexpr std::uint32_t kGhostOne = 0xFFFFFFFEu;

  NeighborTable() = default;
  NeighborTable(const Region& r, BoundaryRule b);

  std::uint32_t south(std::size_t i) const { return south_[i]; }
  std::uint32_t west(std::size_t i) const { return west_[i]; }
  std::uint32_t north(std::size_t i) const { return north_[i]; }
  std::uint32_t east(std::size_t i) const { return east_[i]; }

  static bool is_site(std::uint32_t n) { return n < kGhostOne; }

  static std::uint8_t read(std::span<const std::uint8_t> spins, std::uint32_t n) {
    return is_site(n) ? spins[n] : (n == kGhostOne ? 1 : 0);
  }
  bool eligible(std::span<const std::uint8_t> spins, std::size_t i) const {
    return read(spins, south_[i]) & read(spins, west_[i]);
  }

 private:
  std::vector<std::uint32_t> south_, west_, north_, east_;
};

struct ForwardOptions {
  /// Sites whose constraint fails are taken off the event queue until a
  /// neighbor flips to 1; their skipped events are counted on wake-up. The
  /// trajectory is identical to processing every event.
  bool park_ineligible = true;
  /// Bring the opportunity counters of parked sites up to the clock at the
  /// end of every run_until().
  bool track_opportunities = true;
};

/// Chronological sweep over the event fabric of a finite window.
class GraphicalEngine {
 public:
  GraphicalEngine(Configuration initial, double p, EventFabric fabric, ForwardOptions opts = {});

  /// Consume the globally earliest pending event. With parking enabled,
  /// events of parked sites are no-ops and are skipped; returns nullopt if the
  /// consumed event was not a reset or no event can ever fire.
  std::optional<ResetLogEntry> step();

  /// Consume every event with time <= t; clock becomes t.
  void run_until(double t);

  /// Counters of parked sites up to the clock (run_until does this already).
  void sync_counters();

  const SimulationState& state() const { return state_; }
  double p() const { return p_; }
  const EventFabric& fabric() const { return fabric_; }
  void set_observer(ResetObserver obs) { observer_ = std::move(obs); }

  /// Time of the next event that will be processed, or kNever.
  double next_event_time() const;

 private:
  struct HeapEntry {
    double time;
    std::uint32_t index;
  };
  static bool later(const HeapEntry& a, const HeapEntry& b) {
    return a.time != b.time ? a.time > b.time : a.index > b.index;
  }
  void heap_push(HeapEntry e);
  void heap_pop();
  void heap_replace_top(HeapEntry e);
  std::optional<ResetLogEntry> process_top();
  void wake(std::uint32_t k, double t, std::uint32_t trigger);

  SimulationState state_;
  double p_;
  EventFabric fabric_;
  ForwardOptions opts_;
  NeighborTable nbr_;
  std::vector<SiteCursor> cursor_;
  std::vector<std::uint8_t> parked_;
  std::vector<HeapEntry> heap_;
  ResetObserver observer_;
};

/// Same law as GraphicalEngine, different path: only eligible sites carry
/// clocks (total rate = number of eligible sites). Its randomness is the
/// RejectionFree domain of the seed. Opportunity counters equal reset counters.
class RejectionFreeEngine {
 public:
  RejectionFreeEngine(Configuration initial, double p, std::uint64_t master_seed);

  void run_until(double t);

  const SimulationState& state() const { return state_; }
  void set_observer(ResetObserver obs) { observer_ = std::move(obs); }
  std::size_t eligible_count() const { return eligible_.size(); }

 private:
  void draw_next();
  void set_eligible(std::uint32_t i, bool on);

  static constexpr std::uint32_t kNoSlot = 0xFFFFFFFFu;

  SimulationState state_;
  double p_;
  rng::Key key_;
  NeighborTable nbr_;
  std::vector<std::uint32_t> eligible_;
  std::vector<std::uint32_t> slot_;
  std::uint64_t draws_ = 0;
  double pending_time_ = kNever;
  std::uint32_t pending_pick_ = 0;
  ResetObserver observer_;
};

struct ResetTimeRow {
  Site site;
  double first_reset;  // kNever if never reset
  std::uint64_t opportunities;
  std::uint64_t resets;
};

std::vector<ResetTimeRow> reset_time_report(const SimulationState& s);

/// Throws std::invalid_argument unless 0 < p < 1.
void require_open_unit(double p, const char* what);

}  // namespace ne
