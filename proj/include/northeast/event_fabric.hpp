#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "northeast/counter_rng.hpp"
#include "northeast/lattice.hpp"

namespace ne {

/// Independent counter subspaces. Every consumer of randomness has its own
/// domain so that, e.g., initial-condition sampling never collides with the
/// dynamics events.
enum class StreamDomain : std::uint8_t {
  Dynamics = 1,
  Initial = 2,
  RejectionFree = 3,
  Percolation = 4,
  Mixture = 5,
  Replica = 6,
  Null = 7,  // reference draws for noise floors
};

std::string_view to_string(StreamDomain d);

struct EventSeed {
  std::uint64_t master_seed = 0;
  StreamDomain domain = StreamDomain::Dynamics;

  friend bool operator==(const EventSeed&, const EventSeed&) = default;
};

/// Seed for replica r of an experiment keyed by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica);

/// One flip opportunity. index is the 1-based chronological rank at the site.
struct SiteEvent {
  Site site;
  std::uint64_t index = 0;
  double time = 0.0;
  double mark = 0.0;

  friend bool operator==(const SiteEvent&, const SiteEvent&) = default;
};

/// Marked rate-1 Poisson streams, one per site, as a pure function of
/// (seed, site, index). Gaps and marks live in disjoint counter subspaces.
class EventFabric {
 public:
  EventFabric(EventSeed seed);  // NOLINT: implicit by design of the call sites

  const EventSeed& seed() const { return seed_; }

  /// Exponential(1) gap preceding event `index` (index >= 1).
  double gap(Site s, std::uint64_t index) const;
  /// Uniform(0,1) mark of event `index`.
  double mark(Site s, std::uint64_t index) const;

  /// Test hook: the mark u of one event is replaced by 1 - u.
  void inject_mark_fault(Site s, std::uint64_t index);
  void clear_fault() { fault_.reset(); }

 private:
  struct Fault {
    Site site;
    std::uint64_t index;
  };
  EventSeed seed_;
  rng::Key key_;
  std::optional<Fault> fault_;
};

/// Walks the events of one site in chronological order. Times are the
/// left-to-right double sums of the gaps, so they agree bit-for-bit with
/// event_at().
class SiteCursor {
 public:
  SiteCursor() = default;
  SiteCursor(const EventFabric& fabric, Site s) : site_(s) { time_ = fabric.gap(s, 1); }

  std::uint64_t index() const { return index_; }
  double time() const { return time_; }
  Site site() const { return site_; }

  void advance(const EventFabric& fabric) {
    ++index_;
    time_ += fabric.gap(site_, index_);
  }

 private:
  Site site_{};
  std::uint64_t index_ = 1;
  double time_ = 0.0;
};

SiteEvent event_at(const EventFabric& fabric, Site s, std::uint64_t index);

/// Events with t0 < time <= t1, in increasing time order.
std::vector<SiteEvent> events_in_window(const EventFabric& fabric, Site s, double t0, double t1);

/// Last event with time <= t, if any.
std::optional<SiteEvent> last_event_before(const EventFabric& fabric, Site s, double t);

/// Time-0 spin drawn from product Bernoulli-p, keyed by (master seed, site).
std::uint8_t initial_bernoulli(std::uint64_t master_seed, Site s, std::uint64_t threshold);

/// Counter tag (fourth Philox word) for a domain / subspace pair.
constexpr std::uint32_t stream_tag(StreamDomain d, std::uint8_t subspace, std::uint64_t index = 0) {
  return (static_cast<std::uint32_t>(d) << 24) | (static_cast<std::uint32_t>(subspace) << 16) |
         static_cast<std::uint32_t>((index >> 32) & 0xFFFFu);
}

}  // namespace ne
