#include "northeast/event_fabric.hpp"

#include <cmath>

namespace ne {

namespace {

constexpr std::uint8_t kGapSubspace = 0;
constexpr std::uint8_t kMarkSubspace = 1;

rng::Counter site_counter(Site s, std::uint64_t index, StreamDomain d, std::uint8_t sub) {
  return {static_cast<std::uint32_t>(s.x), static_cast<std::uint32_t>(s.y),
          static_cast<std::uint32_t>(index), stream_tag(d, sub, index)};
}

}  // namespace

std::string_view to_string(StreamDomain d) {
  switch (d) {
    case StreamDomain::Dynamics: return "dynamics";
    case StreamDomain::Initial: return "initial";
    case StreamDomain::RejectionFree: return "rejection-free";
    case StreamDomain::Percolation: return "percolation";
    case StreamDomain::Mixture: return "mixture";
    case StreamDomain::Replica: return "replica";
    case StreamDomain::Null: return "null";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica) {
  const rng::Counter c{static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32), 0,
                       stream_tag(StreamDomain::Replica, 0)};
  return rng::philox_u64(c, rng::key_from_seed(master));
}

EventFabric::EventFabric(EventSeed seed) : seed_(seed), key_(rng::key_from_seed(seed.master_seed)) {}

double EventFabric::gap(Site s, std::uint64_t index) const {
  const std::uint64_t w = rng::philox_u64(site_counter(s, index, seed_.domain, kGapSubspace), key_);
  return -std::log(rng::to_open_unit(w));
}

double EventFabric::mark(Site s, std::uint64_t index) const {
  const std::uint64_t w = rng::philox_u64(site_counter(s, index, seed_.domain, kMarkSubspace), key_);
  const double u = rng::to_open_unit(w);
  if (fault_ && fault_->site == s && fault_->index == index) return 1.0 - u;
  return u;
}

void EventFabric::inject_mark_fault(Site s, std::uint64_t index) { fault_ = Fault{s, index}; }

SiteEvent event_at(const EventFabric& fabric, Site s, std::uint64_t index) {
  double t = 0.0;
  for (std::uint64_t k = 1; k <= index; ++k) t += fabric.gap(s, k);
  return {s, index, t, fabric.mark(s, index)};
}

std::vector<SiteEvent> events_in_window(const EventFabric& fabric, Site s, double t0, double t1) {
  std::vector<SiteEvent> out;
  if (!(t1 > t0)) return out;
  for (SiteCursor c(fabric, s); c.time() <= t1; c.advance(fabric)) {
    if (c.time() > t0) out.push_back({s, c.index(), c.time(), fabric.mark(s, c.index())});
  }
  return out;
}

std::optional<SiteEvent> last_event_before(const EventFabric& fabric, Site s, double t) {
  std::optional<SiteEvent> last;
  for (SiteCursor c(fabric, s); c.time() <= t; c.advance(fabric)) {
    last = SiteEvent{s, c.index(), c.time(), 0.0};
  }
  if (last) last->mark = fabric.mark(s, last->index);
  return last;
}

std::uint8_t initial_bernoulli(std::uint64_t master_seed, Site s, std::uint64_t threshold) {
  const rng::Counter c{static_cast<std::uint32_t>(s.x), static_cast<std::uint32_t>(s.y), 0,
                       stream_tag(StreamDomain::Initial, 0)};
  return (rng::philox_u64(c, rng::key_from_seed(master_seed)) >> 11) < threshold ? 1 : 0;
}

}  // namespace ne
