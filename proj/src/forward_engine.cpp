#include "northeast/forward_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "northeast/simd/kernels.hpp"

namespace ne {

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in (0,1), got " + std::to_string(p));
  }
}

SimulationState::SimulationState(Configuration initial) : config(std::move(initial)) {
  const std::size_t n = config.region().size();
  opportunities.assign(n, 0);
  resets.assign(n, 0);
  first_reset.assign(n, kNever);
  flipped_once.assign(n, 0);
  next_index.assign(n, 1);
}

std::vector<std::uint8_t> eligibility_mask(const Configuration& c) {
  const Region& r = c.region();
  const auto w = static_cast<std::size_t>(r.width());
  const auto h = static_cast<std::size_t>(r.height());
  std::uint8_t ghost = 0;
  switch (c.boundary()) {
    case BoundaryRule::GhostOnes: ghost = 1; break;
    case BoundaryRule::GhostZeros: ghost = 0; break;
    case BoundaryRule::Periodic: break;
    case BoundaryRule::HalfPlaneExperiment:
      throw std::invalid_argument("eligibility_mask: half-plane configurations have no closed boundary");
  }
  const bool periodic = c.boundary() == BoundaryRule::Periodic;
  const std::vector<std::uint8_t> ghost_row(w, ghost);
  std::vector<std::uint8_t> out(r.size());
  const auto spins = c.spins();
  const auto& k = simd::kernels();
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* row = spins.data() + y * w;
    const std::uint8_t* south = y > 0 ? row - w : (periodic ? spins.data() + (h - 1) * w : ghost_row.data());
    const std::uint8_t west = periodic ? row[w - 1] : ghost;
    k.eligibility_row(south, row, west, w, out.data() + y * w);
  }
  return out;
}

NeighborTable::NeighborTable(const Region& r, BoundaryRule b) {
  const std::size_t n = r.size();
  south_.resize(n);
  west_.resize(n);
  north_.resize(n);
  east_.resize(n);
  const std::uint32_t ghost = b == BoundaryRule::GhostOnes ? kGhostOne : kGhostZero;
  const bool periodic = b == BoundaryRule::Periodic;
  const int w = r.width(), h = r.height();
  auto idx = [w](int x, int y) { return static_cast<std::uint32_t>(y * w + x); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = idx(x, y);
      if (periodic) {
        south_[i] = idx(x, (y + h - 1) % h);
        west_[i] = idx((x + w - 1) % w, y);
        north_[i] = idx(x, (y + 1) % h);
        east_[i] = idx((x + 1) % w, y);
      } else {
        south_[i] = y > 0 ? idx(x, y - 1) : ghost;
        west_[i] = x > 0 ? idx(x - 1, y) : ghost;
        north_[i] = y + 1 < h ? idx(x, y + 1) : ghost;
        east_[i] = x + 1 < w ? idx(x + 1, y) : ghost;
      }
    }
  }
}

namespace {

void check_engine_boundary(const Configuration& c) {
  if (c.boundary() == BoundaryRule::HalfPlaneExperiment) {
    throw std::invalid_argument("forward engines need a closed boundary (ghost-ones, ghost-zeros or periodic)");
  }
}

void record_reset(SimulationState& s, std::size_t i, double t, std::uint8_t old_spin, std::uint8_t new_spin) {
  if (s.resets[i]++ == 0) s.first_reset[i] = t;
  if (old_spin != new_spin) s.flipped_once[i] = 1;
}

}  // namespace

// ---------------------------------------------------------------------------

GraphicalEngine::GraphicalEngine(Configuration initial, double p, EventFabric fabric, ForwardOptions opts)
    : p_(p), fabric_(std::move(fabric)), opts_(opts) {
  require_open_unit(p, "p");
  check_engine_boundary(initial);
  const Region r = initial.region();
  state_ = SimulationState(std::move(initial));
  nbr_ = NeighborTable(r, state_.config.boundary());
  const std::size_t n = r.size();
  cursor_.resize(n);
  parked_.assign(n, 0);
  const auto elig = eligibility_mask(state_.config);
  heap_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cursor_[i] = SiteCursor(fabric_, r.site_at(i));
    if (opts_.park_ineligible && !elig[i]) {
      parked_[i] = 1;
      continue;
    }
    heap_push({cursor_[i].time(), static_cast<std::uint32_t>(i)});
  }
}

void GraphicalEngine::heap_push(HeapEntry e) {
  std::size_t i = heap_.size();
  heap_.push_back(e);
  while (i > 0) {
    const std::size_t parent = (i - 1) / 2;
    if (!later(heap_[parent], e)) break;
    heap_[i] = heap_[parent];
    i = parent;
  }
  heap_[i] = e;
}

void GraphicalEngine::heap_replace_top(HeapEntry e) {
  const std::size_t n = heap_.size();
  std::size_t i = 0;
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= n) break;
    if (child + 1 < n && later(heap_[child], heap_[child + 1])) ++child;
    if (!later(e, heap_[child])) break;
    heap_[i] = heap_[child];
    i = child;
  }
  heap_[i] = e;
}

void GraphicalEngine::heap_pop() {
  const HeapEntry last = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) heap_replace_top(last);
}

double GraphicalEngine::next_event_time() const { return heap_.empty() ? kNever : heap_.front().time; }

// Site k just became eligible because `trigger` flipped to 1 at time t. Its
// events strictly before (t, trigger) in the global order found it
// ineligible; they are consumed here as bare opportunities.
void GraphicalEngine::wake(std::uint32_t k, double t, std::uint32_t trigger) {
  SiteCursor& c = cursor_[k];
  while (c.time() < t || (c.time() == t && k < trigger)) {
    ++state_.opportunities[k];
    c.advance(fabric_);
  }
  state_.next_index[k] = c.index();
  parked_[k] = 0;
  heap_push({c.time(), k});
}

std::optional<ResetLogEntry> GraphicalEngine::process_top() {
  const HeapEntry top = heap_.front();
  const std::uint32_t i = top.index;
  SiteCursor& c = cursor_[i];
  const auto spins = state_.config.spins();
  std::optional<ResetLogEntry> entry;

  state_.clock = top.time;
  ++state_.opportunities[i];
  const bool eligible = nbr_.eligible(spins, i);
  if (eligible) {
    const double u = fabric_.mark(c.site(), c.index());
    const std::uint8_t old_spin = spins[i];
    const std::uint8_t new_spin = u <= p_ ? 1 : 0;
    spins[i] = new_spin;
    record_reset(state_, i, top.time, old_spin, new_spin);
    entry = ResetLogEntry{c.site(), top.time, old_spin, new_spin};
  }
  c.advance(fabric_);
  state_.next_index[i] = c.index();

  if (eligible || !opts_.park_ineligible) {
    heap_replace_top({c.time(), i});
  } else {
    heap_pop();
    parked_[i] = 1;
  }

  if (entry && entry->old_spin == 0 && entry->new_spin == 1 && opts_.park_ineligible) {
    for (const std::uint32_t k : {nbr_.north(i), nbr_.east(i)}) {
      if (NeighborTable::is_site(k) && parked_[k] && nbr_.eligible(spins, k)) wake(k, top.time, i);
    }
  }
  if (entry && observer_) observer_(*entry);
  return entry;
}

std::optional<ResetLogEntry> GraphicalEngine::step() {
  if (heap_.empty()) return std::nullopt;
  return process_top();
}

void GraphicalEngine::run_until(double t) {
  if (t < state_.clock) throw std::invalid_argument("run_until: target time is before the clock");
  while (!heap_.empty() && heap_.front().time <= t) process_top();
  state_.clock = t;
  if (opts_.track_opportunities) sync_counters();
}

void GraphicalEngine::sync_counters() {
  const double t = state_.clock;
  for (std::size_t i = 0; i < parked_.size(); ++i) {
    if (!parked_[i]) continue;
    SiteCursor& c = cursor_[i];
    while (c.time() <= t) {
      ++state_.opportunities[i];
      c.advance(fabric_);
    }
    state_.next_index[i] = c.index();
  }
}

// ---------------------------------------------------------------------------

RejectionFreeEngine::RejectionFreeEngine(Configuration initial, double p, std::uint64_t master_seed)
    : p_(p), key_(rng::key_from_seed(master_seed)) {
  require_open_unit(p, "p");
  check_engine_boundary(initial);
  const Region r = initial.region();
  state_ = SimulationState(std::move(initial));
  nbr_ = NeighborTable(r, state_.config.boundary());
  slot_.assign(r.size(), kNoSlot);
  const auto elig = eligibility_mask(state_.config);
  for (std::size_t i = 0; i < elig.size(); ++i) {
    if (elig[i]) set_eligible(static_cast<std::uint32_t>(i), true);
  }
  draw_next();
}

void RejectionFreeEngine::set_eligible(std::uint32_t i, bool on) {
  if (on == (slot_[i] != kNoSlot)) return;
  if (on) {
    slot_[i] = static_cast<std::uint32_t>(eligible_.size());
    eligible_.push_back(i);
  } else {
    const std::uint32_t s = slot_[i];
    const std::uint32_t moved = eligible_.back();
    eligible_[s] = moved;
    slot_[moved] = s;
    eligible_.pop_back();
    slot_[i] = kNoSlot;
  }
}

// Draw d uses counter (d_lo, d_hi, subspace, tag); subspace 0 gives the
// waiting time and the site choice, subspace 1 the coin.
void RejectionFreeEngine::draw_next() {
  if (eligible_.empty()) {
    pending_time_ = kNever;
    return;
  }
  const std::uint32_t tag = stream_tag(StreamDomain::RejectionFree, 0, draws_);
  const rng::Counter c{static_cast<std::uint32_t>(draws_), 0, 0, tag};
  const rng::Counter o = rng::philox4x32_10(c, key_);
  const std::uint64_t w_time = (static_cast<std::uint64_t>(o[1]) << 32) | o[0];
  const std::uint64_t w_pick = (static_cast<std::uint64_t>(o[3]) << 32) | o[2];
  const double gap = -std::log(rng::to_open_unit(w_time)) / static_cast<double>(eligible_.size());
  pending_time_ = state_.clock + gap;
  pending_pick_ = static_cast<std::uint32_t>(
      (static_cast<unsigned __int128>(w_pick) * eligible_.size()) >> 64);
}

void RejectionFreeEngine::run_until(double t) {
  if (t < state_.clock) throw std::invalid_argument("run_until: target time is before the clock");
  const auto spins = state_.config.spins();
  while (pending_time_ <= t) {
    const std::uint32_t i = eligible_[pending_pick_];
    const std::uint32_t tag = stream_tag(StreamDomain::RejectionFree, 1, draws_);
    const double u = rng::to_open_unit(
        rng::philox_u64({static_cast<std::uint32_t>(draws_), 0, 0, tag}, key_));
    ++draws_;
    state_.clock = pending_time_;
    const std::uint8_t old_spin = spins[i];
    const std::uint8_t new_spin = u <= p_ ? 1 : 0;
    spins[i] = new_spin;
    ++state_.opportunities[i];
    record_reset(state_, i, state_.clock, old_spin, new_spin);
    if (old_spin != new_spin) {
      for (const std::uint32_t k : {nbr_.north(i), nbr_.east(i)}) {
        if (NeighborTable::is_site(k)) set_eligible(k, nbr_.eligible(spins, k));
      }
    }
    if (observer_) observer_(ResetLogEntry{state_.config.region().site_at(i), state_.clock, old_spin, new_spin});
    draw_next();
  }
  state_.clock = t;
}

// ---------------------------------------------------------------------------

std::vector<ResetTimeRow> reset_time_report(const SimulationState& s) {
  const Region& r = s.config.region();
  std::vector<ResetTimeRow> rows;
  rows.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    rows.push_back({r.site_at(i), s.first_reset[i], s.opportunities[i], s.resets[i]});
  }
  return rows;
}

}  // namespace ne
