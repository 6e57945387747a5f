#include "northeast/lattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace ne {

Region::Region(Site origin, int width, int height)
    : origin_(origin), width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("Region: width and height must be >= 1");
  }
}

std::vector<Site> Region::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(site_at(i));
  return out;
}

Region bounding_region(Site a, Site b) {
  Site lo{std::min(a.x, b.x), std::min(a.y, b.y)};
  Site hi{std::max(a.x, b.x), std::max(a.y, b.y)};
  return Region(lo, hi.x - lo.x + 1, hi.y - lo.y + 1);
}

bool intersect(const Region& a, const Region& b, Region& out) {
  const Site alo = a.sw_corner(), ahi = a.ne_corner();
  const Site blo = b.sw_corner(), bhi = b.ne_corner();
  Site lo{std::max(alo.x, blo.x), std::max(alo.y, blo.y)};
  Site hi{std::min(ahi.x, bhi.x), std::min(ahi.y, bhi.y)};
  if (lo.x > hi.x || lo.y > hi.y) return false;
  out = Region(lo, hi.x - lo.x + 1, hi.y - lo.y + 1);
  return true;
}

std::string_view to_string(BoundaryRule b) {
  switch (b) {
    case BoundaryRule::GhostOnes: return "ghost-ones";
    case BoundaryRule::GhostZeros: return "ghost-zeros";
    case BoundaryRule::Periodic: return "periodic";
    case BoundaryRule::HalfPlaneExperiment: return "half-plane";
  }
  return "?";
}

BoundaryRule parse_boundary(std::string_view text) {
  if (text == "ghost-ones") return BoundaryRule::GhostOnes;
  if (text == "ghost-zeros") return BoundaryRule::GhostZeros;
  if (text == "periodic") return BoundaryRule::Periodic;
  if (text == "half-plane") return BoundaryRule::HalfPlaneExperiment;
  throw std::invalid_argument("unknown boundary rule: " + std::string(text));
}

Configuration::Configuration(Region region, BoundaryRule boundary, std::uint8_t fill)
    : region_(region), boundary_(boundary), spins_(region.size(), fill ? 1 : 0) {}

std::uint8_t Configuration::at(Site s) const {
  if (region_.contains(s)) return spins_[region_.index_of(s)];
  switch (boundary_) {
    case BoundaryRule::GhostOnes: return 1;
    case BoundaryRule::GhostZeros: return 0;
    case BoundaryRule::Periodic: {
      const Site o = region_.origin();
      auto wrap = [](std::int32_t v, std::int32_t n) { return ((v % n) + n) % n; };
      Site w{o.x + wrap(s.x - o.x, region_.width()), o.y + wrap(s.y - o.y, region_.height())};
      return spins_[region_.index_of(w)];
    }
    case BoundaryRule::HalfPlaneExperiment:
      break;
  }
  throw std::domain_error("Configuration::at: site outside a half-plane window has no stored spin");
}

void Configuration::set(Site s, std::uint8_t value) {
  if (!region_.contains(s)) throw std::domain_error("Configuration::set: site outside region");
  spins_[region_.index_of(s)] = value ? 1 : 0;
}

bool Configuration::is_flip_eligible(Site s) const {
  if (!region_.contains(s)) {
    throw std::domain_error("is_flip_eligible: site outside region");
  }
  const auto [south, west] = sw_neighbors(s);
  return at(south) == 1 && at(west) == 1;
}

std::size_t Configuration::count_ones() const {
  return static_cast<std::size_t>(std::count(spins_.begin(), spins_.end(), std::uint8_t{1}));
}

ConeSets cone_sets(Site s, const Region& r) {
  ConeSets out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Site y = r.site_at(i);
    if (coord_le(y, s)) out.below.push_back(y);
    if (!coord_le(s, y)) out.unaffected.push_back(y);
  }
  return out;
}

std::vector<Site> sw_exterior_boundary(const Region& r) {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(r.width() + r.height()));
  const Site o = r.origin();
  for (int dx = 0; dx < r.width(); ++dx) out.push_back({o.x + dx, o.y - 1});
  for (int dy = 0; dy < r.height(); ++dy) out.push_back({o.x - 1, o.y + dy});
  return out;
}

}  // namespace ne
