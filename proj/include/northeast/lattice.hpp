#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ne {

/// A lattice site: x grows to the east, y to the north.
struct Site {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend constexpr bool operator==(Site, Site) = default;
};

constexpr Site south_of(Site s) { return {s.x, s.y - 1}; }
constexpr Site west_of(Site s) { return {s.x - 1, s.y}; }
constexpr Site north_of(Site s) { return {s.x, s.y + 1}; }
constexpr Site east_of(Site s) { return {s.x + 1, s.y}; }

struct SwNeighbors {
  Site south;
  Site west;
};

constexpr SwNeighbors sw_neighbors(Site s) { return {south_of(s), west_of(s)}; }

/// Coordinatewise partial order: a <= b iff a.x <= b.x and a.y <= b.y.
constexpr bool coord_le(Site a, Site b) { return a.x <= b.x && a.y <= b.y; }

/// Total order used to break ties between simultaneous events: (y, x)
/// lexicographic, which is also row-major order inside a Region.
constexpr bool row_major_less(Site a, Site b) {
  return a.y != b.y ? a.y < b.y : a.x < b.x;
}

constexpr std::uint64_t pack_site(Site s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y)) << 32) |
         static_cast<std::uint32_t>(s.x);
}

struct SiteHash {
  std::size_t operator()(Site s) const noexcept {
    std::uint64_t k = pack_site(s) * 0x9E3779B97F4A7C15ull;
    return static_cast<std::size_t>(k ^ (k >> 29));
  }
};

/// Axis-aligned rectangle of sites with a closed-form membership test.
class Region {
 public:
  Region() = default;
  Region(Site origin, int width, int height);

  Site origin() const { return origin_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  bool contains(Site s) const {
    return s.x >= origin_.x && s.y >= origin_.y && s.x < origin_.x + width_ &&
           s.y < origin_.y + height_;
  }
  std::size_t index_of(Site s) const {
    return static_cast<std::size_t>(s.y - origin_.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(s.x - origin_.x);
  }
  Site site_at(std::size_t i) const {
    return {origin_.x + static_cast<std::int32_t>(i % static_cast<std::size_t>(width_)),
            origin_.y + static_cast<std::int32_t>(i / static_cast<std::size_t>(width_))};
  }
  Site sw_corner() const { return origin_; }
  Site ne_corner() const { return {origin_.x + width_ - 1, origin_.y + height_ - 1}; }

  std::vector<Site> sites() const;

  friend bool operator==(const Region&, const Region&) = default;

 private:
  Site origin_{};
  int width_ = 1;
  int height_ = 1;
};

/// Smallest region containing both a and b.
Region bounding_region(Site a, Site b);

/// Intersection of two regions; false when it is empty.
bool intersect(const Region& a, const Region& b, Region& out);

enum class BoundaryRule {
  GhostOnes,            // sites outside read spin 1
  GhostZeros,           // sites outside read spin 0
  Periodic,             // lookups wrap on the torus
  HalfPlaneExperiment,  // region embedded in a lazily evaluated plane
};

std::string_view to_string(BoundaryRule b);
BoundaryRule parse_boundary(std::string_view text);

/// Spin assignment on a region. Lookups outside the region resolve through the
/// boundary rule; HalfPlaneExperiment has no stored outside values, so the
/// configuration itself cannot answer them (the backward engine supplies them).
class Configuration {
 public:
  Configuration() = default;
  Configuration(Region region, BoundaryRule boundary, std::uint8_t fill = 0);

  const Region& region() const { return region_; }
  BoundaryRule boundary() const { return boundary_; }

  std::span<const std::uint8_t> spins() const { return spins_; }
  std::span<std::uint8_t> spins() { return spins_; }

  std::uint8_t operator[](std::size_t i) const { return spins_[i]; }

  /// Spin at any site; throws std::domain_error when the boundary rule cannot
  /// resolve it (HalfPlaneExperiment outside the region).
  std::uint8_t at(Site s) const;
  void set(Site s, std::uint8_t value);

  /// Both south and west neighbors read 1. Does not look at s itself.
  bool is_flip_eligible(Site s) const;

  std::size_t count_ones() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  Region region_{};
  BoundaryRule boundary_ = BoundaryRule::GhostOnes;
  std::vector<std::uint8_t> spins_;
};

struct ConeSets {
  std::vector<Site> below;       // {y in r : y <= s}
  std::vector<Site> unaffected;  // {y in r : not (s <= y)}
};

ConeSets cone_sets(Site s, const Region& r);

/// Sites outside r adjacent to it from the south or west: the south row
/// first (west to east), then the west column (south to north).
std::vector<Site> sw_exterior_boundary(const Region& r);

}  // namespace ne
