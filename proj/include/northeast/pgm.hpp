#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "northeast/lattice.hpp"

namespace ne {

/// Raw P5 graymap. Row 0 of `pixels` is the northernmost row.
struct Graymap {
  int width = 0;
  int height = 0;
  std::string comment;
  std::vector<std::uint8_t> pixels;
};

void write_pgm(std::ostream& out, const Graymap& img);
Graymap read_pgm(std::istream& in);

/// Snapshot of a configuration: 0 -> 0, 1 -> 255, north row first, comment
/// records the region origin and the simulation time.
Graymap snapshot_graymap(const Configuration& c, double time);
void write_snapshot(std::ostream& out, const Configuration& c, double time);

/// Inverse of snapshot_graymap (boundary rule supplied by the caller).
Configuration configuration_from_graymap(const Graymap& img, Site origin, BoundaryRule boundary);

}  // namespace ne
