#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "northeast/lattice.hpp"

namespace ne {

struct ValidationItem {
  std::string name;
  bool passed = false;
  bool informational = false;  // reported, never fails the run
  std::string detail;
  double seconds = 0.0;
};

struct ValidationReport {
  std::vector<ValidationItem> items;
  bool passed() const;
  void print(std::ostream& out) const;
};

/// Gaps Exponential(1) and marks Uniform(0,1) by KS at level 0.01.
ValidationItem check_fabric_statistics(std::uint64_t samples, std::uint64_t seed);

struct CrossEngineOptions {
  int cases = 10;
  int side = 16;  // square GhostOnes window
  double t_max = 20.0;
  std::uint64_t seed = 1;
  /// Corrupt one mark in the forward engine's copy of the first case's
  /// fabric, at an event that decides a final spin.
  bool inject_fault = false;
};

/// Forward graphical and backward query engines agree on every site.
ValidationItem check_cross_engine(const CrossEngineOptions& opts);

/// Exact stationary law equals the product measure to 1e-10 on each box and p.
ValidationItem check_exact_stationarity(const std::vector<Region>& boxes, const std::vector<double>& ps);

/// Occupation frequencies of a long 2x2 run against the product measure,
/// chi-square at level 0.01. A spacing of 0 means five relaxation times of
/// the exact chain, so that consecutive samples are nearly independent.
ValidationItem check_long_run_occupation(double p, std::uint64_t samples, std::uint64_t seed, double spacing = 0.0);

struct ClusterSweepResult {
  std::uint64_t snapshots = 0;
  std::uint64_t jumps = 0;
  std::uint64_t literal_violations = 0;      // B > 2A
  std::uint64_t topological_violations = 0;  // B > 2 * (members with an outside S or W neighbor)
  std::uint64_t drift_violations = 0;         // nonempty, p A <= (1 - p) B
  std::uint64_t empty_interior = 0;          // nonempty cluster with A = 0
  std::uint64_t unit_jump_violations = 0;
  std::size_t worst_b = 0;
  std::size_t worst_a = 0;
};

/// Random product configurations at p, then traced cluster processes.
ClusterSweepResult sweep_cluster_ratio(double p, std::uint64_t configurations, std::uint64_t traces,
                                       double trace_t, std::uint64_t seed);

enum class ValidationLevel { Fast, Full };
ValidationLevel parse_validation_level(std::string_view text);

struct ValidationOptions {
  ValidationLevel level = ValidationLevel::Fast;
  std::uint64_t seed = 1;
  bool inject_fault = false;
};

ValidationReport run_validation(const ValidationOptions& opts);

}  // namespace ne
