#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "northeast/forward_engine.hpp"
#include "northeast/lattice.hpp"

namespace ne {

/// 0-sites joined to the window's south or west edge by a path of 0s taking
/// south or west steps. Returned as a mask in the region's row-major order.
std::vector<std::uint8_t> frozen_zero_cluster(const Configuration& c);
std::vector<Site> frozen_zero_sites(const Configuration& c);

/// Union of the oriented 0-clusters attached to the exterior SW boundary of
/// a block: 0-sites from which a path of 0s taking north or east steps ends
/// on that boundary.
struct ClusterSnapshot {
  std::vector<Site> members;
  std::vector<Site> interior_boundary;  // flip-eligible members (A)
  std::vector<Site> exterior_boundary;  // non-members south or west of a member (B), all spin 1
  /// Members with a south or west neighbor outside the cluster. Always
  /// satisfies B <= 2 * this count, unlike A.
  std::size_t interior_topological = 0;
  double time = 0.0;

  std::size_t a() const { return interior_boundary.size(); }
  std::size_t b() const { return exterior_boundary.size(); }
};

ClusterSnapshot cluster_attached(const Configuration& c, const Region& block);

enum class JumpKind : std::uint8_t { Addition, Deletion };

struct ClusterJump {
  double time = 0.0;
  std::size_t x_before = 0;
  std::size_t x_after = 0;
  std::size_t a = 0;  // pre-jump
  std::size_t b = 0;  // pre-jump
  std::size_t a_topological = 0;
  JumpKind kind = JumpKind::Addition;
  Site site;
};

struct ClusterTrace {
  Region block;
  Region window;
  std::vector<ClusterJump> jumps;
  std::uint64_t resets_seen = 0;
  std::uint64_t full_checks = 0;
};

struct TraceOptions {
  int margin = 24;                  // window = block grown by this many sites to the south and west, 2 to the north and east
  std::uint64_t check_every = 1000;  // resets between full recomputations
};

/// Forward run from a product Bernoulli-p start with the cluster maintained
/// incrementally from the reset log. A full recomputation after every jump
/// and every `check_every` resets must agree; a mismatch throws
/// std::logic_error.
ClusterTrace trace_cluster_process(const Region& block, double p, std::uint64_t seed, double t_max,
                                   TraceOptions opts = {});

void write_trace_csv(std::ostream& out, const ClusterTrace& trace);

/// Oriented site percolation from an open origin: generation g is the
/// anti-diagonal x + y = g, and a site is reached if it is open and its
/// south or west neighbor was reached.
struct SurvivalRun {
  double beta = 0.0;
  std::uint64_t trials = 0;
  std::uint32_t depth = 0;
  std::vector<std::uint64_t> deaths;  // deaths[g]: trials whose front is empty at generation g (first time)

  /// Fraction of trials whose front is nonempty at generation n.
  double survival(std::uint32_t n) const;
  std::uint64_t alive(std::uint32_t n) const;
};

SurvivalRun survival_probability(double beta, std::uint32_t depth, std::uint64_t trials, std::uint64_t seed);

enum class Phase : std::int8_t { Subcritical = -1, Inconclusive = 0, Supercritical = 1 };

/// Curvature of log-survival: hazard over (L/4, L/2] minus hazard over
/// (L/2, L]. Near zero at the critical point (power law), positive above
/// it, negative below.
struct PhaseTest {
  double beta = 0.0;
  double statistic = 0.0;
  double std_error = 0.0;
  Phase phase = Phase::Inconclusive;
};

PhaseTest classify_phase(const SurvivalRun& run, double z = 3.0);

struct BetaInterval {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<PhaseTest> steps;
  std::size_t inconclusive_steps = 0;  // midpoints decided by the sign of the statistic alone
};

/// Bisection on [0,1] until the bracket is no wider than `tolerance`.
BetaInterval estimate_beta_c(std::uint64_t trials, std::uint32_t depth, double tolerance, std::uint64_t seed);

}  // namespace ne
