#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "northeast/lattice.hpp"

namespace ne {

/// i.i.d. Bernoulli-p spins on `region`, keyed by (seed, site) in the Initial
/// stream domain; agrees sitewise with initial_bernoulli.
Configuration sample_bernoulli(const Region& region, double p, std::uint64_t seed,
                               BoundaryRule boundary = BoundaryRule::GhostOnes);

/// Frozen 0-set. Grid sets are global predicates; explicit sets hold their
/// sites.
class GammaSet {
 public:
  enum class Kind { Grid, Explicit };

  static GammaSet grid(int m, Site offset);
  static GammaSet explicit_sites(const std::vector<Site>& sites);

  Kind kind() const { return kind_; }
  int modulus() const { return m_; }
  Site offset() const { return offset_; }
  bool contains(Site s) const;

  /// Outside the set with its south or west neighbor inside: such sites are
  /// never eligible, so a 1 there stays 1.
  bool is_collar(Site s) const;

  /// Short text form for manifests: "grid m=3 offset=1,2" or "explicit n=…".
  std::string describe() const;

 private:
  Kind kind_ = Kind::Grid;
  int m_ = 2;
  Site offset_{};
  std::unordered_set<Site, SiteHash> sites_;
};

/// Sites whose shifted coordinates have x or y divisible by m.
GammaSet build_gamma_grid(int m, Site offset, const Region& window);

struct GammaReport {
  bool condition_a = true;
  bool condition_b = true;
  std::vector<Site> violations_a;  // members with neither south nor west neighbor in the set
  std::size_t complement_components = 0;
  std::size_t edge_components = 0;  // complement components cut by the window edge
  std::vector<std::string> notes;

  bool ok() const { return condition_a && condition_b; }
};

GammaReport validate_gamma(const GammaSet& g, const Region& window);

/// 0 on the set, 1 elsewhere, GhostZeros outside so the freeze holds at the
/// window edge too.
Configuration lambda_gamma_initial(const GammaSet& g, const Region& window);

struct MixtureSample {
  Configuration config;
  Site offset;
};

/// Uniform offset among the m^2 grid translates, set sites 0, collar 1, and
/// the remaining sites Bernoulli-p.
MixtureSample sample_mixture_mu(int m, double p, const Region& window, std::uint64_t seed);

/// Continuous-time chain on every configuration of a small region.
struct ExactChain {
  Region region;
  BoundaryRule boundary = BoundaryRule::GhostOnes;
  double p = 0.5;

  std::size_t state_count() const { return std::size_t{1} << region.size(); }
  /// Rate from state to state ^ (1 << i), or 0 if site i is not eligible.
  double flip_rate(std::uint32_t state, std::size_t i) const;
};

ExactChain make_exact_chain(const Region& region, BoundaryRule boundary, double p);

struct StationaryResult {
  bool unique = false;
  Eigen::VectorXd pi;  // set when unique
  std::vector<std::vector<std::uint32_t>> closed_classes;
  double balance_residual = 0.0;  // max |nu(x) q(x,y) - nu(y) q(y,x)| for the product measure
  double generator_residual = 0.0;  // max |(pi Q)_y| of the solution
};

/// pi Q = 0, sum pi = 1 via sparse LU on the unique closed class; reducible
/// chains report their closed classes instead.
StationaryResult exact_stationary(const ExactChain& chain);

/// Product Bernoulli-p weights of every state (bit i = spin at region index i).
Eigen::VectorXd product_measure(std::size_t sites, double p);

/// Smallest nonzero rate of relaxation of a GhostOnes chain, from the
/// generator symmetrised by the product measure. At most 10 sites.
double spectral_gap(const ExactChain& chain);

void write_stationary_csv(std::ostream& out, const Eigen::VectorXd& pi);

}  // namespace ne
