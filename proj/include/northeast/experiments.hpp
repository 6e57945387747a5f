#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "northeast/forward_engine.hpp"
#include "northeast/lattice.hpp"
#include "northeast/pgm.hpp"
#include "northeast/stats.hpp"

namespace ne {

enum class InitialKind {
  Bernoulli,     // product Bernoulli-p
  AllZeros,
  AllOnes,
  QuadrantZero,  // sites with x >= 0 and y >= 0 start at 0, the rest Bernoulli-p
};

std::string_view to_string(InitialKind k);
InitialKind parse_initial(std::string_view text);

struct ExperimentPlan {
  double p = 0.8;
  Region window{{0, 0}, 64, 64};
  BoundaryRule boundary = BoundaryRule::GhostOnes;
  double t_max = 100.0;
  std::vector<double> sample_times;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  InitialKind initial = InitialKind::Bernoulli;
  unsigned workers = 1;
  /// Simulate only the part of the window south-west of the observed sites.
  /// Nothing outside that cone can reach them, so results are unchanged.
  bool cone_restrict = true;

  /// Throws std::invalid_argument on an inconsistent plan.
  void validate() const;
};

/// Replica r of a plan: its initial configuration on `region` and its
/// dynamics seed.
std::uint64_t replica_seed(const ExperimentPlan& plan, std::uint64_t r);
Configuration replica_initial(const ExperimentPlan& plan, std::uint64_t r, const Region& region);

/// Window sites coordinatewise below some site of `targets`' bounding box.
Region cone_window(const Region& window, const Region& targets);

/// Runs body(r) for r in [0, n) on `workers` threads. Bodies must only write
/// to per-replica slots.
void parallel_replicas(std::uint64_t n, unsigned workers, const std::function<void(std::uint64_t)>& body);

/// Anti-diagonal order on a block: decreasing x + y, ties by decreasing y.
/// First element is the NE corner, last the SW corner.
std::vector<Site> reset_order(const Region& block);

/// First completion time of an ordered sweep of resets: the first T at which
/// the last resets at or before T of the ordered sites are strictly
/// increasing in time and the final one happens at T. The log must be
/// chronological; entries outside the order are ignored.
std::optional<double> detect_lambda_reset(const std::vector<ResetLogEntry>& log, const std::vector<Site>& order);

/// Incremental form of detect_lambda_reset for use inside an observer.
class LambdaResetTracker {
 public:
  explicit LambdaResetTracker(std::vector<Site> order);
  /// Feed one reset; returns true once the sweep has completed.
  bool feed(const ResetLogEntry& e);
  std::optional<double> completed() const { return done_; }

 private:
  std::vector<Site> order_;
  std::vector<double> last_;
  std::optional<double> done_;
};

struct ExponentialFit {
  bool ok = false;
  std::string reason;  // why no fit, when !ok
  double rate = 0.0;   // alpha in exp(-alpha t)
  double log_prefactor = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Weighted fit of log y = c - rate t over the leading run of points with
/// y > z * se, skipping points whose se is 0.
ExponentialFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& y,
                                     const std::vector<double>& se, double z = 3.0, std::size_t min_points = 3);

struct MixingSeries {
  Region block;
  std::vector<double> times;
  std::vector<double> tv;
  std::vector<double> corner_one_fraction;  // P(spin = 1) at the block's SW corner
  std::vector<std::vector<std::uint64_t>> counts;  // pattern counts per time, bit i = block index i
  double noise_mean = 0.0;   // TV of an exact i.i.d. sample of the same size
  double noise_sd = 0.0;
  double noise_floor() const { return noise_mean + 3.0 * noise_sd; }
};

/// Empirical law of the block pattern at each sample time, and its TV
/// distance to the product measure. Block size at most 9 sites.
MixingSeries block_mixing(const ExperimentPlan& plan, const Region& block);

/// TV between the empirical law of n i.i.d. product-measure patterns and the
/// product measure: mean and sd over `repeats` draws.
std::pair<double, double> tv_noise_floor(std::size_t sites, double p, std::uint64_t n, std::uint64_t seed,
                                         int repeats = 200);

struct CorrelationSeries {
  Site site;
  std::vector<double> times;
  std::vector<double> rho;
  std::vector<double> se;
  std::vector<double> one_fraction;
  ExponentialFit fit;
};

/// Empirical autocorrelation of one site's spin between time 0 and each
/// sample time over replicas, centred and scaled by the sample moments (so
/// rho(0) = 1 exactly), with an exponential fit.
CorrelationSeries autocorrelation(const ExperimentPlan& plan, Site site);

struct TauTail {
  Region block;
  std::vector<double> taus;  // kNever if the sweep did not complete by t_max
  std::vector<double> times;
  std::vector<double> survival;  // P(tau >= t)
  std::vector<double> se;
  std::size_t completed = 0;
  ExponentialFit fit;
  double median() const;
};

/// Refuses the fit (fit.ok = false) when fewer than 100 replicas complete.
TauTail tau_lambda_tail(const ExperimentPlan& plan, const Region& block);

struct RegenerationCheck {
  Site site;
  double t = 0.0;
  std::uint64_t reset = 0;  // replicas with tau_x <= t
  std::uint64_t ones = 0;   // of those, spin 1 at t
  double fraction() const { return reset ? static_cast<double>(ones) / static_cast<double>(reset) : 0.0; }
  double z_score(double p) const;
};

RegenerationCheck regeneration_check(const ExperimentPlan& plan, Site site, double t);

struct FreezeSeries {
  std::vector<double> times;
  std::vector<double> fraction;  // mean over replicas of the never-reset fraction
  double static_frozen = 0.0;    // mean frozen_zero_cluster density of the initial configurations
  bool monotone = true;          // every replica's fraction was nonincreasing
};

FreezeSeries freeze_fraction(const ExperimentPlan& plan);

struct ShapeSnapshot {
  double t = 0.0;
  std::vector<std::uint8_t> influenced;  // quadrant raster, row-major from the corner
  std::vector<std::uint8_t> queried;
  std::vector<std::uint8_t> spins;
  std::size_t influenced_count = 0;
  std::size_t queried_count = 0;
};

struct ShapeSeries {
  Region quadrant;
  Region padded;
  std::vector<ShapeSnapshot> snapshots;
  std::vector<double> hausdorff;  // between consecutive scaled snapshots
  bool monotone = true;
  bool exhausted = false;
  double exhausted_at = 0.0;
  std::string diagnostic;
};

struct ShapeOptions {
  double margin_fraction = 0.25;
  bool keep_spins = true;
};

/// Quadrant 1 starts at 0, the rest of the padded window Bernoulli-p; the
/// plan's window is the quadrant. The influenced set holds the quadrant
/// sites that have flipped; the queried set adds sites whose S and W
/// neighbors have both flipped or lie outside the quadrant.
ShapeSeries influence_region(const ExperimentPlan& plan, ShapeOptions opts = {});

/// Queried set from the influenced set.
std::vector<std::uint8_t> query_region(const std::vector<std::uint8_t>& influenced, int width, int height);

/// Hausdorff distance between the unit-square centres of two lattice sets
/// (rasters anchored at the origin), each scaled by 1 / its time.
double scaled_hausdorff(const std::vector<std::uint8_t>& a, double ta, const std::vector<std::uint8_t>& b,
                        double tb, int width, int height);

/// 255 influenced, 128 queried only, 0 elsewhere.
Graymap shape_graymap(const ShapeSeries& s, const ShapeSnapshot& snap);

}  // namespace ne
