#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "northeast/backward_engine.hpp"
#include "northeast/experiments.hpp"
#include "northeast/measures.hpp"

using namespace ne;

namespace {

// Brute force over candidate completion times straight from the definition.
std::optional<double> sweep_by_definition(const std::vector<ResetLogEntry>& log, const std::vector<Site>& order) {
  for (const ResetLogEntry& fin : log) {
    if (!(fin.site == order.back())) continue;
    const double big_t = fin.time;
    std::vector<double> last(order.size(), -1.0);
    for (const ResetLogEntry& e : log) {
      if (e.time > big_t) break;
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (e.site == order[k]) last[k] = e.time;
      }
    }
    bool ok = last.back() == big_t;
    for (std::size_t k = 0; k < order.size() && ok; ++k) ok = last[k] >= 0.0 && (k == 0 || last[k - 1] < last[k]);
    if (ok) return big_t;
  }
  return std::nullopt;
}

ResetLogEntry reset(Site s, double t) { return {s, t, 0, 1}; }

double brute_hausdorff(const std::vector<std::uint8_t>& a, double ta, const std::vector<std::uint8_t>& b, double tb,
                       int w) {
  auto directed = [&](const std::vector<std::uint8_t>& f, double tf, const std::vector<std::uint8_t>& g, double tg) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f[i]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!g[j]) continue;
        const double dx = static_cast<double>(i % w) / tf - static_cast<double>(j % w) / tg;
        const double dy = static_cast<double>(i / w) / tf - static_cast<double>(j / w) / tg;
        best = std::min(best, std::hypot(dx, dy));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, ta, b, tb), directed(b, tb, a, ta));
}

ExperimentPlan small_plan(double p, std::uint64_t replicas) {
  ExperimentPlan plan;
  plan.p = p;
  plan.window = Region({0, 0}, 16, 16);
  plan.t_max = 20.0;
  plan.sample_times = {0.0, 1.0, 5.0, 20.0};
  plan.replicas = replicas;
  plan.seed = 31;
  return plan;
}

}  // namespace

TEST_CASE("reset_order reproduces the 3x3 order matrix") {
  // Rows listed north to south, columns west to east.
  const int expected[3][3] = {{4, 2, 1}, {7, 5, 3}, {9, 8, 6}};
  const auto order = reset_order(Region({0, 0}, 3, 3));
  REQUIRE(order.size() == 9);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Site s = order[k];
    CHECK(expected[2 - s.y][s.x] == static_cast<int>(k) + 1);
  }
  CHECK(order.front() == Site{2, 2});
  CHECK(order.back() == Site{0, 0});
}

TEST_CASE("detect_lambda_reset: degenerate, positive, negative and order-sensitive cases") {
  const Site x{4, 7};
  CHECK(detect_lambda_reset({reset({0, 0}, 0.5), reset(x, 1.25), reset(x, 3.0)}, {x}) == 1.25);

  const auto order = reset_order(Region({0, 0}, 3, 3));
  std::vector<ResetLogEntry> log;
  for (std::size_t k = 0; k < order.size(); ++k) log.push_back(reset(order[k], 1.0 + static_cast<double>(k)));
  CHECK(detect_lambda_reset(log, order) == 9.0);

  std::vector<Site> sw_first(order.rbegin(), order.rend());
  CHECK_FALSE(detect_lambda_reset(log, sw_first).has_value());

  std::vector<ResetLogEntry> bad{reset(order.back(), 0.5)};
  for (std::size_t k = 0; k + 1 < order.size(); ++k) bad.push_back(reset(order[k], 1.0 + static_cast<double>(k)));
  CHECK_FALSE(detect_lambda_reset(bad, order).has_value());
}

TEST_CASE("detect_lambda_reset uses the last reset at or before T") {
  const auto order = reset_order(Region({0, 0}, 2, 2));  // NE, NW, SE, SW
  // An extra early reset of the NE corner before its successors is harmless.
  std::vector<ResetLogEntry> log{reset(order[0], 1.0), reset(order[0], 1.5), reset(order[1], 2.0),
                                 reset(order[2], 3.0), reset(order[3], 4.0)};
  CHECK(detect_lambda_reset(log, order) == 4.0);
  // NE resets again after NW: the chain breaks until NW resets once more.
  std::vector<ResetLogEntry> broken{reset(order[0], 1.0), reset(order[1], 2.0), reset(order[0], 2.5),
                                    reset(order[2], 3.0), reset(order[3], 4.0), reset(order[1], 5.0),
                                    reset(order[2], 6.0), reset(order[3], 7.0)};
  CHECK(detect_lambda_reset(broken, order) == 7.0);
}

TEST_CASE("detect_lambda_reset agrees with the definition on random logs") {
  std::mt19937_64 rng(5);
  for (int n : {1, 2, 3}) {
    const auto order = reset_order(Region({0, 0}, n, n));
    for (int trial = 0; trial < 400; ++trial) {
      std::vector<ResetLogEntry> log;
      double t = 0.0;
      std::exponential_distribution<double> gap(1.0);
      for (int i = 0; i < 40; ++i) {
        t += gap(rng);
        log.push_back(reset(order[rng() % order.size()], t));
      }
      REQUIRE(detect_lambda_reset(log, order) == sweep_by_definition(log, order));
    }
  }
}

TEST_CASE("fit_exponential_decay: exact exponential and all-noise series") {
  std::vector<double> t, y, se;
  for (int i = 0; i <= 20; ++i) {
    t.push_back(i);
    y.push_back(2.0 * std::exp(-0.3 * i));
    se.push_back(1e-4);
  }
  const ExponentialFit f = fit_exponential_decay(t, y, se);
  REQUIRE(f.ok);
  CHECK(f.rate == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(f.log_prefactor == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> noise(t.size(), 0.01), big(t.size(), 0.1);
  const ExponentialFit g = fit_exponential_decay(t, noise, big);
  CHECK_FALSE(g.ok);
  CHECK_FALSE(g.reason.empty());
}

TEST_CASE("tv_noise_floor matches the normal approximation of the multinomial") {
  const double p = 0.8;
  const std::uint64_t n = 10000;
  const Eigen::VectorXd nu = product_measure(4, p);
  double expect = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    expect += 0.5 * std::sqrt(2.0 * nu[i] * (1.0 - nu[i]) / (std::numbers::pi * static_cast<double>(n)));
  }
  const auto [mean, sd] = tv_noise_floor(4, p, n, 3);
  CHECK(mean == doctest::Approx(expect).epsilon(0.1));
  CHECK(sd > 0.0);
  CHECK(sd < mean);
}

TEST_CASE("cone restriction leaves block and site statistics unchanged") {
  ExperimentPlan plan = small_plan(0.7, 40);
  const Region block({6, 5}, 2, 2);
  ExperimentPlan full = plan;
  full.cone_restrict = false;
  const MixingSeries a = block_mixing(plan, block);
  const MixingSeries b = block_mixing(full, block);
  CHECK(a.counts == b.counts);
  const CorrelationSeries ca = autocorrelation(plan, {9, 3});
  const CorrelationSeries cb = autocorrelation(full, {9, 3});
  CHECK(ca.rho == cb.rho);
}

TEST_CASE("experiments are reproducible and independent of the worker count") {
  ExperimentPlan plan = small_plan(0.6, 60);
  const MixingSeries a = block_mixing(plan, Region({3, 3}, 2, 2));
  plan.workers = 3;
  const MixingSeries b = block_mixing(plan, Region({3, 3}, 2, 2));
  CHECK(a.counts == b.counts);
  CHECK(a.tv == b.tv);
  CHECK(a.noise_mean == b.noise_mean);
}

TEST_CASE("block_mixing: stationary start is within noise at t = 0") {
  ExperimentPlan plan = small_plan(0.8, 4000);
  plan.sample_times = {0.0};
  const MixingSeries m = block_mixing(plan, Region({7, 7}, 2, 2));
  CHECK(m.tv[0] <= m.noise_floor());
  CHECK_THROWS_AS(block_mixing(plan, Region({0, 0}, 4, 3)), std::invalid_argument);
  CHECK_THROWS_AS(block_mixing(plan, Region({15, 15}, 2, 2)), std::invalid_argument);
}

TEST_CASE("autocorrelation: rho(0) is exactly 1") {
  const CorrelationSeries c = autocorrelation(small_plan(0.5, 300), {8, 8});
  REQUIRE(c.times[0] == 0.0);
  CHECK(c.rho[0] == 1.0);
}

TEST_CASE("tau: 1x1 block equals the first reset, survival starts at 1, 3x3 is slower than 2x2") {
  ExperimentPlan plan = small_plan(0.8, 300);
  plan.t_max = 200.0;
  plan.sample_times.clear();
  const TauTail one = tau_lambda_tail(plan, Region({5, 5}, 1, 1));
  const Region cone = cone_window(plan.window, Region({5, 5}, 1, 1));
  for (std::uint64_t r = 0; r < 20; ++r) {
    GraphicalEngine eng(replica_initial(plan, r, cone), plan.p, EventSeed{replica_seed(plan, r), StreamDomain::Dynamics});
    eng.run_until(plan.t_max);
    CHECK(one.taus[r] == eng.state().first_reset[cone.index_of({5, 5})]);
  }
  CHECK(one.survival.front() == 1.0);
  const TauTail two = tau_lambda_tail(plan, Region({6, 6}, 2, 2));
  const TauTail three = tau_lambda_tail(plan, Region({6, 6}, 3, 3));
  CHECK(three.median() > two.median());
  for (std::size_t i = 1; i < two.survival.size(); ++i) CHECK(two.survival[i] <= two.survival[i - 1]);

  plan.replicas = 50;
  const TauTail few = tau_lambda_tail(plan, Region({6, 6}, 2, 2));
  CHECK_FALSE(few.fit.ok);
  CHECK_FALSE(few.survival.empty());
}

TEST_CASE("regeneration: spin after the first reset is Bernoulli-p") {
  ExperimentPlan plan = small_plan(0.5, 3000);
  const RegenerationCheck r = regeneration_check(plan, {8, 8}, 5.0);
  CHECK(r.reset > 500);
  CHECK(std::abs(r.z_score(0.5)) < 4.0);
}

TEST_CASE("freeze_fraction: supercritical thaw, subcritical plateau, monotone") {
  ExperimentPlan plan;
  plan.window = Region({0, 0}, 64, 64);
  plan.t_max = 200.0;
  plan.sample_times = {10.0, 50.0, 200.0};
  plan.replicas = 2;
  plan.p = 0.9;
  const FreezeSeries hi = freeze_fraction(plan);
  CHECK(hi.monotone);
  CHECK(hi.fraction.back() <= 0.01);
  plan.p = 0.1;
  const FreezeSeries lo = freeze_fraction(plan);
  CHECK(lo.monotone);
  CHECK(lo.fraction.back() >= lo.static_frozen - 0.02);
  plan.boundary = BoundaryRule::GhostZeros;
  const FreezeSeries gz = freeze_fraction(plan);
  CHECK(gz.fraction.back() >= gz.static_frozen);
}

TEST_CASE("scaled_hausdorff matches brute force") {
  std::mt19937_64 rng(12);
  const int w = 9, h = 7;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> a(w * h), b(w * h);
    for (auto& v : a) v = (rng() % 3) == 0;
    for (auto& v : b) v = (rng() % 4) == 0;
    a[0] = b[5] = 1;
    const double ta = 1.0 + static_cast<double>(rng() % 5), tb = ta * 2.0;
    CHECK(scaled_hausdorff(a, ta, b, tb, w, h) == doctest::Approx(brute_hausdorff(a, ta, b, tb, w)).epsilon(1e-12));
  }
  std::vector<std::uint8_t> e(w * h, 0), f(w * h, 0);
  f[3] = 1;
  CHECK(scaled_hausdorff(e, 1.0, e, 2.0, w, h) == 0.0);
  CHECK(std::isinf(scaled_hausdorff(e, 1.0, f, 2.0, w, h)));
  CHECK(scaled_hausdorff(f, 1.0, f, 1.0, w, h) == 0.0);
}

TEST_CASE("query region equals a frontier-driven backward evaluation") {
  const int n = 12, m = 4;
  const double p = 0.8, t = 25.0;
  const Region quadrant({0, 0}, n, n);
  const Region padded({-m, -m}, n + m, n + m);
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    Configuration init = sample_bernoulli(padded, p, seed);
    for (std::size_t i = 0; i < padded.size(); ++i) {
      const Site s = padded.site_at(i);
      if (s.x >= 0 && s.y >= 0) init.spins()[i] = 0;
    }
    GraphicalEngine fwd(init, p, EventSeed{seed, StreamDomain::Dynamics});
    fwd.run_until(t);
    std::vector<std::uint8_t> influenced(quadrant.size());
    for (std::size_t i = 0; i < quadrant.size(); ++i) {
      influenced[i] = fwd.state().flipped_once[padded.index_of(quadrant.site_at(i))];
    }

    BackwardEngine back(EventSeed{seed, StreamDomain::Dynamics}, p, InitialLaw::from_configuration(init), padded,
                        BoundaryRule::GhostOnes);
    QueryMemo memo;
    std::vector<std::uint8_t> flipped(quadrant.size(), 0), queried(quadrant.size(), 0);
    auto done = [&](Site s) { return !quadrant.contains(s) || flipped[quadrant.index_of(s)]; };
    for (std::size_t i = 0; i < quadrant.size(); ++i) {
      const Site s = quadrant.site_at(i);
      if (!(done(south_of(s)) && done(west_of(s)))) continue;
      queried[i] = 1;
      flipped[i] = back.flipped_by(s, t, memo);
    }
    CHECK(flipped == influenced);
    CHECK(queried == query_region(influenced, n, n));
  }
}

TEST_CASE("influence_region: empty at t = 0, monotone, exhaustion keeps earlier snapshots") {
  ExperimentPlan plan;
  plan.p = 0.8;
  plan.window = Region({0, 0}, 40, 40);
  plan.t_max = 60.0;
  plan.sample_times = {0.0, 10.0, 30.0, 60.0};
  const ShapeSeries s = influence_region(plan);
  REQUIRE(s.snapshots.size() == 4);
  CHECK(s.snapshots[0].influenced_count == 0);
  CHECK(s.monotone);
  for (std::size_t k = 1; k < s.snapshots.size(); ++k) {
    for (std::size_t i = 0; i < plan.window.size(); ++i) {
      REQUIRE(s.snapshots[k].influenced[i] >= s.snapshots[k - 1].influenced[i]);
      REQUIRE(s.snapshots[k].queried[i] >= s.snapshots[k].influenced[i]);
    }
  }
  CHECK(s.snapshots.back().influenced_count > 0);

  plan.window = Region({0, 0}, 6, 6);
  plan.t_max = 500.0;
  plan.sample_times = {1.0, 500.0};
  const ShapeSeries ex = influence_region(plan);
  CHECK(ex.exhausted);
  CHECK_FALSE(ex.diagnostic.empty());
  CHECK(ex.snapshots.size() == 1);

  plan.window = Region({1, 0}, 6, 6);
  CHECK_THROWS_AS(influence_region(plan), std::invalid_argument);
}

TEST_CASE("plan validation") {
  ExperimentPlan plan = small_plan(0.5, 10);
  CHECK_NOTHROW(plan.validate());
  plan.sample_times = {0.0, 30.0};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.sample_times = {2.0, 1.0};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan = small_plan(1.5, 10);
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  CHECK(parse_initial("quadrant-zero") == InitialKind::QuadrantZero);
  CHECK_THROWS_AS(parse_initial("half"), std::invalid_argument);
}

TEST_CASE("shape raster: three levels, north row first, halo pixels match the query set") {
  ExperimentPlan plan;
  plan.p = 0.8;
  plan.window = Region({0, 0}, 40, 30);
  plan.t_max = 40.0;
  plan.sample_times = {40.0};
  const ShapeSeries s = influence_region(plan);
  REQUIRE(s.snapshots.size() == 1);
  const ShapeSnapshot& snap = s.snapshots.back();
  const Graymap g = shape_graymap(s, snap);
  REQUIRE(g.width == 40);
  REQUIRE(g.height == 30);
  std::size_t white = 0, grey = 0;
  for (std::uint8_t v : g.pixels) {
    REQUIRE((v == 0 || v == 128 || v == 255));
    white += v == 255;
    grey += v == 128;
  }
  CHECK(white == snap.influenced_count);
  CHECK(grey == snap.queried_count - snap.influenced_count);
  CHECK(grey > 0);
  // the corner site (0,0) sits in the last row of the image
  CHECK(g.pixels[static_cast<std::size_t>(29 * 40)] == (snap.influenced[0] ? 255 : snap.queried[0] ? 128 : 0));
}
