#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "northeast/backward_engine.hpp"
#include "northeast/forward_engine.hpp"
#include "northeast/measures.hpp"
#include "oracles.hpp"

using namespace ne;

namespace {

BackwardEngine window_engine(const Configuration& init, double p, std::uint64_t seed) {
  return BackwardEngine(EventFabric(EventSeed{seed}), p, InitialLaw::from_configuration(init), init.region(),
                        init.boundary());
}

BackwardEngine plane_engine(double p, std::uint64_t seed) {
  return BackwardEngine(EventFabric(EventSeed{seed}), p, InitialLaw::lazy_plane(seed, p), Region({0, 0}, 1, 1),
                        BoundaryRule::HalfPlaneExperiment);
}

}  // namespace

TEST_CASE("no events before t: the initial spin, one node") {
  const EventFabric f(EventSeed{5});
  // find a site whose first event is after t = 0.05
  Site s{0, 0};
  while (event_at(f, s, 1).time <= 0.05) ++s.x;
  Configuration init(Region({-5, -5}, 40, 11), BoundaryRule::GhostOnes, 1);
  init.set(s, 0);
  auto eng = window_engine(init, 0.5, 5);
  QueryMemo memo;
  QueryStats st;
  CHECK(eng.spin_at(s, 0.05, memo, &st) == 0);
  CHECK(st.tree_size == 1);
  CHECK(st.queried_sites == std::vector<Site>{s});
}

TEST_CASE("backward equals forward on a 16x16 ghost-ones box, t = 20, p = 0.8") {
  const Region r({0, 0}, 16, 16);
  const Configuration init = sample_bernoulli(r, 0.8, 42);
  GraphicalEngine fwd(init, 0.8, EventFabric(EventSeed{42}));
  fwd.run_until(20.0);
  auto bwd = window_engine(init, 0.8, 42);
  QueryMemo memo;
  for (const Site s : r.sites()) CHECK(bwd.spin_at(s, 20.0, memo) == fwd.state().config.at(s));
}

TEST_CASE("backward equals forward across boundaries, seeds and times") {
  for (BoundaryRule b : {BoundaryRule::GhostOnes, BoundaryRule::GhostZeros, BoundaryRule::Periodic}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      for (double p : {0.3, 0.5, 0.8}) {
        const Region r({-4, 7}, 13, 9);
        Configuration init = sample_bernoulli(r, p, seed * 17, b);
        GraphicalEngine fwd(init, p, EventFabric(EventSeed{seed}));
        auto bwd = window_engine(init, p, seed);
        QueryMemo memo;
        for (double t : {0.0, 1.5, 8.0, 25.0}) {
          fwd.run_until(t);
          const Configuration got = bwd.evaluate_region(r, t, memo);
          CHECK(got.spins().size() == fwd.state().config.spins().size());
          CHECK(std::equal(got.spins().begin(), got.spins().end(), fwd.state().config.spins().begin()));
        }
      }
    }
  }
}

TEST_CASE("memoised engine equals the literal memo-free recursion") {
  const Region r({0, 0}, 7, 7);
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    const Configuration init = sample_bernoulli(r, 0.6, seed);
    const EventFabric f(EventSeed{seed});
    auto eng = window_engine(init, 0.6, seed);
    QueryMemo memo;
    for (const Site s : r.sites()) CHECK(eng.spin_at(s, 2.5, memo) == oracle::naive_spin(f, init, 0.6, s, 2.5));
  }
}

TEST_CASE("evaluate_region at t = 0 and memo reuse") {
  const Region r({2, 2}, 6, 5);
  const Configuration init = sample_bernoulli(r, 0.4, 8);
  auto eng = window_engine(init, 0.4, 8);
  QueryMemo memo;
  QueryStats st0;
  CHECK(eng.evaluate_region(r, 0.0, memo, &st0) == init);
  auto q0 = st0.queried_sites;
  std::sort(q0.begin(), q0.end(), row_major_less);
  CHECK(q0 == r.sites());

  QueryMemo m2;
  QueryStats a, b;
  const auto first = eng.evaluate_region(r, 6.0, m2, &a);
  const auto second = eng.evaluate_region(r, 6.0, m2, &b);
  CHECK(first == second);
  CHECK(a.tree_size > 0);
  CHECK(b.tree_size == 0);
}

TEST_CASE("queried sites stay inside the southwest cones of the probes") {
  auto eng = plane_engine(0.7, 3);
  QueryMemo memo;
  QueryStats st;
  const Region probe({10, 10}, 3, 2);
  eng.evaluate_region(probe, 3.0, memo, &st);
  for (const Site s : st.queried_sites) CHECK(coord_le(s, probe.ne_corner()));
  CHECK(st.tree_size >= probe.size());
}

TEST_CASE("lazy plane agrees with a fixed window on the same initial draws") {
  // the lazy initial law and sample_bernoulli use the same keyed draws, so a
  // ghost-ones window and the plane agree wherever the SW cone stays inside
  auto plane = plane_engine(0.8, 21);
  QueryMemo memo;
  std::size_t checked = 0;
  const Region r({-30, -30}, 40, 40);
  const Configuration init = sample_bernoulli(r, 0.8, 21);
  auto win = window_engine(init, 0.8, 21);
  QueryMemo wm;
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      QueryMemo local;
      QueryStats st;
      const auto v = plane.spin_at({x, y}, 1.0, local, &st);
      const bool inside = std::all_of(st.queried_sites.begin(), st.queried_sites.end(),
                                      [&](Site s) { return r.contains(s); });
      if (!inside) continue;
      ++checked;
      CHECK(v == win.spin_at({x, y}, 1.0, wm));
    }
  }
  CHECK(checked > 90);
}

TEST_CASE("missing initial spin is a configuration error") {
  Configuration init(Region({0, 0}, 3, 3), BoundaryRule::HalfPlaneExperiment, 1);
  BackwardEngine eng(EventFabric(EventSeed{1}), 0.5, InitialLaw::from_configuration(init), init.region(),
                     BoundaryRule::HalfPlaneExperiment);
  QueryMemo memo;
  CHECK_THROWS_AS(eng.spin_at({0, 0}, 5.0, memo), InitialSpinError);
}

TEST_CASE("budget exhaustion is a distinct outcome") {
  auto eng = plane_engine(0.8, 4);
  eng.set_budget(50);
  QueryMemo memo;
  CHECK_THROWS_AS(eng.spin_at({0, 0}, 30.0, memo), BudgetExhausted);
  eng.set_budget(BackwardEngine::kDefaultBudget);
  QueryMemo fresh;
  CHECK_NOTHROW(eng.spin_at({0, 0}, 30.0, fresh));
}

TEST_CASE("query trees: t = 0, monotone in t, fission domination") {
  auto eng = plane_engine(0.8, 77);
  std::vector<Probe> p0, p1, p2;
  for (int i = 0; i < 10000; ++i) {
    const Site s{(i % 100) * 7, (i / 100) * 7};
    p0.push_back({s, 0.0});
    p1.push_back({s, 1.0});
    p2.push_back({s, 2.0});
  }
  const auto h0 = query_tree_histogram(eng, p0);
  CHECK(std::all_of(h0.tree_sizes.begin(), h0.tree_sizes.end(), [](auto v) { return v == 1; }));
  const auto h1 = query_tree_histogram(eng, p1);
  const auto h2 = query_tree_histogram(eng, p2);
  CHECK(h1.mean_tree() <= h2.mean_tree());
  MESSAGE("mean tree size t=1: " << h1.mean_tree() << ", t=2: " << h2.mean_tree());

  std::mt19937_64 gen(12345);
  double pop2 = 0.0;
  std::vector<std::uint64_t> nodes1;
  for (int i = 0; i < 10000; ++i) {
    pop2 += static_cast<double>(oracle::fission_sample(2.0, gen).population);
    nodes1.push_back(oracle::fission_sample(1.0, gen).nodes);
  }
  pop2 /= 10000.0;
  CHECK(std::abs(pop2 - std::exp(4.0)) < 0.1 * std::exp(4.0));
  CHECK(h2.mean_tree() * 1.1 <= pop2);
  for (std::uint64_t s : {10u, 50u, 100u}) {
    const double fission_tail =
        static_cast<double>(std::count_if(nodes1.begin(), nodes1.end(), [s](auto v) { return v > s; })) / 10000.0;
    CHECK(h1.tail(s) <= 1.2 * fission_tail);
  }
}

TEST_CASE("flipped_by") {
  const Region r({0, 0}, 8, 8);
  const Configuration init(r, BoundaryRule::GhostOnes, 0);
  GraphicalEngine fwd(init, 0.7, EventFabric(EventSeed{6}));
  fwd.run_until(5.0);
  auto eng = window_engine(init, 0.7, 6);
  QueryMemo memo;
  for (const Site s : r.sites()) CHECK(eng.flipped_by(s, 5.0, memo) == (fwd.state().flipped_once[r.index_of(s)] == 1));
}
