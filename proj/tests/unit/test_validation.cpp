#include <doctest.h>

#include <sstream>

#include "northeast/measures.hpp"
#include "northeast/validation.hpp"

using namespace ne;

TEST_CASE("fast validation passes on a clean build") {
  const ValidationReport rep = run_validation({ValidationLevel::Fast, 1, false});
  std::ostringstream os;
  rep.print(os);
  CHECK(rep.passed());
  CHECK(os.str().find("validation passed") != std::string::npos);
  // the literal cluster ratio is reported but never gates the run
  const auto& last = rep.items.back();
  CHECK(last.informational);
}

TEST_CASE("a corrupted mark is caught by the cross-engine check") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CrossEngineOptions o;
    o.cases = 3;
    o.seed = seed;
    CHECK(check_cross_engine(o).passed);
    o.inject_fault = true;
    const ValidationItem bad = check_cross_engine(o);
    CHECK_FALSE(bad.passed);
    CHECK(bad.detail.find("fault injected") != std::string::npos);
  }
  const ValidationReport rep = run_validation({ValidationLevel::Fast, 1, true});
  CHECK_FALSE(rep.passed());
}

TEST_CASE("cluster sweep: topological bound holds, literal bound does not") {
  const ClusterSweepResult r = sweep_cluster_ratio(0.8, 300, 10, 10.0, 3);
  CHECK(r.snapshots == 300);
  CHECK(r.topological_violations == 0);
  CHECK(r.empty_interior == 0);
  CHECK(r.unit_jump_violations == 0);
  CHECK(r.literal_violations > 0);
  CHECK(r.worst_b > 2 * r.worst_a);
}

TEST_CASE("validation level names") {
  CHECK(parse_validation_level("fast") == ValidationLevel::Fast);
  CHECK(parse_validation_level("full") == ValidationLevel::Full);
  CHECK_THROWS_AS(parse_validation_level("quick"), std::invalid_argument);
}

TEST_CASE("spectral gap: one site relaxes at rate 1, larger boxes more slowly at small p") {
  for (double p : {0.2, 0.5, 0.9})
    CHECK(spectral_gap(make_exact_chain(Region({0, 0}, 1, 1), BoundaryRule::GhostOnes, p)) == doctest::Approx(1.0));
  const double g3 = spectral_gap(make_exact_chain(Region({0, 0}, 2, 2), BoundaryRule::GhostOnes, 0.3));
  const double g8 = spectral_gap(make_exact_chain(Region({0, 0}, 2, 2), BoundaryRule::GhostOnes, 0.8));
  CHECK(g3 > 0.0);
  CHECK(g3 < g8);
  CHECK(g8 <= 1.0);
  CHECK_THROWS_AS(spectral_gap(make_exact_chain(Region({0, 0}, 2, 2), BoundaryRule::GhostZeros, 0.5)),
                  std::invalid_argument);
}
