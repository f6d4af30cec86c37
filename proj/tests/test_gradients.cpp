#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eled/gradcheck.hpp"

using namespace eled;

// The full five-trial suite is the first acceptance criterion; two trials
// here keep the unit run quick while covering every primitive.
TEST_CASE("gradient suite: every learned primitive passes finite-difference checks") {
  const auto results = run_gradient_suite(/*trials=*/2, /*tol=*/1e-4, /*seed=*/2024);
  REQUIRE(results.size() == 14);  // 7 primitives x 2 trials
  for (const auto& r : results) {
    CAPTURE(r.name);
    CAPTURE(r.max_rel_err);
    CHECK(r.pass);
  }
}
