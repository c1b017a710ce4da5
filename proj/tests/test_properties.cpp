#include "doctest.h"
#include "properties.hpp"

namespace {

void require_property(const postest::PropertyReport& r) {
    INFO(r.name << ": " << r.failures << " of " << r.cases << " failed; " << r.first_failure);
    CHECK(r.cases >= 1000);
    CHECK(r.ok());
}

}  // namespace

TEST_CASE("quantile round trips") {
    require_property(postest::quantile_round_trip(2000, 1));
    require_property(postest::fitted_quantile_round_trip(1000, 2));
}

TEST_CASE("half-normal medians") { require_property(postest::half_normal_medians(2000, 3)); }

TEST_CASE("staged monotonicity") { require_property(postest::staged_monotonicity(1000, 4)); }

TEST_CASE("determinism under seed") { require_property(postest::determinism_under_seed(1000, 5)); }

TEST_CASE("bridge sandwich and coverage") {
    require_property(postest::bridge_sandwich(1000, 6));
    require_property(postest::bridge_coverage(1000, 7));
}
