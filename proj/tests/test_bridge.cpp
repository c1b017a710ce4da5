#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pos/bridge.hpp"
#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/stats.hpp"
#include "properties.hpp"

using namespace pos;

namespace {

ConditionalQuantileSet two_anchor_set() {
    ConditionalQuantileSet s;
    s.endpoint_id = "x";
    s.anchors = {-0.47, -0.40};
    s.triples = {{{1.0, 2.0, 3.0}}, {{0.0, 1.0, 2.0}}};
    return s;
}

// Stand-in for MAP draws of the phase II effect: internal-scale normal that
// puts the fixture anchors near their annotated percentiles.
std::vector<double> synthetic_theta_star(std::size_t n, std::uint64_t seed) {
    const RngStream root = stage_stream(seed, 99);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream r = root.child(i);
        out[i] = 0.385 + 0.135 * r.normal();
    }
    return out;
}

}  // namespace

TEST_CASE("percentile interpolation") {
    const auto s = two_anchor_set();
    CHECK(interpolate_percentile(s, Percentile::P50, -0.47) == 2.0);
    CHECK(interpolate_percentile(s, Percentile::P50, -0.40) == 1.0);
    CHECK(interpolate_percentile(s, Percentile::P50, -0.435) == doctest::Approx(1.5));
    CHECK(interpolate_percentile(s, Percentile::P50, -0.54) == doctest::Approx(3.0));
    CHECK(interpolate_percentile(s, Percentile::P90, -0.33) == doctest::Approx(1.0));
    const auto t = interpolate_triple(s, -0.47);
    CHECK(t[0] == 1.0);
    CHECK(t[2] == 3.0);
}

TEST_CASE("quantile set validation") {
    auto s = two_anchor_set();
    s.anchors = {-0.40, -0.47};
    CHECK_THROWS_AS(s.validate(), Error);
    s = two_anchor_set();
    s.triples[0] = {{2.0, 1.0, 3.0}};
    CHECK_THROWS_AS(s.validate(), Error);
    s = two_anchor_set();
    s.anchors.pop_back();
    s.triples.pop_back();
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("orientation of a quantile set") {
    const auto s = two_anchor_set();
    const auto o = s.oriented(Direction::BenefitNegative, Direction::BenefitNegative);
    REQUIRE(o.anchors.size() == 2);
    CHECK(o.anchors[0] == doctest::Approx(0.40));
    CHECK(o.triples[0][0] == doctest::Approx(-2.0));
    CHECK(o.triples[0][2] == doctest::Approx(0.0));
    // Internal-scale interpolation agrees with the reporting-scale one.
    CHECK(interpolate_percentile(o, Percentile::P10, 0.54) ==
          doctest::Approx(-interpolate_percentile(s, Percentile::P90, -0.54)));
}

TEST_CASE("parametric fits") {
    const double z = normal_quantile(0.9);
    const auto n01 = fit_parametric(-z, 0.0, z);
    CHECK(n01.family == Family::Normal);
    CHECK(n01.location == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n01.scale == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n01.residual < 1e-9);

    const auto aff = fit_parametric(0.3 - 1.7 * z, 0.3, 0.3 + 1.7 * z);
    CHECK(aff.family == Family::Normal);
    CHECK(aff.location == doctest::Approx(0.3));
    CHECK(aff.scale == doctest::Approx(1.7));

    const auto ln = fit_parametric(0.1054, 1.0, 9.4877);
    CHECK(ln.family == Family::ShiftedLogNormal);
    CHECK(ln.residual < 1e-6);
    CHECK(ln.quantile(0.5) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(ln.quantile(0.9) == doctest::Approx(9.4877).epsilon(1e-4));

    const auto left = fit_parametric(-9.4877, -1.0, -0.1054);
    CHECK(left.family == Family::ShiftedLogNormalLeft);
    CHECK(left.quantile(0.1) == doctest::Approx(-9.4877).epsilon(1e-4));

    CHECK(fit_parametric(0.5, 0.5, 0.5).family == Family::PointMass);
    CHECK_THROWS_AS(fit_parametric(1.0, 0.5, 2.0), Error);
}

TEST_CASE("collapsed quantile sets give a point mass") {
    ConditionalQuantileSet s;
    s.endpoint_id = "y";
    s.anchors = {0.0, 1.0};
    s.triples = {{{0.2, 0.2, 0.2}}, {{0.2, 0.2, 0.2}}};
    const auto draws = sample_marginal(synthetic_theta_star(500, 1), {s}, 3);
    for (std::size_t r = 0; r < draws.rows; ++r) CHECK(draws.at(r, 0) == doctest::Approx(0.2));
}

TEST_CASE("constant percentiles reproduce the fitted distribution") {
    const double z = normal_quantile(0.9);
    ConditionalQuantileSet s;
    s.endpoint_id = "y";
    s.anchors = {0.0, 1.0};
    s.triples = {{{-0.2 - 0.1 * z, -0.2, -0.2 + 0.1 * z}}, {{-0.2 - 0.1 * z, -0.2, -0.2 + 0.1 * z}}};
    const std::size_t n = 20000;
    const auto draws = sample_marginal(synthetic_theta_star(n, 2), {s}, 4);
    const RngStream root = stage_stream(77, 98);
    std::vector<double> direct(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream r = root.child(i);
        direct[i] = -0.2 + 0.1 * r.normal();
    }
    const double d = ks_statistic(draws.column(0), direct);
    // Two-sample critical value at the 0.1% level.
    CHECK(d < 1.95 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("worked fixture: paired draws and marginal percentiles") {
    const auto fixture = BridgeFixture::from_json(postest::load_json(postest::data_path("bridge_worked_example.json")));
    const auto sets = fixture.internal_sets();
    REQUIRE(sets.size() == 2);
    const auto theta = synthetic_theta_star(40000, 5);
    const auto draws = sample_marginal(theta, sets, 6);
    CHECK(draws.rejections < 200);
    const auto p = draws.column(0), s = draws.column(1);
    const double rho = spearman(p, s);
    CHECK(rho > 0.35);
    CHECK(rho < 0.45);
    // Reporting scale is the negation of the internal one.
    CHECK(std::fabs(-quantile(p, 0.9) - -0.44) < 0.05);
    CHECK(std::fabs(-quantile(p, 0.5) - -0.23) < 0.05);
    CHECK(std::fabs(-quantile(p, 0.1) - -0.07) < 0.05);
    CHECK(std::fabs(-quantile(s, 0.9) - -0.30) < 0.05);
    CHECK(std::fabs(-quantile(s, 0.5) - -0.14) < 0.05);
    CHECK(std::fabs(-quantile(s, 0.1) - 0.02) < 0.05);

    const auto again = sample_marginal(theta, sets, 6);
    CHECK(again.values == draws.values);
    // Endpoint order changes only the pairing, not either marginal.
    const auto swapped = sample_marginal(theta, {sets[1], sets[0]}, 6);
    auto a = draws.column(0), b = swapped.column(1);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(ks_statistic(a, b) < 1.95 * std::sqrt(2.0 / 40000.0));

    const auto map = bridged_map_draws(draws, 2);
    CHECK(map.trials == 2);
    CHECK(map.theta(7, 0, 1) == map.theta(7, 1, 1));
    CHECK(map.theta(7, 1, 0) == draws.at(7, 0));
}

TEST_CASE("coverage at a fixed conditioning value") {
    const auto fixture = BridgeFixture::from_json(postest::load_json(postest::data_path("bridge_worked_example.json")));
    const auto sets = fixture.internal_sets();
    const double a = 0.42;
    const std::size_t n = 40000;
    const std::vector<double> theta(n, a);
    const auto draws = sample_marginal(theta, sets, 8);
    for (std::size_t e = 0; e < 2; ++e) {
        const auto t = interpolate_triple(sets[e], a);
        const auto col = draws.column(e);
        const double probs[3] = {0.1, 0.5, 0.9};
        for (int k = 0; k < 3; ++k) {
            const double frac =
                static_cast<double>(std::count_if(col.begin(), col.end(), [&](double v) { return v <= t[k]; })) / n;
            const double se = std::sqrt(probs[k] * (1 - probs[k]) / n);
            CHECK(std::fabs(frac - probs[k]) < 4.0 * se);
        }
    }
}

TEST_CASE("fixture parsing errors") {
    CHECK_THROWS_AS(BridgeFixture::from_json(nlohmann::json::object()), Error);
    auto j = postest::load_json(postest::data_path("bridge_worked_example.json"));
    j["targets"][0]["quantiles"].erase(0);
    CHECK_THROWS_AS(BridgeFixture::from_json(j).internal_sets(), Error);
}
