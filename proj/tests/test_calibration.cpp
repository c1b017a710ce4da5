#include <chrono>
#include <cmath>

#include "doctest.h"
#include "pos/calibration.hpp"
#include "pos/distributions.hpp"
#include "pos/error.hpp"

using namespace pos;

namespace {

const double kDelta = 0.42;

StandardProgramSpec accelerated() { return StandardProgramSpec::standard(false, true); }

}  // namespace

TEST_CASE("design information") {
    CHECK(design_information(1.0, 0.025, 0.9) == doctest::Approx(10.507).epsilon(1e-4));
    CHECK(design_information(2.0, 0.025, 0.9) == doctest::Approx(design_information(1.0, 0.025, 0.9) / 4.0));
    CHECK(design_information(0.42, 0.05, 0.8) == doctest::Approx(35.04).epsilon(1e-3));
}

TEST_CASE("standard programs") {
    const auto non_onc = StandardProgramSpec::standard(false, false);
    REQUIRE(non_onc.stages.size() == 2);
    CHECK(non_onc.stages[1].trials == 2);
    CHECK(StandardProgramSpec::standard(true, false).stages[1].trials == 1);
    REQUIRE(accelerated().stages.size() == 3);
    CHECK(accelerated().stages[0].alpha == 0.1);
}

TEST_CASE("success probability reduces to the two-phase closed form") {
    const auto prog = StandardProgramSpec::standard(false, false);
    const double i2 = design_information(kDelta, 0.05, 0.8), i3 = design_information(kDelta, 0.025, 0.9);
    const double c2 = normal_quantile(0.95), c3 = normal_quantile(0.975);
    for (double mu : {-0.2, 0.0, 0.2, 0.42, 0.8}) {
        const double expected = normal_cdf(mu * std::sqrt(i2) - c2) * std::pow(normal_cdf(mu * std::sqrt(i3) - c3), 2);
        CHECK(program_success_given_effect(mu, prog, kDelta) == doctest::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("single-endpoint calibration of the worked example") {
    const double target = 0.72 * 0.72 * 0.76;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = calibrate_omega_single(target, accelerated(), kDelta);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.omega >= 0.18);
    CHECK(r.omega <= 0.28);
    CHECK(r.omega == doctest::Approx(0.2183).epsilon(1e-3));
    CHECK(r.component_sd * r.component_sd == doctest::Approx(0.032595).epsilon(1e-4));
    CHECK(r.method == "quadrature");
    CHECK(secs < 1.0);
    // Sign convention does not matter: the calibration works on |delta|.
    CHECK(calibrate_omega_single(target, accelerated(), -kDelta).omega == doctest::Approx(r.omega));
}

TEST_CASE("calibration end points and monotonicity") {
    const auto r = calibrate_omega_single(0.3, accelerated(), kDelta);
    CHECK(calibrate_omega_single(r.tpp_success, accelerated(), kDelta).omega == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(calibrate_omega_single(r.null_success, accelerated(), kDelta).omega == doctest::Approx(1.0).epsilon(1e-9));
    double last = 2.0;
    for (double t : {0.05, 0.1, 0.2, 0.3, 0.4}) {
        const double w = calibrate_omega_single(t, accelerated(), kDelta).omega;
        CHECK(w < last);
        last = w;
    }
    try {
        calibrate_omega_single(0.95, accelerated(), kDelta);
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InfeasibleCalibration);
    }
}

TEST_CASE("quadrature self-check") {
    const double sd = kDelta / 2.326348;
    const double a = component_success_probability(0.0, sd, accelerated(), kDelta);
    const double a_tight = component_success_probability(0.0, sd, accelerated(), kDelta, 1e-13);
    const double b = component_success_probability(kDelta, sd, accelerated(), kDelta);
    const double b_tight = component_success_probability(kDelta, sd, accelerated(), kDelta, 1e-13);
    CHECK(std::fabs(a - a_tight) < 1e-6);
    CHECK(std::fabs(b - b_tight) < 1e-6);
}

TEST_CASE("two-endpoint calibration reduces to the single-endpoint answer") {
    const double target = 0.3;
    const auto single = calibrate_omega_single(target, accelerated(), kDelta);

    TwoEndpointCalibrationSpec spec;
    spec.program = accelerated();
    spec.delta = {kDelta, 0.3};
    spec.unit_info_sd = {1.3, 1.0};  // phase II tests the first endpoint
    spec.pivotal_alpha_override = {0.0, 1.0};
    const auto mc = calibrate_omega_mc(target, spec, 200000, 11);
    CHECK(mc.method == "monte-carlo");
    CHECK(std::fabs(mc.omega - single.omega) < 3.0 * mc.omega_se);

    TwoEndpointCalibrationSpec twin;
    twin.program = accelerated();
    twin.delta = {kDelta, kDelta};
    twin.rho = 1.0;
    twin.kappa = 1.0;
    const auto collapsed = calibrate_omega_mc(target, twin, 200000, 12);
    CHECK(std::fabs(collapsed.omega - single.omega) < 3.0 * collapsed.omega_se);

    const auto at_b = calibrate_omega_mc(mc.tpp_success, spec, 200000, 11);
    CHECK(at_b.omega == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("Monte Carlo standard error shrinks with the square root of the draw count") {
    TwoEndpointCalibrationSpec spec;
    spec.program = accelerated();
    spec.delta = {kDelta, 0.3};
    spec.rho = 0.3;
    double ratio_sum = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto small = calibrate_omega_mc(0.25, spec, 100000, seed);
        const auto big = calibrate_omega_mc(0.25, spec, 200000, seed + 100);
        ratio_sum += small.omega_se / big.omega_se;
    }
    const double ratio = ratio_sum / 3.0;
    CHECK(ratio >= 1.3);
    CHECK(ratio <= 1.6);
}

TEST_CASE("Monte Carlo calibration errors") {
    TwoEndpointCalibrationSpec spec;
    spec.program = accelerated();
    spec.delta = {kDelta, 0.3};
    CHECK_THROWS_AS(calibrate_omega_mc(0.3, spec, 1000, 1), Error);
    // Trials sized for power barely above alpha cannot tell the components apart.
    TwoEndpointCalibrationSpec flat;
    flat.program.stages = {CalibrationStage{"IIb", 1, 0.025, 0.026, false}};
    flat.delta = {kDelta, 0.3};
    try {
        calibrate_omega_mc(0.0255, flat, 100000, 1);
        FAIL("expected ill-conditioned calibration");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IllConditionedCalibration);
    }
}

TEST_CASE("downweighting the TPP component") {
    CHECK(downweight_tpp(0.3, 1.0) == 0.3);
    CHECK(downweight_tpp(0.5, 1.0 / 3.0) == doctest::Approx(0.75));
    CHECK(downweight_tpp(0.0, 0.2) == 0.0);
    CHECK_THROWS_AS(downweight_tpp(0.5, 0.0), Error);
}
