#include <cmath>

#include "doctest.h"
#include "pos/binary.hpp"
#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/quadrature.hpp"
#include "pos/stats.hpp"

using namespace pos;

namespace {

EndpointSpec responder() { return {"r", EndpointKind::RiskDifferenceBinary, Direction::BenefitPositive, 0.05}; }

McmcConfig config(std::uint64_t seed) {
    McmcConfig cfg;
    cfg.chains = 4;
    cfg.warmup = 2000;
    cfg.keep = 5000;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("log odds ratio with and without correction") {
    const auto even = log_odds_ratio({"a", 40, 20, 40, 20});
    CHECK(even.log_or == 0.0);
    CHECK_FALSE(even.corrected);
    CHECK(even.se == doctest::Approx(std::sqrt(4.0 / 20.0)));
    const auto zero = log_odds_ratio({"b", 20, 0, 20, 5});
    CHECK(zero.corrected);
    CHECK(zero.log_or == doctest::Approx(std::log((0.5 * 15.5) / (20.5 * 5.5))).epsilon(1e-12));
    CHECK(zero.log_or == doctest::Approx(-2.676).epsilon(1e-3));
}

TEST_CASE("counts are validated") {
    ArmCounts bad{"x", 10, 11, 10, 2};
    CHECK_THROWS_AS(bad.validate(), Error);
    ArmCounts empty{"y", 0, 0, 10, 2};
    CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("transform to response probabilities") {
    const auto t = transform_to_probs({0.0, std::log(3.0), 10.0}, {0.3, 0.5, 0.9});
    CHECK(t.p_treat3[0] == doctest::Approx(0.3));
    CHECK(t.p_treat3[1] == doctest::Approx(0.75));
    CHECK(t.p_treat3[2] < 1.0);
    CHECK(t.p_treat3[2] > 0.9);
    double last = 0.0;
    for (double eta = -8.0; eta <= 8.0; eta += 0.25) {
        const auto x = transform_to_probs({eta}, {0.4});
        CHECK(x.p_treat3[0] > last);
        const double rd = x.p_treat3[0] - 0.4;
        CHECK(rd > -1.0);
        CHECK(rd < 1.0);
        last = x.p_treat3[0];
    }
}

TEST_CASE("symmetric single study gives a log-OR posterior centred at zero") {
    const std::vector<double> m{0.0}, sd{1.0};
    BinaryFitInput in{{{"s1", 40, 20, 40, 20}}, responder(), HeterogeneityPrior::from_scale(0.0),
                      HeterogeneityPrior::from_scale(0.0), MixturePrior::single_normal(m, sd), ControlPrior{}};
    const auto post = fit_binary(in, config(4));
    CHECK(std::fabs(mean(post.log_or.mu_column(0))) < 0.05);
    CHECK(post.ctrl_mu.size() == post.rows());
}

TEST_CASE("control log-odds posterior matches grid quadrature") {
    const std::vector<double> m{0.0}, sd{1.0};
    const ControlPrior flat{0.0, 10.0};
    BinaryFitInput in{{{"s1", 50, 30, 50, 12}}, responder(), HeterogeneityPrior::from_scale(0.0),
                      HeterogeneityPrior::from_scale(0.0), MixturePrior::single_normal(m, sd), flat};
    const auto post = fit_binary(in, config(5));
    auto dens = [&](double x) {
        const std::vector<double> p{x};
        return std::exp(control_log_density(in.counts, in.ctrl_tau_prior, flat, p) + 30.0);
    };
    const double z = integrate(dens, -6.0, 6.0, 1e-14, 1e-12, 2000).value;
    const double m1 = integrate([&](double x) { return x * dens(x); }, -6.0, 6.0, 1e-14, 1e-12, 2000).value / z;
    const double se = stddev(post.ctrl_mu) / std::sqrt(post.ctrl_diagnostics.ess_bulk[0]);
    CHECK(std::fabs(mean(post.ctrl_mu) - m1) < 3.0 * se);
}

TEST_CASE("all-degenerate studies are inestimable") {
    const std::vector<double> m{0.0}, sd{1.0};
    BinaryFitInput in{{{"s1", 20, 0, 20, 0}, {"s2", 10, 10, 10, 10}}, responder(), HeterogeneityPrior::from_scale(0.1),
                      HeterogeneityPrior::from_scale(0.1), MixturePrior::single_normal(m, sd), ControlPrior{}};
    try {
        fit_binary(in, config(1));
        FAIL("expected inestimable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Inestimable);
    }
}

TEST_CASE("binary phase III simulation has risk differences inside (-1, 1) and nominal size") {
    const std::size_t n = 40000;
    std::vector<double> eta(n, 0.0), pc(n, 0.3);
    const auto map = transform_to_probs(eta, pc);
    const auto out = simulate_binary_program(map, {{300, 300, 0.025}}, responder(), false, 3);
    CHECK(std::fabs(out.significance.p - 0.025) < 3.0 * std::sqrt(0.025 * 0.975 / n) + 0.003);
    std::vector<double> eta2(n, std::log(3.0)), pc2(n, 0.5);
    const auto strong = simulate_binary_program(transform_to_probs(eta2, pc2), {{300, 300, 0.025}}, responder(), true, 3);
    CHECK(strong.significance.p > 0.99);
    CHECK(strong.efficacy_success.p <= strong.significance.p);
}
