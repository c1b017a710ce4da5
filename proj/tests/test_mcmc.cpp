#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/mcmc.hpp"
#include "pos/rng.hpp"
#include "pos/stats.hpp"

using namespace pos;

namespace {

double std_normal(std::span<const double> x) { return -0.5 * x[0] * x[0]; }

McmcConfig small_config(std::uint64_t seed) {
    McmcConfig cfg;
    cfg.chains = 4;
    cfg.warmup = 2000;
    cfg.keep = 10000;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("standard normal target moments") {
    const std::vector<double> init{0.5};
    const auto res = sample(std_normal, init, small_config(3));
    const auto x = res.pooled(0);
    REQUIRE(x.size() == 40000);
    CHECK(mean(x) >= -0.05);
    CHECK(mean(x) <= 0.05);
    CHECK(stddev(x) >= 0.95);
    CHECK(stddev(x) <= 1.05);
    CHECK(res.diagnostics.split_rhat[0] < 1.01);
    CHECK(res.diagnostics.accept_rate[0] > 0.3);
    CHECK(res.diagnostics.accept_rate[0] < 0.6);
}

TEST_CASE("same seed gives identical draws, different seed does not") {
    const std::vector<double> init{0.0, 0.0};
    auto target = [](std::span<const double> x) { return -0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]); };
    McmcConfig cfg = small_config(9);
    cfg.keep = 500;
    const auto a = sample(target, init, cfg, {{0, 1}});
    const auto b = sample(target, init, cfg, {{0, 1}});
    CHECK(a.draws == b.draws);
    cfg.seed = 10;
    const auto c = sample(target, init, cfg, {{0, 1}});
    CHECK(a.draws != c.draws);
}

TEST_CASE("split R-hat reference cases") {
    std::vector<std::vector<double>> constant(4, std::vector<double>(100, 2.5));
    const auto r = split_rhat(constant);
    CHECK(r.value == 1.0);
    CHECK(r.degenerate);

    RngStream rng(1, 1);
    std::vector<std::vector<double>> apart(2, std::vector<double>(1000));
    for (auto& v : apart[0]) v = rng.normal();
    for (auto& v : apart[1]) v = 10.0 + rng.normal();
    CHECK(split_rhat(apart).value > 5.0);

    std::vector<std::vector<double>> mixed(4, std::vector<double>(1000));
    for (auto& ch : mixed)
        for (auto& v : ch) v = rng.normal();
    CHECK(split_rhat(mixed).value < 1.01);
    CHECK(split_rhat(mixed).value >= 1.0 - 1e-6);
    CHECK(ess_bulk(mixed) > 3000.0);
}

TEST_CASE("frozen-adaptation draws pass a chi-square test against N(0,1)") {
    McmcConfig cfg = small_config(21);
    cfg.thin = 10;
    cfg.keep = 25000;
    const std::vector<double> init{0.0};
    const auto res = sample(std_normal, init, cfg);
    const auto x = res.pooled(0);
    REQUIRE(x.size() == 100000);
    const int bins = 20;
    std::vector<double> count(bins, 0.0);
    for (double v : x) {
        int b = static_cast<int>(normal_cdf(v) * bins);
        count[std::min(b, bins - 1)] += 1.0;
    }
    const double expected = static_cast<double>(x.size()) / bins;
    double chi2 = 0.0;
    for (double c : count) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 43.82);  // chi-square(19) upper 0.001 point
}

TEST_CASE("chains are independent") {
    const std::vector<double> init{0.0};
    McmcConfig cfg = small_config(77);
    cfg.thin = 10;
    cfg.keep = 40000;
    const auto res = sample(std_normal, init, cfg);
    const auto chains = res.per_chain(0);
    for (std::size_t i = 0; i < chains.size(); ++i)
        for (std::size_t j = i + 1; j < chains.size(); ++j) CHECK(std::fabs(pearson(chains[i], chains[j])) < 0.02);
}

TEST_CASE("initialisation and stuck-chain errors") {
    const std::vector<double> init{0.0};
    auto bad = [](std::span<const double>) { return -INFINITY; };
    try {
        sample(bad, init, small_config(1));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Initialization);
    }
    auto spike = [](std::span<const double> x) { return x[0] == 0.0 ? 0.0 : -INFINITY; };
    try {
        sample(spike, init, small_config(1));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::StuckChain);
    }
}

TEST_CASE("draws CSV layout") {
    McmcConfig cfg = small_config(2);
    cfg.keep = 4;
    cfg.chains = 2;
    cfg.warmup = 200;
    const std::vector<double> init{0.0, 1.0};
    const auto res = sample([](std::span<const double> x) { return -0.5 * (x[0] * x[0] + x[1] * x[1]); }, init, cfg, {},
                            {"a", "b"});
    std::ostringstream os;
    write_draws_csv(os, res);
    std::istringstream in(os.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "chain,iteration,a,b");
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == 8);
}
