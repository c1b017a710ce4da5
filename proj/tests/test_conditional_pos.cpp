#include <cmath>

#include "doctest.h"
#include "pos/conditional_pos.hpp"
#include "pos/distributions.hpp"
#include "pos/error.hpp"

using namespace pos;

namespace {
double odds(double p) { return p / (1.0 - p); }
double inv_odds(double o) { return o / (1.0 + o); }
}  // namespace

TEST_CASE("risk scorecard parsing") {
    const auto a = RiskScorecard::from_json("AABAA");
    CHECK(a.profile_key() == "AABAA");
    CHECK(a.ratings[2] == RiskLevel::Medium);
    const auto b = RiskScorecard::from_json({{"regulatory_alignment", "low"}, {"unaccounted_safety", "low"},
                                             {"unaccounted_tpp", "medium"}, {"quality_compliance", "low"},
                                             {"technical_development", "high"}});
    CHECK(b.profile_key() == "AABAC");
    CHECK_THROWS_AS(RiskScorecard::from_json("AAB"), Error);
    CHECK_THROWS_AS(RiskScorecard::from_json({{"regulatory_alignment", "low"}}), Error);
    CHECK_THROWS_AS(parse_risk_level("severe"), Error);
}

TEST_CASE("EpTable lookups") {
    const auto card = RiskScorecard::from_json("AAAAA");
    std::array<std::array<double, 3>, 5> zero{};
    CHECK(lookup_ep(card, EpTable::additive(logit(0.9), zero)) == doctest::Approx(0.9));
    auto offs = zero;
    offs[2][1] = -0.5;
    CHECK(lookup_ep(RiskScorecard::from_json("AABAA"), EpTable::additive(logit(0.9), offs)) ==
          doctest::Approx(0.8452).epsilon(1e-4));
    const auto full = EpTable::full({{"AABAA", 0.8308}});
    CHECK(lookup_ep(RiskScorecard::from_json("AABAA"), full) == 0.8308);
    CHECK_THROWS_AS(lookup_ep(card, full), Error);
    CHECK_THROWS_AS(EpTable::full({{"AAAAA", 1.2}}), Error);
    const auto parsed = EpTable::from_json({{"mode", "additive"}, {"intercept", logit(0.9)}});
    CHECK(parsed.is_additive());
}

TEST_CASE("adjustment factor") {
    CHECK(adjustment_factor(0.9) == doctest::Approx(1.0));
    CHECK(adjustment_factor(0.75) == doctest::Approx(1.0 / 3.0));
    CHECK(adjustment_factor(1.0 - 1e-6) > 1e4);
    CHECK_THROWS_AS(adjustment_factor(1.0 - 1e-10), Error);
}

TEST_CASE("conditional PoS") {
    CHECK(conditional_pos(0.9, 0.63) == doctest::Approx(0.63));
    CHECK(conditional_pos(0.71, 0.9) == doctest::Approx(0.71));
    CHECK(std::fabs(conditional_pos(0.8307, 0.88) - 0.80) < 0.005);
    CHECK(std::fabs(conditional_pos(0.831, 0.88) - 0.80) < 0.005);
}

TEST_CASE("two routes to the conditional PoS agree") {
    for (int i = 1; i <= 9; ++i)
        for (int j = 1; j <= 9; ++j) {
            const double ep = i / 10.0, p = j / 10.0;
            const double direct = conditional_pos(ep, p);
            const double via_odds = inv_odds(adjustment_factor(ep) * odds(p));
            CHECK(std::fabs(direct - via_odds) <= 1e-12);
        }
}

TEST_CASE("conditional PoS is increasing in both arguments") {
    for (double ep = 0.1; ep < 0.9; ep += 0.1)
        for (double p = 0.1; p < 0.9; p += 0.1) {
            CHECK(conditional_pos(ep + 0.05, p) > conditional_pos(ep, p));
            CHECK(conditional_pos(ep, p + 0.05) > conditional_pos(ep, p));
        }
}

TEST_CASE("final PoS") {
    CHECK(final_pos(1.0, 0.7) == 0.7);
    CHECK(final_pos(0.48, 0.80) == doctest::Approx(0.384));
    CHECK(final_pos(0.0, 0.7) == 0.0);
    CHECK_THROWS_AS(final_pos(1.2, 0.7), Error);
}
