#pragma once

// Risk-scorecard adjustment of the approval benchmark given a positive phase
// III program.

#include <array>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace pos {

enum class RiskLevel { Low, Medium, High };

RiskLevel parse_risk_level(std::string_view s);  // "low" / "medium" / "high" or "A" / "B" / "C"
char risk_code(RiskLevel r);                     // A, B, C

// r1 regulatory alignment, r2 unaccounted safety, r3 unaccounted TPP,
// r4 quality and compliance, r5 technical development.
struct RiskScorecard {
    std::array<RiskLevel, 5> ratings{};

    std::string profile_key() const;  // e.g. "AABAA"
    static RiskScorecard from_json(const nlohmann::json& j);
};

// Fitted conditional PoS by risk profile: either every queried profile is
// listed ("full") or a logit-additive main-effects form is supplied.
class EpTable {
public:
    static EpTable from_json(const nlohmann::json& j);
    static EpTable additive(double intercept, const std::array<std::array<double, 3>, 5>& offsets);
    static EpTable full(std::map<std::string, double> entries);

    double lookup(const RiskScorecard& card) const;
    bool is_additive() const { return additive_; }

private:
    bool additive_ = false;
    double intercept_ = 0.0;
    std::array<std::array<double, 3>, 5> offsets_{};
    std::map<std::string, double> entries_;
};

double lookup_ep(const RiskScorecard& card, const EpTable& table);

// Historical approval rate the scorecard odds are anchored to.
inline constexpr double kApprovalAnchor = 0.9;

// odds(ep) / odds(anchor). Throws Domain for ep above 1 - 1e-9.
double adjustment_factor(double ep, double anchor = kApprovalAnchor);

// Closed form of odds^-1(C(ep) odds(p_bs)).
double conditional_pos(double ep, double p_bs, double anchor = kApprovalAnchor);

double final_pos(double p_positive_phase3, double conditional);

}  // namespace pos
