#include "pos/conditional_pos.hpp"

#include <cmath>

#include "pos/distributions.hpp"
#include "pos/error.hpp"

namespace pos {

RiskLevel parse_risk_level(std::string_view s) {
    if (s == "low" || s == "A") return RiskLevel::Low;
    if (s == "medium" || s == "B") return RiskLevel::Medium;
    if (s == "high" || s == "C") return RiskLevel::High;
    fail(ErrorKind::Schema, "unknown risk level '" + std::string(s) + "'");
}

char risk_code(RiskLevel r) { return static_cast<char>('A' + static_cast<int>(r)); }

std::string RiskScorecard::profile_key() const {
    std::string key;
    for (RiskLevel r : ratings) key.push_back(risk_code(r));
    return key;
}

RiskScorecard RiskScorecard::from_json(const nlohmann::json& j) {
    static const char* names[5] = {"regulatory_alignment", "unaccounted_safety", "unaccounted_tpp",
                                   "quality_compliance", "technical_development"};
    RiskScorecard card;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        require(s.size() == 5, ErrorKind::Schema, "risk profile must have five letters");
        for (int i = 0; i < 5; ++i) card.ratings[i] = parse_risk_level(std::string(1, s[i]));
        return card;
    }
    require(j.is_object(), ErrorKind::Schema, "risk scorecard must be an object or profile string");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* n : names) ok = ok || key == n;
        require(ok, ErrorKind::Schema, "risk scorecard: unknown factor '" + key + "'");
    }
    for (int i = 0; i < 5; ++i) {
        require(j.contains(names[i]) && j[names[i]].is_string(), ErrorKind::Schema,
                std::string("risk scorecard: missing rating '") + names[i] + "'");
        card.ratings[i] = parse_risk_level(j[names[i]].get<std::string>());
    }
    return card;
}

EpTable EpTable::additive(double intercept, const std::array<std::array<double, 3>, 5>& offsets) {
    EpTable t;
    t.additive_ = true;
    t.intercept_ = intercept;
    t.offsets_ = offsets;
    return t;
}

EpTable EpTable::full(std::map<std::string, double> entries) {
    for (const auto& [key, v] : entries) {
        require(key.size() == 5 && key.find_first_not_of("ABC") == std::string::npos, ErrorKind::Schema,
                "ep table: profile key '" + key + "' must be five letters over A, B, C");
        require(v > 0.0 && v < 1.0, ErrorKind::Domain, "ep table: entry '" + key + "' must lie in (0, 1)");
    }
    EpTable t;
    t.entries_ = std::move(entries);
    return t;
}

EpTable EpTable::from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("mode") && j["mode"].is_string(), ErrorKind::Schema,
            "ep table: object with 'mode' required");
    const auto mode = j["mode"].get<std::string>();
    if (mode == "full") {
        require(j.contains("entries") && j["entries"].is_object(), ErrorKind::Schema,
                "ep table: 'entries' object required in full mode");
        std::map<std::string, double> entries;
        for (const auto& [key, v] : j["entries"].items()) {
            require(v.is_number(), ErrorKind::Schema, "ep table: entry '" + key + "' must be numeric");
            entries[key] = v.get<double>();
        }
        return full(std::move(entries));
    }
    require(mode == "additive", ErrorKind::Schema, "ep table: mode must be 'full' or 'additive'");
    require(j.contains("intercept") && j["intercept"].is_number(), ErrorKind::Schema,
            "ep table: numeric 'intercept' required in additive mode");
    std::array<std::array<double, 3>, 5> offsets{};
    if (j.contains("offsets")) {
        const auto& o = j["offsets"];
        require(o.is_array() && o.size() == 5, ErrorKind::Schema,
                "ep table: 'offsets' must list five factors");
        for (int f = 0; f < 5; ++f) {
            require(o[f].is_object(), ErrorKind::Schema, "ep table: each factor's offsets must be an object");
            for (const auto& [level, v] : o[f].items()) {
                require(v.is_number(), ErrorKind::Schema, "ep table: offsets must be numeric");
                offsets[f][static_cast<int>(parse_risk_level(level))] = v.get<double>();
            }
        }
    }
    return additive(j["intercept"].get<double>(), offsets);
}

double EpTable::lookup(const RiskScorecard& card) const {
    if (additive_) {
        double eta = intercept_;
        for (int f = 0; f < 5; ++f) eta += offsets_[f][static_cast<int>(card.ratings[f])];
        return expit(eta);
    }
    const auto key = card.profile_key();
    const auto it = entries_.find(key);
    require(it != entries_.end(), ErrorKind::Schema, "ep table: no entry for risk profile " + key);
    return it->second;
}

double lookup_ep(const RiskScorecard& card, const EpTable& table) { return table.lookup(card); }

double adjustment_factor(double ep, double anchor) {
    require(ep > 0.0 && ep < 1.0, ErrorKind::Domain, "conditional PoS ep must lie in (0, 1)");
    require(ep <= 1.0 - 1e-9, ErrorKind::Domain, "adjustment factor overflow: ep too close to 1");
    return (ep / (1.0 - ep)) / (anchor / (1.0 - anchor));
}

double conditional_pos(double ep, double p_bs, double anchor) {
    require(ep > 0.0 && ep < 1.0, ErrorKind::Domain, "conditional PoS ep must lie in (0, 1)");
    require(p_bs > 0.0 && p_bs < 1.0, ErrorKind::Domain, "approval benchmark must lie in (0, 1)");
    const double den = anchor * (1.0 - ep) + p_bs * (ep - anchor);
    require(den > 0.0, ErrorKind::Numerical, "conditional PoS: non-positive denominator");
    return (1.0 - anchor) * ep * p_bs / den;
}

double final_pos(double p_positive_phase3, double conditional) {
    require(p_positive_phase3 >= 0.0 && p_positive_phase3 <= 1.0 && conditional >= 0.0 && conditional <= 1.0,
            ErrorKind::Domain, "final PoS inputs must lie in [0, 1]");
    return p_positive_phase3 * conditional;
}

}  // namespace pos
