#pragma once

// Shared domain types. Effects are stored internally on a benefit-positive
// scale: values supplied for benefit-negative endpoints are negated once at
// ingestion (Direction::orient) and negated back for reporting.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pos/distributions.hpp"

namespace pos {

enum class EndpointKind {
    ContinuousNormal,
    LogHazardRatio,
    LogRateRatio,
    LogOddsRatio,
    RiskDifferenceBinary,
};

enum class Direction { BenefitPositive, BenefitNegative };

std::string_view to_string(EndpointKind kind);
std::string_view to_string(Direction dir);
EndpointKind parse_endpoint_kind(std::string_view s);
Direction parse_direction(std::string_view s);

// Maps between the reporting scale and the internal benefit-positive scale.
// The map is its own inverse.
inline double orient(Direction dir, double value) {
    return dir == Direction::BenefitNegative ? -value : value;
}

struct EndpointSpec {
    std::string id;
    EndpointKind kind = EndpointKind::ContinuousNormal;
    Direction direction = Direction::BenefitPositive;
    double tpp_threshold = 0.0;  // reporting scale

    // Threshold on the internal scale; always > 0 for a valid spec.
    double tpp_internal() const { return orient(direction, tpp_threshold); }
    bool routes_binary() const { return kind == EndpointKind::RiskDifferenceBinary; }
    void validate() const;
};

// Phase II study summary. Estimates are on the internal scale.
struct StudyEstimate {
    std::string study_id;
    std::vector<double> theta_hat;
    std::vector<double> fisher_info;
    std::optional<double> kappa;

    std::size_t endpoints() const { return theta_hat.size(); }
    void validate() const;
};

struct Nuisance {
    std::optional<double> response_sd;  // continuous endpoints
    std::optional<double> event_prob;   // binary endpoints, common response rate
};

double half_normal_scale_from_median(double median);

// Standard error of the effect estimate from one response per arm (or a single
// event for time-to-event and count endpoints).
double unit_information_sd(const EndpointSpec& endpoint, const Nuisance& nuisance);

// Sd placing 1% of a normal component beyond the other component's mean:
// |delta| / |Phi^-1(0.01)|.
double solve_component_sd(double delta);

enum class HeterogeneityCategory { Large, Substantial, Moderate, Small, VerySmall };

std::string_view to_string(HeterogeneityCategory c);
HeterogeneityCategory parse_heterogeneity_category(std::string_view s);

// Prior median of tau expressed as a multiple of the unit-information sd.
// The defaults are provisional and may be overridden per config.
struct CategoryMultipliers {
    double large = 1.0;
    double substantial = 0.5;
    double moderate = 0.25;
    double small = 0.125;
    double very_small = 0.0625;

    double of(HeterogeneityCategory c) const;
};

// tau ~ HN(scale_z^2). scale_z == 0 pins tau at zero (no heterogeneity).
class HeterogeneityPrior {
public:
    static HeterogeneityPrior from_scale(double scale_z);
    static HeterogeneityPrior from_median(double median);
    static HeterogeneityPrior from_category(HeterogeneityCategory category, double unit_info_sd,
                                            const CategoryMultipliers& multipliers = {});

    double scale_z() const { return scale_z_; }
    bool is_fixed_zero() const { return scale_z_ == 0.0; }
    std::optional<HeterogeneityCategory> category() const { return category_; }
    std::optional<double> unit_info_sd() const { return unit_info_sd_; }
    HalfNormal distribution() const { return HalfNormal{scale_z_}; }

private:
    double scale_z_ = 0.0;
    std::optional<HeterogeneityCategory> category_;
    std::optional<double> unit_info_sd_;
};

// omega * N(null_mean, Sigma_1) + (1 - omega) * N(tpp_mean, Sigma_2) over one or
// two endpoints, both components sharing the correlation rho.
class MixturePrior {
public:
    // Component sds from the 1% tail conditions; null mean at zero.
    static MixturePrior from_tpp(std::span<const double> tpp, double omega, double rho = 0.0);

    // Fully explicit form, used for oracles and weakly-informative priors.
    MixturePrior(double omega, std::vector<double> null_mean, std::vector<double> null_sds,
                 std::vector<double> tpp_mean, std::vector<double> tpp_sds, double rho = 0.0);

    // Single normal component N(mean, sd^2).
    static MixturePrior single_normal(std::span<const double> mean, std::span<const double> sd,
                                      double rho = 0.0);

    std::size_t dims() const { return tpp_mean_.size(); }
    double omega() const { return omega_; }
    double rho() const { return rho_; }
    const std::vector<double>& null_mean() const { return null_mean_; }
    const std::vector<double>& tpp_mean() const { return tpp_mean_; }
    const std::vector<double>& null_sds() const { return null_sds_; }
    const std::vector<double>& tpp_sds() const { return tpp_sds_; }

    MixturePrior with_omega(double omega) const;

    double log_density(std::span<const double> mu) const;
    double component_log_density(int component, std::span<const double> mu) const;

private:
    MixturePrior() = default;
    void validate() const;

    double omega_ = 0.0;
    std::vector<double> null_mean_, null_sds_, tpp_mean_, tpp_sds_;
    double rho_ = 0.0;
};

struct TrialDesign {
    std::string phase;
    std::vector<double> info_levels;  // per endpoint
    std::vector<double> alpha;        // per endpoint, one-sided

    double critical_value(std::size_t endpoint) const;
    void validate(std::size_t endpoints) const;
};

}  // namespace pos
