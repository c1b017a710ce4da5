#include "pos/model.hpp"

#include <cmath>
#include <sstream>

#include "pos/error.hpp"

namespace pos {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Configuration: return "configuration";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Initialization: return "initialization";
        case ErrorKind::StuckChain: return "stuck-chain";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Conditioning: return "conditioning";
        case ErrorKind::InfeasibleCalibration: return "infeasible-calibration";
        case ErrorKind::IllConditionedCalibration: return "ill-conditioned-calibration";
        case ErrorKind::Inestimable: return "inestimable";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

std::string_view to_string(EndpointKind kind) {
    switch (kind) {
        case EndpointKind::ContinuousNormal: return "continuous-normal";
        case EndpointKind::LogHazardRatio: return "log-hazard-ratio";
        case EndpointKind::LogRateRatio: return "log-rate-ratio";
        case EndpointKind::LogOddsRatio: return "log-odds-ratio";
        case EndpointKind::RiskDifferenceBinary: return "risk-difference-binary";
    }
    return "unknown";
}

std::string_view to_string(Direction dir) {
    return dir == Direction::BenefitPositive ? "benefit-positive" : "benefit-negative";
}

EndpointKind parse_endpoint_kind(std::string_view s) {
    for (auto k : {EndpointKind::ContinuousNormal, EndpointKind::LogHazardRatio,
                   EndpointKind::LogRateRatio, EndpointKind::LogOddsRatio,
                   EndpointKind::RiskDifferenceBinary}) {
        if (to_string(k) == s) return k;
    }
    fail(ErrorKind::Schema, "unknown endpoint kind '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
    if (s == "benefit-positive") return Direction::BenefitPositive;
    if (s == "benefit-negative") return Direction::BenefitNegative;
    fail(ErrorKind::Schema, "unknown direction '" + std::string(s) + "'");
}

void EndpointSpec::validate() const {
    require(std::isfinite(tpp_threshold), ErrorKind::Domain,
            "endpoint '" + id + "': TPP threshold must be finite");
    require(tpp_internal() > 0.0, ErrorKind::Domain,
            "endpoint '" + id + "': TPP threshold must lie on the benefit side of 0 for direction " +
                std::string(to_string(direction)));
}

void StudyEstimate::validate() const {
    require(!theta_hat.empty() && theta_hat.size() <= 2, ErrorKind::Domain,
            "study '" + study_id + "': one or two endpoint estimates required");
    require(fisher_info.size() == theta_hat.size(), ErrorKind::Domain,
            "study '" + study_id + "': one Fisher information per estimate required");
    for (double v : theta_hat)
        require(std::isfinite(v), ErrorKind::Domain, "study '" + study_id + "': non-finite estimate");
    for (double i : fisher_info)
        require(i > 0.0 && std::isfinite(i), ErrorKind::Domain,
                "study '" + study_id + "': Fisher information must be > 0");
    if (theta_hat.size() == 1) {
        require(!kappa.has_value(), ErrorKind::Domain,
                "study '" + study_id + "': kappa only applies to two endpoints");
    } else if (kappa) {
        require(*kappa >= -1.0 && *kappa <= 1.0, ErrorKind::Domain,
                "study '" + study_id + "': kappa must lie in [-1, 1]");
    }
}

double half_normal_scale_from_median(double median) {
    require(median >= 0.0 && std::isfinite(median), ErrorKind::Domain,
            "half-normal median must be >= 0");
    return median / normal_quantile(0.75);
}

double unit_information_sd(const EndpointSpec& endpoint, const Nuisance& nuisance) {
    switch (endpoint.kind) {
        case EndpointKind::ContinuousNormal:
            require(nuisance.response_sd.has_value(), ErrorKind::Configuration,
                    "endpoint '" + endpoint.id + "': response sd required");
            require(*nuisance.response_sd > 0.0, ErrorKind::Domain,
                    "endpoint '" + endpoint.id + "': response sd must be > 0");
            return *nuisance.response_sd * std::numbers::sqrt2;
        case EndpointKind::LogHazardRatio:
        case EndpointKind::LogRateRatio:
            return 1.0;
        case EndpointKind::LogOddsRatio:
        case EndpointKind::RiskDifferenceBinary: {
            require(nuisance.event_prob.has_value(), ErrorKind::Configuration,
                    "endpoint '" + endpoint.id + "': common response probability required");
            const double p = *nuisance.event_prob;
            require(p > 0.0 && p < 1.0, ErrorKind::Domain,
                    "endpoint '" + endpoint.id + "': response probability must lie in (0, 1)");
            const double v = p * (1.0 - p);
            return endpoint.kind == EndpointKind::LogOddsRatio ? std::sqrt(2.0 / v)
                                                               : std::sqrt(2.0 * v);
        }
    }
    fail(ErrorKind::Configuration, "unhandled endpoint kind");
}

double solve_component_sd(double delta) {
    require(delta != 0.0 && std::isfinite(delta), ErrorKind::Domain,
            "degenerate TPP: component sd needs a non-zero threshold");
    return std::fabs(delta) / -normal_quantile(0.01);
}

std::string_view to_string(HeterogeneityCategory c) {
    switch (c) {
        case HeterogeneityCategory::Large: return "large";
        case HeterogeneityCategory::Substantial: return "substantial";
        case HeterogeneityCategory::Moderate: return "moderate";
        case HeterogeneityCategory::Small: return "small";
        case HeterogeneityCategory::VerySmall: return "very-small";
    }
    return "unknown";
}

HeterogeneityCategory parse_heterogeneity_category(std::string_view s) {
    for (auto c : {HeterogeneityCategory::Large, HeterogeneityCategory::Substantial,
                   HeterogeneityCategory::Moderate, HeterogeneityCategory::Small,
                   HeterogeneityCategory::VerySmall}) {
        if (to_string(c) == s) return c;
    }
    fail(ErrorKind::Schema, "unknown heterogeneity category '" + std::string(s) + "'");
}

double CategoryMultipliers::of(HeterogeneityCategory c) const {
    switch (c) {
        case HeterogeneityCategory::Large: return large;
        case HeterogeneityCategory::Substantial: return substantial;
        case HeterogeneityCategory::Moderate: return moderate;
        case HeterogeneityCategory::Small: return small;
        case HeterogeneityCategory::VerySmall: return very_small;
    }
    return 0.0;
}

HeterogeneityPrior HeterogeneityPrior::from_scale(double scale_z) {
    require(scale_z >= 0.0 && std::isfinite(scale_z), ErrorKind::Domain,
            "half-normal scale must be >= 0");
    HeterogeneityPrior p;
    p.scale_z_ = scale_z;
    return p;
}

HeterogeneityPrior HeterogeneityPrior::from_median(double median) {
    return from_scale(half_normal_scale_from_median(median));
}

HeterogeneityPrior HeterogeneityPrior::from_category(HeterogeneityCategory category,
                                                     double unit_info_sd,
                                                     const CategoryMultipliers& multipliers) {
    require(unit_info_sd > 0.0, ErrorKind::Domain, "unit-information sd must be > 0");
    const double m = multipliers.of(category);
    require(m > 0.0, ErrorKind::Domain, "category multiplier must be > 0");
    HeterogeneityPrior p = from_median(m * unit_info_sd);
    p.category_ = category;
    p.unit_info_sd_ = unit_info_sd;
    return p;
}

MixturePrior MixturePrior::from_tpp(std::span<const double> tpp, double omega, double rho) {
    std::vector<double> sds;
    for (double d : tpp) {
        require(d > 0.0, ErrorKind::Domain, "TPP means must be > 0 on the internal scale");
        sds.push_back(solve_component_sd(d));
    }
    return MixturePrior(omega, std::vector<double>(tpp.size(), 0.0), sds,
                        std::vector<double>(tpp.begin(), tpp.end()), sds, rho);
}

MixturePrior::MixturePrior(double omega, std::vector<double> null_mean,
                           std::vector<double> null_sds, std::vector<double> tpp_mean,
                           std::vector<double> tpp_sds, double rho)
    : omega_(omega),
      null_mean_(std::move(null_mean)),
      null_sds_(std::move(null_sds)),
      tpp_mean_(std::move(tpp_mean)),
      tpp_sds_(std::move(tpp_sds)),
      rho_(rho) {
    validate();
}

MixturePrior MixturePrior::single_normal(std::span<const double> mean, std::span<const double> sd,
                                         double rho) {
    std::vector<double> m(mean.begin(), mean.end()), s(sd.begin(), sd.end());
    return MixturePrior(0.0, m, s, m, s, rho);
}

MixturePrior MixturePrior::with_omega(double omega) const {
    MixturePrior p = *this;
    p.omega_ = omega;
    p.validate();
    return p;
}

void MixturePrior::validate() const {
    const std::size_t d = tpp_mean_.size();
    require(d == 1 || d == 2, ErrorKind::Domain, "mixture prior must have 1 or 2 dimensions");
    require(null_mean_.size() == d && null_sds_.size() == d && tpp_sds_.size() == d,
            ErrorKind::Domain, "mixture prior component dimensions disagree");
    require(omega_ >= 0.0 && omega_ <= 1.0, ErrorKind::Domain, "omega must lie in [0, 1]");
    for (std::size_t i = 0; i < d; ++i) {
        require(null_sds_[i] > 0.0 && tpp_sds_[i] > 0.0, ErrorKind::Domain,
                "mixture component sds must be > 0");
    }
    if (d == 1) {
        require(rho_ == 0.0, ErrorKind::Domain, "rho must be 0 for a single endpoint");
    } else {
        require(rho_ > -1.0 && rho_ < 1.0, ErrorKind::Conditioning,
                "rho must lie strictly inside (-1, 1) for a positive definite prior");
    }
}

double MixturePrior::component_log_density(int component, std::span<const double> mu) const {
    const auto& m = component == 0 ? null_mean_ : tpp_mean_;
    const auto& s = component == 0 ? null_sds_ : tpp_sds_;
    if (dims() == 1) return normal_logpdf(mu[0], m[0], s[0]);
    return bvn_logpdf(mu[0], mu[1], m[0], m[1], make_cov(s[0], s[1], rho_));
}

double MixturePrior::log_density(std::span<const double> mu) const {
    double out = -INFINITY;
    if (omega_ > 0.0) out = std::log(omega_) + component_log_density(0, mu);
    if (omega_ < 1.0) out = log_add_exp(out, std::log1p(-omega_) + component_log_density(1, mu));
    return out;
}

double TrialDesign::critical_value(std::size_t endpoint) const {
    return normal_quantile(1.0 - alpha.at(endpoint));
}

void TrialDesign::validate(std::size_t endpoints) const {
    require(info_levels.size() == endpoints && alpha.size() == endpoints,
            ErrorKind::Configuration,
            "trial design '" + phase + "': one information level and alpha per endpoint");
    for (double i : info_levels)
        require(i > 0.0 && std::isfinite(i), ErrorKind::Domain,
                "trial design '" + phase + "': information levels must be > 0");
    for (double a : alpha)
        require(a > 0.0 && a < 0.5, ErrorKind::Domain,
                "trial design '" + phase + "': alpha must lie in (0, 0.5)");
}

}  // namespace pos
