#pragma once

// Phase III program simulation at design information. For each MAP row the
// K trial estimates are drawn from N(theta_3k, S_k) with S_k built from the
// design information and kappa; the program succeeds when every significance
// endpoint is significant in all K trials and the inverse-variance pooled
// estimates clear their TPP (or trend) thresholds.

#include <cstdint>
#include <span>
#include <vector>

#include "pos/map_predictive.hpp"
#include "pos/model.hpp"

namespace pos {

struct SuccessRule {
    std::vector<std::size_t> significance_endpoints;
    std::vector<std::size_t> tpp_endpoints;
    std::vector<std::size_t> trend_endpoints;

    void validate(std::size_t endpoints) const;
};

struct ProgramOutcome {
    Proportion significance;          // all significance endpoints, all trials
    Proportion efficacy_success;      // ... and pooled TPP / trend checks
    std::vector<Proportion> endpoint_significance;  // per endpoint, all trials
    std::vector<Proportion> endpoint_pooled_pass;   // per endpoint, pooled check (TPP or trend)
    std::size_t draws = 0;
};

double pooled_estimate(std::span<const double> estimates, std::span<const double> infos);

// Phi(mu sqrt(info) - Phi^-1(1 - alpha)).
double analytic_power(double mu, double info, double alpha);

// E[theta_hat | significant] - theta for theta_hat ~ N(theta, 1/info).
double conditional_mle_bias(double theta, double info, double alpha);

// `endpoints` supplies the TPP thresholds (internal scale via tpp_internal()).
ProgramOutcome simulate_program(const MapDraws& map, const std::vector<TrialDesign>& designs,
                                const SuccessRule& rule, std::span<const EndpointSpec> endpoints,
                                double kappa, std::uint64_t seed);

}  // namespace pos
