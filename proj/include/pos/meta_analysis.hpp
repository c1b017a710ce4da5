#pragma once

// Bayesian random-effects meta-analysis of phase II effect estimates under a
// (possibly mixture) prior on the average effect mu.
//
//   theta_hat_j | theta_j ~ N(theta_j, S_j),   S_j from Fisher information and kappa
//   theta_j | mu, tau     ~ N(mu, T),          T from tau and rho
//   tau_e                 ~ HN(z_e^2),         mu ~ mixture prior
//
// Study effects are integrated out (theta_hat_j | mu, tau ~ N(mu, S_j + T)), so
// the sampler only moves mu and log tau. Draws of theta_j are then taken from
// their exact conditional given each kept (mu, tau).

#include <string>
#include <vector>

#include "pos/mcmc.hpp"
#include "pos/model.hpp"

namespace pos {

struct MetaAnalysisInput {
    std::vector<StudyEstimate> studies;
    std::vector<EndpointSpec> endpoints;
    double rho = 0.0;
    double kappa = 0.0;
    std::vector<HeterogeneityPrior> tau_priors;  // one per endpoint
    MixturePrior mu_prior;

    std::size_t dims() const { return endpoints.size(); }
    void validate() const;
};

struct PosteriorDraws {
    std::size_t endpoints = 0;
    std::size_t studies = 0;
    std::vector<std::string> endpoint_ids;
    std::vector<double> mu;      // rows x endpoints
    std::vector<double> tau;     // rows x endpoints, >= 0
    std::vector<double> theta2;  // rows x studies x endpoints, may be empty
    ChainDiagnostics diagnostics;
    std::vector<std::string> warnings;
    McmcResult chains;  // raw sampler output for CSV dumps

    std::size_t rows() const { return endpoints == 0 ? 0 : mu.size() / endpoints; }
    double mu_at(std::size_t row, std::size_t e) const { return mu[row * endpoints + e]; }
    double tau_at(std::size_t row, std::size_t e) const { return tau[row * endpoints + e]; }
    std::vector<double> mu_column(std::size_t e) const;
    std::vector<double> tau_column(std::size_t e) const;
};

struct FitOptions {
    double max_rhat = 1.05;
    double min_ess = 400.0;
    bool sample_study_effects = true;
};

// Throws ErrorKind::Convergence (message carries the R-hat table) when any
// split R-hat exceeds options.max_rhat.
PosteriorDraws fit(const MetaAnalysisInput& input, const McmcConfig& cfg,
                   const FitOptions& options = {});

// Log posterior density (up to a constant) in the sampler's parameterisation
// [mu..., log tau for each endpoint with a non-degenerate tau prior].
double meta_log_density(const MetaAnalysisInput& input, std::span<const double> params);

// Exact posterior for one study, one endpoint, no heterogeneity.
struct MixturePosterior {
    std::array<double, 2> weights{};  // null, TPP
    std::array<double, 2> means{};
    std::array<double, 2> sds{};

    double mean() const;
    double sd() const;
    double cdf(double x) const;
    double quantile(double p) const;
};

MixturePosterior oracle_posterior_mixture(double theta_hat, double info, const MixturePrior& prior);

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    std::vector<double> probs;
    std::vector<double> quantiles;  // type-7
};

std::vector<ParameterSummary> posterior_summary(const PosteriorDraws& draws,
                                                const std::vector<double>& probs);

}  // namespace pos
