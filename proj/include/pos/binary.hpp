#pragma once

// Binary endpoints analysed on the risk-difference scale.
//
// Two separate fits on the phase II arm counts:
//   (i)  normal-normal random-effects meta-analysis of log odds ratios;
//   (ii) binomial likelihood with normal random effects on control log-odds,
//        logit p_cj = m + tau_c eps_j, eps_j ~ N(0, 1).
// Draws of the two fits are paired by row index. Phase III draws of the log
// odds ratio and control rate are turned into treatment rates with
// p_T = expit(logit(p_C) + eta), so risk differences stay inside (-1, 1).

#include <cstdint>
#include <string>
#include <vector>

#include "pos/meta_analysis.hpp"
#include "pos/model.hpp"
#include "pos/program_sim.hpp"

namespace pos {

struct ArmCounts {
    std::string study_id;
    int n_treat = 0, r_treat = 0, n_ctrl = 0, r_ctrl = 0;

    void validate() const;
};

struct LogOddsEstimate {
    double log_or = 0.0;  // reporting scale: log odds of response, treatment vs control
    double se = 0.0;
    bool corrected = false;  // 0.5 added to every cell
};

// Adds 0.5 to every cell when any cell is zero.
LogOddsEstimate log_odds_ratio(const ArmCounts& counts);

struct ControlPrior {
    double mean = 0.0;  // control log-odds
    double sd = 2.0;
};

struct BinaryFitInput {
    std::vector<ArmCounts> counts;
    EndpointSpec endpoint;  // kind risk-difference-binary
    HeterogeneityPrior or_tau_prior;
    HeterogeneityPrior ctrl_tau_prior;
    MixturePrior or_mu_prior;  // on the internal log-OR scale
    ControlPrior ctrl_prior;
};

struct BinaryPosterior {
    PosteriorDraws log_or;        // mu / tau on the internal log-OR scale
    std::vector<double> ctrl_mu;  // control log-odds mean, per row
    std::vector<double> ctrl_tau;
    ChainDiagnostics ctrl_diagnostics;
    std::vector<std::string> ctrl_names;
    std::vector<std::string> warnings;

    std::size_t rows() const { return log_or.rows(); }
};

// Throws Inestimable when every study has both arms all-zero or all-full.
BinaryPosterior fit_binary(const BinaryFitInput& input, const McmcConfig& cfg,
                           const FitOptions& options = {});

// Log posterior of (m, [log tau_c], eps_1..eps_J) for the control model.
double control_log_density(const std::vector<ArmCounts>& counts, const HeterogeneityPrior& tau_prior,
                           const ControlPrior& prior, std::span<const double> params);

struct BinaryMapDraws {
    std::size_t rows = 0, trials = 0;
    std::vector<double> eta3;      // rows x trials, reporting-scale log odds ratio
    std::vector<double> p_ctrl3;   // rows x trials
    std::vector<double> p_treat3;  // rows x trials
};

// p_treat = expit(logit(p_ctrl) + eta), elementwise.
BinaryMapDraws transform_to_probs(const std::vector<double>& eta, const std::vector<double>& p_ctrl,
                                  std::size_t trials = 1);

// Per row: tau3 ~ HN(z^2), eta_3k ~ N(mu, tau3^2); control log-odds ~ N(m, tau_c^2)
// with the row's posterior m and tau_c.
BinaryMapDraws sample_binary_map(const BinaryPosterior& posterior, const EndpointSpec& endpoint,
                                 const HeterogeneityPrior& tau3_prior, std::size_t trials, std::uint64_t seed);

struct BinaryTrialDesign {
    int n_treat = 0, n_ctrl = 0;
    double alpha = 0.025;

    void validate() const;
};

// Arm counts drawn from the row's rates; significance by the pooled-variance z
// test of the risk difference; TPP on the risk difference pooled across trials
// with weights n_T n_C / (n_T + n_C).
ProgramOutcome simulate_binary_program(const BinaryMapDraws& map, const std::vector<BinaryTrialDesign>& designs,
                                       const EndpointSpec& endpoint, bool require_tpp, std::uint64_t seed);

}  // namespace pos
