#pragma once

// Meta-analytic-predictive draws of phase III study effects. For each
// posterior row l, heterogeneity tau3 is drawn fresh from its half-normal
// prior and K effect vectors are drawn iid from N(mu^(l), T(tau3, rho)).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pos/meta_analysis.hpp"
#include "pos/model.hpp"

namespace pos {

struct Phase3HeterogeneitySpec {
    std::vector<HeterogeneityPrior> tau_priors;  // one per endpoint
    double rho = 0.0;
};

struct MapDraws {
    std::size_t rows = 0;
    std::size_t trials = 0;
    std::size_t endpoints = 0;
    std::vector<double> theta3;  // rows x trials x endpoints, internal scale
    std::vector<double> tau3;    // rows x endpoints
    std::vector<std::size_t> source_mu_index;

    double theta(std::size_t row, std::size_t trial, std::size_t e) const {
        return theta3[(row * trials + trial) * endpoints + e];
    }
    std::span<const double> row(std::size_t r) const {
        return {theta3.data() + r * trials * endpoints, trials * endpoints};
    }
    // Values of one (trial, endpoint) cell across rows.
    std::vector<double> column(std::size_t trial, std::size_t e) const;
};

// Row l uses mu row l and the child stream l of the phase III effects stream.
MapDraws sample_phase3_effects(const PosteriorDraws& posterior, const Phase3HeterogeneitySpec& spec,
                               std::size_t trials, std::uint64_t seed);

// Same construction from a bare mu matrix (rows x endpoints).
MapDraws sample_phase3_effects(std::span<const double> mu, std::size_t endpoints,
                               const Phase3HeterogeneitySpec& spec, std::size_t trials,
                               std::uint64_t seed);

struct Proportion {
    double p = 0.0;
    double se = 0.0;  // binomial sqrt(p (1 - p) / n)
    std::size_t hits = 0;
    std::size_t n = 0;
};

Proportion make_proportion(std::size_t hits, std::size_t n);

// Fraction of rows whose trials x endpoints block satisfies `pred`.
Proportion predictive_prob(const MapDraws& draws,
                           const std::function<bool(std::span<const double>)>& pred);

}  // namespace pos
