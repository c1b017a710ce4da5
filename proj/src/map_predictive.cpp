#include "pos/map_predictive.hpp"

#include <cmath>

#include "pos/error.hpp"
#include "pos/parallel.hpp"
#include "pos/rng.hpp"

namespace pos {

std::vector<double> MapDraws::column(std::size_t trial, std::size_t e) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = theta(r, trial, e);
    return out;
}

MapDraws sample_phase3_effects(const PosteriorDraws& posterior, const Phase3HeterogeneitySpec& spec,
                               std::size_t trials, std::uint64_t seed) {
    return sample_phase3_effects(posterior.mu, posterior.endpoints, spec, trials, seed);
}

MapDraws sample_phase3_effects(std::span<const double> mu, std::size_t endpoints,
                               const Phase3HeterogeneitySpec& spec, std::size_t trials,
                               std::uint64_t seed) {
    require(trials >= 1, ErrorKind::Configuration, "phase III: at least one trial required");
    require(endpoints == 1 || endpoints == 2, ErrorKind::Configuration,
            "phase III: 1 or 2 endpoints required");
    require(!mu.empty() && mu.size() % endpoints == 0, ErrorKind::Domain,
            "phase III: posterior draws are empty");
    require(spec.tau_priors.size() == endpoints, ErrorKind::Configuration,
            "phase III: one heterogeneity prior per endpoint");
    require(std::fabs(spec.rho) < 1.0, ErrorKind::Conditioning, "phase III: |rho| must be < 1");

    MapDraws out;
    out.rows = mu.size() / endpoints;
    out.trials = trials;
    out.endpoints = endpoints;
    out.theta3.resize(out.rows * trials * endpoints);
    out.tau3.resize(out.rows * endpoints);
    out.source_mu_index.resize(out.rows);

    const RngStream root = stage_stream(seed, streams::kPhase3Effects);
    const double rho = endpoints == 2 ? spec.rho : 0.0;
    const double rho_c = std::sqrt(1.0 - rho * rho);
    parallel_for(out.rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng = root.child(r);
            out.source_mu_index[r] = r;
            double tau[2] = {0.0, 0.0};
            for (std::size_t e = 0; e < endpoints; ++e) {
                const double z = spec.tau_priors[e].scale_z();
                tau[e] = z > 0.0 ? std::fabs(z * rng.normal()) : 0.0;
                out.tau3[r * endpoints + e] = tau[e];
            }
            for (std::size_t k = 0; k < trials; ++k) {
                double* dst = &out.theta3[(r * trials + k) * endpoints];
                const double z0 = rng.normal();
                dst[0] = mu[r * endpoints] + tau[0] * z0;
                if (endpoints == 2) {
                    const double z1 = rng.normal();
                    dst[1] = mu[r * endpoints + 1] + tau[1] * (rho * z0 + rho_c * z1);
                }
            }
        }
    });
    return out;
}

Proportion make_proportion(std::size_t hits, std::size_t n) {
    Proportion p;
    p.hits = hits;
    p.n = n;
    if (n == 0) return p;
    p.p = static_cast<double>(hits) / static_cast<double>(n);
    p.se = std::sqrt(p.p * (1.0 - p.p) / static_cast<double>(n));
    return p;
}

Proportion predictive_prob(const MapDraws& draws,
                           const std::function<bool(std::span<const double>)>& pred) {
    require(draws.rows > 0, ErrorKind::Domain, "predictive probability of empty draws");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < draws.rows; ++r) hits += pred(draws.row(r)) ? 1 : 0;
    return make_proportion(hits, draws.rows);
}

}  // namespace pos
