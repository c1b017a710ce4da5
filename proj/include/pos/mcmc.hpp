#pragma once

// Blockwise adaptive random-walk Metropolis.
//
// Each block proposes x_b + exp(log_scale_b) * L_b * z with z ~ N(0, I). During
// warmup the log scale follows a Robbins-Monro recursion toward the block's
// target acceptance rate, and L_b is refreshed from the empirical covariance
// of the block at the end of every adaptation window. Both are frozen once
// warmup ends, so kept draws come from a fixed Metropolis kernel.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pos {

struct McmcConfig {
    int chains = 4;
    int warmup = 5000;
    int keep = 10000;  // kept draws per chain (after thinning)
    int thin = 1;
    std::uint64_t seed = 1;
    // Overrides the per-block default (0.44 scalar, 0.35 multivariate) when > 0.
    double target_accept = 0.0;
    int adapt_window = 100;

    std::size_t total_draws() const {
        return static_cast<std::size_t>(chains) * static_cast<std::size_t>(keep);
    }
    void validate() const;
};

struct ChainDiagnostics {
    std::vector<double> split_rhat;  // per parameter
    std::vector<bool> rhat_degenerate;
    std::vector<double> ess_bulk;     // per parameter
    std::vector<double> accept_rate;  // per block, post-warmup
};

struct RhatResult {
    double value = 1.0;
    bool degenerate = false;
};

// Split R-hat over equal-length chains. Clamped below at 1. Zero within-chain
// variance on every chain gives 1.0 with the degenerate flag set.
RhatResult split_rhat(const std::vector<std::vector<double>>& chains);

// Bulk effective sample size: rank-normalised split chains, Geyer initial
// monotone sequence estimator.
double ess_bulk(const std::vector<std::vector<double>>& chains);

// Plain (non-rank-normalised) ESS of the split chains; used for Monte Carlo
// standard errors of means.
double ess_mean(const std::vector<std::vector<double>>& chains);

using LogDensity = std::function<double(std::span<const double>)>;

struct McmcResult {
    std::size_t dim = 0;
    int chains = 0;
    int kept = 0;  // per chain
    std::vector<double> draws;  // [chain][iteration][parameter]
    std::vector<std::string> names;
    ChainDiagnostics diagnostics;

    double at(int chain, int iter, std::size_t param) const {
        return draws[(static_cast<std::size_t>(chain) * kept + iter) * dim + param];
    }
    // All chains concatenated, chain-major.
    std::vector<double> pooled(std::size_t param) const;
    std::vector<std::vector<double>> per_chain(std::size_t param) const;
};

// Partition of parameter indices into update blocks. Empty = one scalar block
// per parameter.
using BlockSpec = std::vector<std::vector<std::size_t>>;

// Runs cfg.chains chains concurrently. `log_density` must be safe to call from
// several threads at once. Deterministic given cfg.seed. `initial_scales`
// (one per parameter, default 1) seeds the proposal before adaptation.
McmcResult sample(const LogDensity& log_density, std::span<const double> init,
                  const McmcConfig& cfg, const BlockSpec& blocks = {},
                  std::vector<std::string> names = {},
                  std::span<const double> initial_scales = {});

// CSV dump: header "chain,iteration,<names...>", one row per kept draw,
// iteration counted from 0 after warmup and thinning.
void write_draws_csv(std::ostream& out, const McmcResult& result);

}  // namespace pos
