#include "pos/binary.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/parallel.hpp"
#include "pos/rng.hpp"

namespace pos {

void ArmCounts::validate() const {
    require(n_treat >= 1 && n_ctrl >= 1, ErrorKind::Validation,
            "arm counts '" + study_id + "': arm sizes must be >= 1");
    require(r_treat >= 0 && r_treat <= n_treat && r_ctrl >= 0 && r_ctrl <= n_ctrl, ErrorKind::Validation,
            "arm counts '" + study_id + "': responders must lie in [0, n]");
}

LogOddsEstimate log_odds_ratio(const ArmCounts& c) {
    c.validate();
    double a = c.r_treat, b = c.n_treat - c.r_treat, cc = c.r_ctrl, d = c.n_ctrl - c.r_ctrl;
    LogOddsEstimate out;
    if (a == 0 || b == 0 || cc == 0 || d == 0) {
        a += 0.5;
        b += 0.5;
        cc += 0.5;
        d += 0.5;
        out.corrected = true;
    }
    out.log_or = std::log((a * d) / (b * cc));
    out.se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / cc + 1.0 / d);
    return out;
}

namespace {

bool degenerate_study(const ArmCounts& c) {
    const bool zero = c.r_treat == 0 && c.r_ctrl == 0;
    const bool full = c.r_treat == c.n_treat && c.r_ctrl == c.n_ctrl;
    return zero || full;
}

double binom_loglik(int r, int n, double eta) {
    // r log p + (n - r) log(1 - p), with log p = -log1p(e^-eta).
    const double log_p = eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
    const double log_q = log_p - eta;
    return r * log_p + (n - r) * log_q;
}

}  // namespace

double control_log_density(const std::vector<ArmCounts>& counts, const HeterogeneityPrior& tau_prior,
                           const ControlPrior& prior, std::span<const double> params) {
    const bool has_tau = !tau_prior.is_fixed_zero();
    const double m = params[0];
    double lp = normal_logpdf(m, prior.mean, prior.sd);
    double tau = 0.0;
    std::size_t next = 1;
    if (has_tau) {
        const double log_tau = params[next++];
        tau = std::exp(log_tau);
        if (!(tau > 0.0) || !std::isfinite(tau)) return -INFINITY;
        lp += tau_prior.distribution().logpdf(tau) + log_tau;
    }
    for (std::size_t j = 0; j < counts.size(); ++j) {
        double eta = m;
        if (has_tau) {
            const double eps = params[next++];
            lp += -0.5 * eps * eps;
            eta += tau * eps;
        }
        lp += binom_loglik(counts[j].r_ctrl, counts[j].n_ctrl, eta);
    }
    return lp;
}

BinaryPosterior fit_binary(const BinaryFitInput& input, const McmcConfig& cfg, const FitOptions& options) {
    require(!input.counts.empty(), ErrorKind::Configuration, "binary: at least one study required");
    require(input.endpoint.routes_binary(), ErrorKind::Configuration,
            "binary: endpoint '" + input.endpoint.id + "' is not a risk-difference endpoint");
    require(input.ctrl_prior.sd > 0.0, ErrorKind::Domain, "binary: control prior sd must be > 0");
    bool all_degenerate = true;
    for (const auto& c : input.counts) {
        c.validate();
        all_degenerate = all_degenerate && degenerate_study(c);
    }
    require(!all_degenerate, ErrorKind::Inestimable,
            "binary: every study has all-zero or all-full responses; the odds ratio is inestimable");

    // (i) Log odds ratios, oriented so benefit is positive.
    MetaAnalysisInput ma{.studies = {},
                         .endpoints = {EndpointSpec{input.endpoint.id, EndpointKind::LogOddsRatio,
                                                    input.endpoint.direction, input.endpoint.tpp_threshold}},
                         .rho = 0.0,
                         .kappa = 0.0,
                         .tau_priors = {input.or_tau_prior},
                         .mu_prior = input.or_mu_prior};
    for (const auto& c : input.counts) {
        const auto est = log_odds_ratio(c);
        ma.studies.push_back({c.study_id, {orient(input.endpoint.direction, est.log_or)}, {1.0 / (est.se * est.se)}, {}});
    }
    BinaryPosterior out;
    FitOptions or_options = options;
    or_options.sample_study_effects = false;
    out.log_or = fit(ma, cfg, or_options);
    out.warnings = out.log_or.warnings;

    // (ii) Control log-odds.
    const bool has_tau = !input.ctrl_tau_prior.is_fixed_zero();
    const std::size_t j_count = input.counts.size();
    const std::size_t np = 1 + (has_tau ? 1 + j_count : 0);
    std::vector<double> init(np, 0.0), scales(np, 1.0);
    std::vector<std::string> names(np);
    double r_sum = 0.0, n_sum = 0.0;
    for (const auto& c : input.counts) {
        r_sum += c.r_ctrl;
        n_sum += c.n_ctrl;
    }
    const double p0 = (r_sum + 0.5) / (n_sum + 1.0);
    init[0] = logit(p0);
    scales[0] = 1.0 / std::sqrt(n_sum * p0 * (1.0 - p0));
    names[0] = "ctrl_mu";
    if (has_tau) {
        init[1] = std::log(input.ctrl_tau_prior.distribution().median());
        names[1] = "ctrl_log_tau";
        for (std::size_t j = 0; j < j_count; ++j) names[2 + j] = "ctrl_eps[" + input.counts[j].study_id + "]";
    }
    McmcConfig ccfg = cfg;
    ccfg.seed = splitmix64_mix(cfg.seed ^ streams::kBinary);
    const auto& counts = input.counts;
    const auto& tau_prior = input.ctrl_tau_prior;
    const auto& prior = input.ctrl_prior;
    const LogDensity density = [&](std::span<const double> x) {
        return control_log_density(counts, tau_prior, prior, x);
    };
    McmcResult raw = sample(density, init, ccfg, {}, names, scales);
    for (std::size_t p = 0; p < np; ++p) {
        if (!(raw.diagnostics.split_rhat[p] <= options.max_rhat)) {
            std::ostringstream os;
            os << "binary control fit: split R-hat " << raw.diagnostics.split_rhat[p] << " for " << names[p]
               << " exceeds " << options.max_rhat;
            fail(ErrorKind::Convergence, os.str());
        }
        if (raw.diagnostics.ess_bulk[p] < options.min_ess)
            out.warnings.push_back("low bulk ESS for " + names[p]);
    }
    const std::size_t rows = raw.draws.size() / np;
    out.ctrl_mu.resize(rows);
    out.ctrl_tau.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        out.ctrl_mu[r] = raw.draws[r * np];
        if (has_tau) out.ctrl_tau[r] = std::exp(raw.draws[r * np + 1]);
    }
    out.ctrl_diagnostics = raw.diagnostics;
    out.ctrl_names = names;
    return out;
}

BinaryMapDraws transform_to_probs(const std::vector<double>& eta, const std::vector<double>& p_ctrl,
                                  std::size_t trials) {
    require(eta.size() == p_ctrl.size(), ErrorKind::Domain, "binary: eta and control draws differ in length");
    require(trials >= 1 && eta.size() % trials == 0, ErrorKind::Domain, "binary: draws do not split into trials");
    BinaryMapDraws out;
    out.trials = trials;
    out.rows = eta.size() / trials;
    out.eta3 = eta;
    out.p_ctrl3 = p_ctrl;
    out.p_treat3.resize(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) out.p_treat3[i] = expit(logit(p_ctrl[i]) + eta[i]);
    return out;
}

BinaryMapDraws sample_binary_map(const BinaryPosterior& posterior, const EndpointSpec& endpoint,
                                 const HeterogeneityPrior& tau3_prior, std::size_t trials, std::uint64_t seed) {
    require(trials >= 1, ErrorKind::Configuration, "binary: at least one trial required");
    const std::size_t rows = posterior.rows();
    require(rows > 0 && posterior.ctrl_mu.size() == rows, ErrorKind::Domain,
            "binary: posterior draws of the two fits must pair by row");
    std::vector<double> eta(rows * trials), pc(rows * trials);
    const RngStream root = stage_stream(seed, streams::kBinary);
    parallel_for(rows, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng = root.child(r);
            const double z = tau3_prior.scale_z();
            const double tau3 = z > 0.0 ? std::fabs(z * rng.normal()) : 0.0;
            for (std::size_t k = 0; k < trials; ++k) {
                const double internal = posterior.log_or.mu_at(r, 0) + tau3 * rng.normal();
                eta[r * trials + k] = orient(endpoint.direction, internal);
                pc[r * trials + k] = expit(posterior.ctrl_mu[r] + posterior.ctrl_tau[r] * rng.normal());
            }
        }
    });
    return transform_to_probs(eta, pc, trials);
}

void BinaryTrialDesign::validate() const {
    require(n_treat >= 1 && n_ctrl >= 1, ErrorKind::Validation, "binary design: arm sizes must be >= 1");
    require(alpha > 0.0 && alpha < 0.5, ErrorKind::Validation, "binary design: alpha must lie in (0, 0.5)");
}

ProgramOutcome simulate_binary_program(const BinaryMapDraws& map, const std::vector<BinaryTrialDesign>& designs,
                                       const EndpointSpec& endpoint, bool require_tpp, std::uint64_t seed) {
    require(map.rows > 0, ErrorKind::Domain, "binary simulation: empty draws");
    require(designs.size() == map.trials, ErrorKind::Configuration,
            "binary simulation: one design per phase III trial required");
    for (const auto& d : designs) d.validate();
    const double tpp = endpoint.tpp_internal();
    const RngStream root = stage_stream(seed, streams::kProgramSim);
    std::atomic<std::size_t> n_sig{0}, n_success{0}, n_pool{0};
    parallel_for(map.rows, [&](std::size_t begin, std::size_t end) {
        std::size_t ls = 0, lsucc = 0, lpool = 0;
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng = root.child(r);
            bool all_sig = true;
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < map.trials; ++k) {
                const auto& des = designs[k];
                const std::size_t i = r * map.trials + k;
                std::binomial_distribution<int> bt(des.n_treat, map.p_treat3[i]);
                std::binomial_distribution<int> bc(des.n_ctrl, map.p_ctrl3[i]);
                const int rt = bt(rng), rc = bc(rng);
                const double pt = static_cast<double>(rt) / des.n_treat;
                const double pcv = static_cast<double>(rc) / des.n_ctrl;
                const double diff = orient(endpoint.direction, pt - pcv);
                const double pbar = static_cast<double>(rt + rc) / (des.n_treat + des.n_ctrl);
                const double se = std::sqrt(pbar * (1.0 - pbar) * (1.0 / des.n_treat + 1.0 / des.n_ctrl));
                const bool sig = se > 0.0 && diff / se > normal_quantile(1.0 - des.alpha);
                all_sig = all_sig && sig;
                const double w = static_cast<double>(des.n_treat) * des.n_ctrl / (des.n_treat + des.n_ctrl);
                num += w * diff;
                den += w;
            }
            const bool pool_ok = num / den > tpp;
            ls += all_sig ? 1 : 0;
            lpool += pool_ok ? 1 : 0;
            lsucc += (all_sig && (!require_tpp || pool_ok)) ? 1 : 0;
        }
        n_sig += ls;
        n_success += lsucc;
        n_pool += lpool;
    });
    ProgramOutcome out;
    out.draws = map.rows;
    out.significance = make_proportion(n_sig.load(), map.rows);
    out.efficacy_success = make_proportion(n_success.load(), map.rows);
    out.endpoint_significance = {out.significance};
    out.endpoint_pooled_pass = {make_proportion(n_pool.load(), map.rows)};
    return out;
}

}  // namespace pos
