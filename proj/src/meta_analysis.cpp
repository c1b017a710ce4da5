#include "pos/meta_analysis.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "pos/error.hpp"
#include "pos/parallel.hpp"
#include "pos/rng.hpp"
#include "pos/stats.hpp"

namespace pos {

namespace {

constexpr double kSingularLimit = 1.0 - 1e-6;

struct ParamLayout {
    std::size_t dims = 0;
    std::vector<int> tau_slot;  // per endpoint: index into params, or -1 when tau == 0

    std::size_t size() const {
        std::size_t n = dims;
        for (int s : tau_slot) n += s >= 0 ? 1 : 0;
        return n;
    }
};

ParamLayout layout_for(const MetaAnalysisInput& in) {
    ParamLayout l;
    l.dims = in.dims();
    int next = static_cast<int>(l.dims);
    for (const auto& p : in.tau_priors) l.tau_slot.push_back(p.is_fixed_zero() ? -1 : next++);
    return l;
}

double study_kappa(const MetaAnalysisInput& in, const StudyEstimate& s) {
    return s.kappa.value_or(in.kappa);
}

Sym2 sampling_cov(const MetaAnalysisInput& in, const StudyEstimate& s) {
    return make_cov(1.0 / std::sqrt(s.fisher_info[0]), 1.0 / std::sqrt(s.fisher_info[1]),
                    study_kappa(in, s));
}

}  // namespace

void MetaAnalysisInput::validate() const {
    const std::size_t d = dims();
    require(d == 1 || d == 2, ErrorKind::Configuration, "meta-analysis: 1 or 2 endpoints required");
    require(!studies.empty(), ErrorKind::Configuration, "meta-analysis: at least one study required");
    for (const auto& e : endpoints) {
        e.validate();
        require(!e.routes_binary(), ErrorKind::Configuration,
                "meta-analysis: risk-difference endpoint '" + e.id + "' must use the binary pathway");
    }
    for (const auto& s : studies) {
        s.validate();
        require(s.endpoints() == d, ErrorKind::Configuration,
                "meta-analysis: study '" + s.study_id + "' must report every endpoint");
        if (d == 2) {
            require(std::fabs(study_kappa(*this, s)) < kSingularLimit, ErrorKind::Conditioning,
                    "meta-analysis: |kappa| too close to 1 for study '" + s.study_id + "'");
        }
    }
    require(tau_priors.size() == d, ErrorKind::Configuration,
            "meta-analysis: one heterogeneity prior per endpoint");
    require(mu_prior.dims() == d, ErrorKind::Configuration,
            "meta-analysis: mu prior dimension must match endpoints");
    if (d == 1) {
        require(rho == 0.0, ErrorKind::Configuration, "meta-analysis: rho must be 0 for one endpoint");
    } else {
        require(std::fabs(rho) < kSingularLimit, ErrorKind::Conditioning,
                "meta-analysis: |rho| too close to 1");
        require(std::fabs(kappa) < kSingularLimit, ErrorKind::Conditioning,
                "meta-analysis: |kappa| too close to 1");
    }
}

double meta_log_density(const MetaAnalysisInput& in, std::span<const double> params) {
    const std::size_t d = in.dims();
    const auto layout = layout_for(in);
    double tau[2] = {0.0, 0.0};
    double lp = in.mu_prior.log_density(params.subspan(0, d));
    if (!std::isfinite(lp)) return -INFINITY;
    for (std::size_t e = 0; e < d; ++e) {
        const int slot = layout.tau_slot[e];
        if (slot < 0) continue;
        const double log_tau = params[static_cast<std::size_t>(slot)];
        tau[e] = std::exp(log_tau);
        if (!(tau[e] > 0.0) || !std::isfinite(tau[e])) return -INFINITY;
        lp += in.tau_priors[e].distribution().logpdf(tau[e]) + log_tau;  // Jacobian
    }
    if (d == 1) {
        for (const auto& s : in.studies) {
            const double v = 1.0 / s.fisher_info[0] + tau[0] * tau[0];
            lp += normal_logpdf(s.theta_hat[0], params[0], std::sqrt(v));
        }
    } else {
        const Sym2 t = make_cov(tau[0], tau[1], in.rho);
        for (const auto& s : in.studies) {
            lp += bvn_logpdf(s.theta_hat[0], s.theta_hat[1], params[0], params[1],
                             sampling_cov(in, s) + t);
        }
    }
    return lp;
}

std::vector<double> PosteriorDraws::mu_column(std::size_t e) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = mu_at(r, e);
    return out;
}

std::vector<double> PosteriorDraws::tau_column(std::size_t e) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = tau_at(r, e);
    return out;
}

PosteriorDraws fit(const MetaAnalysisInput& input, const McmcConfig& cfg, const FitOptions& options) {
    input.validate();
    const std::size_t d = input.dims();
    const auto layout = layout_for(input);
    const std::size_t np = layout.size();

    // Start at the fixed-effect pooled estimate and the prior median of tau.
    std::vector<double> init(np), scales(np, 1.0);
    std::vector<std::string> names(np);
    for (std::size_t e = 0; e < d; ++e) {
        double wsum = 0.0, wx = 0.0;
        for (const auto& s : input.studies) {
            wsum += s.fisher_info[e];
            wx += s.fisher_info[e] * s.theta_hat[e];
        }
        init[e] = wx / wsum;
        // Step size from the approximate posterior precision; the prior caps
        // it when the data carry little information.
        const auto& pr = input.mu_prior;
        const double gap = pr.tpp_mean()[e] - pr.null_mean()[e];
        const double prior_var = std::max(pr.null_sds()[e], pr.tpp_sds()[e]) * std::max(pr.null_sds()[e], pr.tpp_sds()[e]) +
                                 0.25 * gap * gap;
        scales[e] = 1.0 / std::sqrt(wsum + (prior_var > 0.0 ? 1.0 / prior_var : 0.0));
        names[e] = "mu[" + input.endpoints[e].id + "]";
        if (layout.tau_slot[e] >= 0) {
            const auto slot = static_cast<std::size_t>(layout.tau_slot[e]);
            init[slot] = std::log(input.tau_priors[e].distribution().median());
            names[slot] = "log_tau[" + input.endpoints[e].id + "]";
        }
    }
    if (!std::isfinite(meta_log_density(input, init))) {
        // The pooled estimate can sit where the prior has no mass; fall back
        // to the prior's TPP component mean.
        for (std::size_t e = 0; e < d; ++e) init[e] = input.mu_prior.tpp_mean()[e];
    }

    BlockSpec blocks;
    blocks.emplace_back();
    for (std::size_t e = 0; e < d; ++e) blocks.back().push_back(e);
    for (std::size_t p = d; p < np; ++p) blocks.push_back({p});

    const LogDensity density = [&input](std::span<const double> x) { return meta_log_density(input, x); };
    McmcResult raw = sample(density, init, cfg, blocks, names, scales);

    std::ostringstream table;
    bool converged = true;
    table << std::fixed << std::setprecision(4);
    for (std::size_t p = 0; p < np; ++p) {
        const double r = raw.diagnostics.split_rhat[p];
        table << "  " << names[p] << ": R-hat " << r << ", ESS " << raw.diagnostics.ess_bulk[p] << '\n';
        if (!(r <= options.max_rhat)) converged = false;
    }
    if (!converged) {
        Error err(ErrorKind::Convergence,
                  "meta-analysis: split R-hat above " + std::to_string(options.max_rhat) + "\n" + table.str());
        throw err;
    }

    PosteriorDraws out;
    out.endpoints = d;
    out.studies = input.studies.size();
    for (const auto& e : input.endpoints) out.endpoint_ids.push_back(e.id);
    out.diagnostics = raw.diagnostics;
    for (std::size_t p = 0; p < np; ++p) {
        if (raw.diagnostics.ess_bulk[p] < options.min_ess) {
            std::ostringstream w;
            w << "low bulk ESS for " << names[p] << ": " << std::setprecision(1) << std::fixed
              << raw.diagnostics.ess_bulk[p];
            out.warnings.push_back(w.str());
        }
    }

    const std::size_t rows = raw.draws.size() / np;
    out.mu.resize(rows * d);
    out.tau.assign(rows * d, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t e = 0; e < d; ++e) {
            out.mu[r * d + e] = raw.draws[r * np + e];
            if (layout.tau_slot[e] >= 0)
                out.tau[r * d + e] = std::exp(raw.draws[r * np + static_cast<std::size_t>(layout.tau_slot[e])]);
        }
    }

    if (options.sample_study_effects) {
        // theta_j | theta_hat_j, mu, T ~ N(mu + T (S+T)^-1 (theta_hat - mu), T - T (S+T)^-1 T).
        const std::size_t j_count = input.studies.size();
        out.theta2.assign(rows * j_count * d, 0.0);
        const RngStream root = stage_stream(cfg.seed, streams::kPosterior);
        parallel_for(rows, [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                RngStream rng = root.child(r);
                for (std::size_t j = 0; j < j_count; ++j) {
                    const auto& s = input.studies[j];
                    double* dst = &out.theta2[(r * j_count + j) * d];
                    if (d == 1) {
                        const double t2 = out.tau[r] * out.tau[r];
                        const double v = 1.0 / s.fisher_info[0];
                        const double gain = t2 / (t2 + v);
                        const double m = out.mu[r] + gain * (s.theta_hat[0] - out.mu[r]);
                        const double var = t2 - gain * t2;
                        dst[0] = m + std::sqrt(std::max(var, 0.0)) * rng.normal();
                        continue;
                    }
                    const Sym2 t = make_cov(out.tau[r * 2], out.tau[r * 2 + 1], input.rho);
                    const Sym2 st = sampling_cov(input, s) + t;
                    const double det = st.det();
                    // Gain G = T (S+T)^-1 (not symmetric in general).
                    const double i00 = st.c / det, i01 = -st.b / det, i11 = st.a / det;
                    const double g00 = t.a * i00 + t.b * i01, g01 = t.a * i01 + t.b * i11;
                    const double g10 = t.b * i00 + t.c * i01, g11 = t.b * i01 + t.c * i11;
                    const double r0 = s.theta_hat[0] - out.mu[r * 2], r1 = s.theta_hat[1] - out.mu[r * 2 + 1];
                    const double m0 = out.mu[r * 2] + g00 * r0 + g01 * r1;
                    const double m1 = out.mu[r * 2 + 1] + g10 * r0 + g11 * r1;
                    // V = T - G T.
                    const double v00 = t.a - (g00 * t.a + g01 * t.b);
                    const double v01 = t.b - (g00 * t.b + g01 * t.c);
                    const double v11 = t.c - (g10 * t.b + g11 * t.c);
                    const double l00 = std::sqrt(std::max(v00, 0.0));
                    const double l10 = l00 > 0.0 ? v01 / l00 : 0.0;
                    const double l11 = std::sqrt(std::max(v11 - l10 * l10, 0.0));
                    const double z0 = rng.normal(), z1 = rng.normal();
                    dst[0] = m0 + l00 * z0;
                    dst[1] = m1 + l10 * z0 + l11 * z1;
                }
            }
        });
    }
    out.chains = std::move(raw);
    return out;
}

MixturePosterior oracle_posterior_mixture(double theta_hat, double info, const MixturePrior& prior) {
    require(prior.dims() == 1, ErrorKind::Domain, "oracle: single endpoint only");
    require(info > 0.0, ErrorKind::Domain, "oracle: information must be > 0");
    MixturePosterior post;
    const double se2 = 1.0 / info;
    const double w[2] = {prior.omega(), 1.0 - prior.omega()};
    const double m[2] = {prior.null_mean()[0], prior.tpp_mean()[0]};
    const double s[2] = {prior.null_sds()[0], prior.tpp_sds()[0]};
    double logw[2];
    for (int c = 0; c < 2; ++c) {
        const double prec = info + 1.0 / (s[c] * s[c]);
        post.means[c] = (info * theta_hat + m[c] / (s[c] * s[c])) / prec;
        post.sds[c] = std::sqrt(1.0 / prec);
        logw[c] = w[c] > 0.0 ? std::log(w[c]) + normal_logpdf(theta_hat, m[c], std::sqrt(s[c] * s[c] + se2))
                             : -INFINITY;
    }
    const double norm = log_add_exp(logw[0], logw[1]);
    for (int c = 0; c < 2; ++c) post.weights[c] = std::exp(logw[c] - norm);
    return post;
}

double MixturePosterior::mean() const { return weights[0] * means[0] + weights[1] * means[1]; }

double MixturePosterior::sd() const {
    double second = 0.0;
    for (int c = 0; c < 2; ++c) second += weights[c] * (sds[c] * sds[c] + means[c] * means[c]);
    const double m = mean();
    return std::sqrt(std::max(second - m * m, 0.0));
}

double MixturePosterior::cdf(double x) const {
    double p = 0.0;
    for (int c = 0; c < 2; ++c)
        if (weights[c] > 0.0) p += weights[c] * normal_cdf((x - means[c]) / sds[c]);
    return p;
}

double MixturePosterior::quantile(double p) const {
    require(p > 0.0 && p < 1.0, ErrorKind::Domain, "quantile probability must lie in (0, 1)");
    double lo = std::min(means[0] - 40 * sds[0], means[1] - 40 * sds[1]);
    double hi = std::max(means[0] + 40 * sds[0], means[1] + 40 * sds[1]);
    for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<ParameterSummary> posterior_summary(const PosteriorDraws& draws,
                                                const std::vector<double>& probs) {
    require(draws.rows() > 0, ErrorKind::Domain, "posterior summary of empty draws");
    std::vector<ParameterSummary> out;
    auto summarise = [&](std::string name, const std::vector<double>& col) {
        ParameterSummary s;
        s.name = std::move(name);
        s.mean = mean(col);
        s.sd = col.size() > 1 ? stddev(col) : 0.0;
        s.probs = probs;
        s.quantiles = quantiles(col, probs);
        out.push_back(std::move(s));
    };
    for (std::size_t e = 0; e < draws.endpoints; ++e) {
        const std::string id = e < draws.endpoint_ids.size() ? draws.endpoint_ids[e] : std::to_string(e);
        summarise("mu[" + id + "]", draws.mu_column(e));
    }
    for (std::size_t e = 0; e < draws.endpoints; ++e) {
        const std::string id = e < draws.endpoint_ids.size() ? draws.endpoint_ids[e] : std::to_string(e);
        summarise("tau[" + id + "]", draws.tau_column(e));
    }
    return out;
}

}  // namespace pos
