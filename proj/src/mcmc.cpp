#include "pos/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/parallel.hpp"
#include "pos/rng.hpp"
#include "pos/stats.hpp"

namespace pos {

void McmcConfig::validate() const {
    require(chains >= 2, ErrorKind::Configuration, "mcmc: at least 2 chains required");
    require(warmup >= 0 && keep >= 4, ErrorKind::Configuration,
            "mcmc: warmup >= 0 and keep >= 4 required");
    require(thin >= 1, ErrorKind::Configuration, "mcmc: thin must be >= 1");
    require(adapt_window >= 10, ErrorKind::Configuration, "mcmc: adapt_window must be >= 10");
    require(target_accept >= 0.0 && target_accept < 1.0, ErrorKind::Configuration,
            "mcmc: target_accept must lie in (0, 1)");
}

namespace {

// Split every chain in half (dropping the middle draw of odd lengths).
std::vector<std::vector<double>> split_chains(const std::vector<std::vector<double>>& chains) {
    require(chains.size() >= 2, ErrorKind::Domain, "split diagnostics need >= 2 chains");
    const std::size_t n = chains.front().size();
    require(n >= 4, ErrorKind::Domain, "split diagnostics need >= 4 draws per chain");
    for (const auto& c : chains)
        require(c.size() == n, ErrorKind::Domain, "split diagnostics need equal-length chains");
    const std::size_t half = n / 2;
    std::vector<std::vector<double>> out;
    out.reserve(2 * chains.size());
    for (const auto& c : chains) {
        out.emplace_back(c.begin(), c.begin() + half);
        out.emplace_back(c.end() - half, c.end());
    }
    return out;
}

RhatResult rhat_of_split(const std::vector<std::vector<double>>& s) {
    const double n = static_cast<double>(s.front().size());
    std::vector<double> means, vars;
    for (const auto& c : s) {
        means.push_back(mean(c));
        vars.push_back(variance(c));
    }
    const double w = mean(vars);
    if (!(w > 0.0)) return {1.0, true};
    const double b = n * variance(means);
    const double var_plus = (n - 1.0) / n * w + b / n;
    return {std::max(1.0, std::sqrt(var_plus / w)), false};
}

double ess_of_split(const std::vector<std::vector<double>>& s) {
    const std::size_t m = s.size();
    const std::size_t n = s.front().size();
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean(s[c]);
        vars[c] = variance(s[c]);
    }
    const double w = mean(vars);
    const double dn = static_cast<double>(n);
    const double var_plus = (dn - 1.0) / dn * w + variance(means);
    if (!(var_plus > 0.0)) return static_cast<double>(m * n);

    // Autocovariance at lag t averaged over chains (biased 1/n estimator).
    auto rho = [&](std::size_t t) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double g = 0.0;
            for (std::size_t i = 0; i + t < n; ++i) g += (s[c][i] - means[c]) * (s[c][i + t] - means[c]);
            acc += g / dn;
        }
        acc /= static_cast<double>(m);
        return 1.0 - (w - acc) / var_plus;
    };

    double tau = -1.0;
    double prev_pair = INFINITY;
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        double pair = rho(t) + rho(t + 1);
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev_pair);  // initial monotone sequence
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

std::vector<std::vector<double>> rank_normalise(const std::vector<std::vector<double>>& chains) {
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    const auto r = ranks(pooled);
    const double s = static_cast<double>(pooled.size());
    std::vector<std::vector<double>> out;
    std::size_t k = 0;
    for (const auto& c : chains) {
        std::vector<double> z(c.size());
        for (auto& v : z) v = normal_quantile((r[k++] - 0.375) / (s + 0.25));
        out.push_back(std::move(z));
    }
    return out;
}

// Lower-triangular Cholesky factor of a small dense SPD matrix (row-major).
// Returns false if the matrix is not numerically positive definite.
bool cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
        if (!(diag > 0.0)) return false;
        const double ljj = std::sqrt(diag);
        a[j * d + j] = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
            a[i * d + j] = v / ljj;
        }
        for (std::size_t k = j + 1; k < d; ++k) a[j * d + k] = 0.0;
    }
    return true;
}

struct BlockState {
    std::vector<std::size_t> idx;
    std::vector<double> chol;  // d x d lower triangular
    double log_scale = 0.0;
    double target = 0.44;
    bool cov_adapted = false;
    // Welford accumulators over warmup draws.
    std::size_t count = 0;
    std::vector<double> wmean, wm2;
    std::size_t window_accepts = 0;
    std::size_t kept_accepts = 0;
    std::size_t kept_tries = 0;
};

}  // namespace

RhatResult split_rhat(const std::vector<std::vector<double>>& chains) {
    return rhat_of_split(split_chains(chains));
}

double ess_bulk(const std::vector<std::vector<double>>& chains) {
    const auto s = split_chains(chains);
    if (rhat_of_split(s).degenerate) return static_cast<double>(s.size() * s.front().size());
    return ess_of_split(split_chains(rank_normalise(chains)));
}

double ess_mean(const std::vector<std::vector<double>>& chains) {
    const auto s = split_chains(chains);
    if (rhat_of_split(s).degenerate) return static_cast<double>(s.size() * s.front().size());
    return ess_of_split(s);
}

std::vector<double> McmcResult::pooled(std::size_t param) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(chains) * kept);
    for (int c = 0; c < chains; ++c)
        for (int i = 0; i < kept; ++i) out.push_back(at(c, i, param));
    return out;
}

std::vector<std::vector<double>> McmcResult::per_chain(std::size_t param) const {
    std::vector<std::vector<double>> out(chains);
    for (int c = 0; c < chains; ++c) {
        out[c].reserve(kept);
        for (int i = 0; i < kept; ++i) out[c].push_back(at(c, i, param));
    }
    return out;
}

McmcResult sample(const LogDensity& log_density, std::span<const double> init,
                  const McmcConfig& cfg, const BlockSpec& blocks_in,
                  std::vector<std::string> names, std::span<const double> initial_scales) {
    cfg.validate();
    const std::size_t dim = init.size();
    require(dim > 0, ErrorKind::Configuration, "mcmc: empty parameter vector");
    {
        const double lp0 = log_density(init);
        require(std::isfinite(lp0), ErrorKind::Initialization,
                "mcmc: log density is not finite at the initial values");
    }

    BlockSpec blocks = blocks_in;
    if (blocks.empty()) {
        for (std::size_t i = 0; i < dim; ++i) blocks.push_back({i});
    }
    {
        std::vector<int> seen(dim, 0);
        for (const auto& b : blocks) {
            require(!b.empty(), ErrorKind::Configuration, "mcmc: empty block");
            for (auto i : b) {
                require(i < dim, ErrorKind::Configuration, "mcmc: block index out of range");
                ++seen[i];
            }
        }
        for (int s : seen)
            require(s == 1, ErrorKind::Configuration, "mcmc: blocks must partition the parameters");
    }
    if (names.empty()) {
        for (std::size_t i = 0; i < dim; ++i) names.push_back("p" + std::to_string(i));
    }
    require(names.size() == dim, ErrorKind::Configuration, "mcmc: one name per parameter");
    require(initial_scales.empty() || initial_scales.size() == dim, ErrorKind::Configuration,
            "mcmc: one initial scale per parameter");

    McmcResult result;
    result.dim = dim;
    result.chains = cfg.chains;
    result.kept = cfg.keep;
    result.names = std::move(names);
    result.draws.assign(cfg.total_draws() * dim, 0.0);

    std::vector<std::vector<std::size_t>> accepts(cfg.chains), tries(cfg.chains);
    const RngStream root = stage_stream(cfg.seed, streams::kMcmc);

    auto run_chain = [&](int chain) {
        RngStream rng = root.child(static_cast<std::uint64_t>(chain));
        std::vector<double> x(init.begin(), init.end());
        double lp = log_density(x);

        std::vector<BlockState> state;
        for (const auto& b : blocks) {
            BlockState s;
            s.idx = b;
            const std::size_t d = b.size();
            s.chol.assign(d * d, 0.0);
            for (std::size_t i = 0; i < d; ++i)
                s.chol[i * d + i] = initial_scales.empty() ? 1.0 : initial_scales[b[i]];
            s.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
            s.target = cfg.target_accept > 0.0 ? cfg.target_accept : (d == 1 ? 0.44 : 0.35);
            s.wmean.assign(d, 0.0);
            s.wm2.assign(d * d, 0.0);
            state.push_back(std::move(s));
        }

        std::vector<double> prop(dim), z;
        const long total_iter = static_cast<long>(cfg.warmup) + static_cast<long>(cfg.keep) * cfg.thin;
        int kept = 0;
        for (long it = 0; it < total_iter; ++it) {
            const bool warm = it < cfg.warmup;
            for (auto& s : state) {
                const std::size_t d = s.idx.size();
                z.resize(d);
                for (auto& v : z) v = rng.normal();
                prop = x;
                const double scale = std::exp(s.log_scale);
                for (std::size_t i = 0; i < d; ++i) {
                    double step = 0.0;
                    for (std::size_t k = 0; k <= i; ++k) step += s.chol[i * d + k] * z[k];
                    prop[s.idx[i]] += scale * step;
                }
                const double lp_prop = log_density(prop);
                const double log_u = std::log(rng.uniform());
                const bool accept = std::isfinite(lp_prop) && log_u < lp_prop - lp;
                if (accept) {
                    x.swap(prop);
                    lp = lp_prop;
                    ++s.window_accepts;
                }
                if (warm) {
                    const double gain = std::pow(static_cast<double>(it) + 1.0, -0.6);
                    s.log_scale += gain * ((accept ? 1.0 : 0.0) - s.target);
                } else {
                    ++s.kept_tries;
                    if (accept) ++s.kept_accepts;
                }
            }

            if (warm && it >= cfg.adapt_window) {
                for (auto& s : state) {
                    const std::size_t d = s.idx.size();
                    ++s.count;
                    std::vector<double> delta(d);
                    for (std::size_t i = 0; i < d; ++i) {
                        delta[i] = x[s.idx[i]] - s.wmean[i];
                        s.wmean[i] += delta[i] / static_cast<double>(s.count);
                    }
                    for (std::size_t i = 0; i < d; ++i)
                        for (std::size_t k = 0; k < d; ++k)
                            s.wm2[i * d + k] += delta[i] * (x[s.idx[k]] - s.wmean[k]);
                }
            }

            if ((it + 1) % cfg.adapt_window == 0) {
                for (auto& s : state) {
                    if (s.window_accepts == 0) {
                        std::ostringstream msg;
                        msg << "mcmc: chain " << chain << " block starting at parameter '"
                            << result.names[s.idx.front()] << "' accepted nothing in iterations "
                            << it + 1 - cfg.adapt_window << ".." << it;
                        fail(ErrorKind::StuckChain, msg.str());
                    }
                    s.window_accepts = 0;
                    const std::size_t d = s.idx.size();
                    if (warm && d > 1 && s.count >= 10 * d) {
                        std::vector<double> cov(d * d);
                        for (std::size_t i = 0; i < d * d; ++i)
                            cov[i] = s.wm2[i] / static_cast<double>(s.count - 1);
                        for (std::size_t i = 0; i < d; ++i) cov[i * d + i] *= 1.0 + 1e-8;
                        if (cholesky(cov, d)) {
                            s.chol = std::move(cov);
                            if (!s.cov_adapted) s.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
                            s.cov_adapted = true;
                        }
                    }
                }
            }

            if (!warm && (it - cfg.warmup + 1) % cfg.thin == 0) {
                double* out = &result.draws[(static_cast<std::size_t>(chain) * cfg.keep + kept) * dim];
                std::copy(x.begin(), x.end(), out);
                ++kept;
            }
        }
        for (const auto& s : state) {
            accepts[chain].push_back(s.kept_accepts);
            tries[chain].push_back(s.kept_tries);
        }
    };

    parallel_for(
        static_cast<std::size_t>(cfg.chains),
        [&](std::size_t b, std::size_t e) {
            for (std::size_t c = b; c < e; ++c) run_chain(static_cast<int>(c));
        },
        std::min<std::size_t>(default_threads(), static_cast<std::size_t>(cfg.chains)));

    auto& diag = result.diagnostics;
    for (std::size_t p = 0; p < dim; ++p) {
        const auto chains = result.per_chain(p);
        const auto r = split_rhat(chains);
        diag.split_rhat.push_back(r.value);
        diag.rhat_degenerate.push_back(r.degenerate);
        diag.ess_bulk.push_back(ess_bulk(chains));
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::size_t a = 0, t = 0;
        for (int c = 0; c < cfg.chains; ++c) {
            a += accepts[c][b];
            t += tries[c][b];
        }
        diag.accept_rate.push_back(t == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(t));
    }
    return result;
}

void write_draws_csv(std::ostream& out, const McmcResult& result) {
    out << "chain,iteration";
    for (const auto& n : result.names) out << ',' << n;
    out << '\n';
    out.precision(17);
    for (int c = 0; c < result.chains; ++c) {
        for (int i = 0; i < result.kept; ++i) {
            out << c << ',' << i;
            for (std::size_t p = 0; p < result.dim; ++p) out << ',' << result.at(c, i, p);
            out << '\n';
        }
    }
}

}  // namespace pos
