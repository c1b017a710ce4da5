#include "pos/program_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/parallel.hpp"
#include "pos/rng.hpp"

namespace pos {

void SuccessRule::validate(std::size_t endpoints) const {
    require(!significance_endpoints.empty(), ErrorKind::Configuration,
            "success rule: at least one significance endpoint required");
    auto check = [&](const std::vector<std::size_t>& v, const char* what) {
        for (std::size_t e : v)
            require(e < endpoints, ErrorKind::Configuration,
                    std::string("success rule: ") + what + " endpoint index out of range");
    };
    check(significance_endpoints, "significance");
    check(tpp_endpoints, "tpp");
    check(trend_endpoints, "trend");
    for (std::size_t e : tpp_endpoints)
        require(std::find(trend_endpoints.begin(), trend_endpoints.end(), e) == trend_endpoints.end(),
                ErrorKind::Configuration, "success rule: endpoint listed as both tpp and trend");
}

double pooled_estimate(std::span<const double> estimates, std::span<const double> infos) {
    require(!estimates.empty() && estimates.size() == infos.size(), ErrorKind::Domain,
            "pooled estimate: need matching, non-empty estimates and informations");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        require(infos[k] > 0.0, ErrorKind::Domain, "pooled estimate: information must be > 0");
        num += infos[k] * estimates[k];
        den += infos[k];
    }
    return num / den;
}

double analytic_power(double mu, double info, double alpha) {
    require(info > 0.0, ErrorKind::Domain, "analytic power: information must be > 0");
    return normal_cdf(mu * std::sqrt(info) - normal_quantile(1.0 - alpha));
}

double conditional_mle_bias(double theta, double info, double alpha) {
    require(info > 0.0, ErrorKind::Domain, "conditional bias: information must be > 0");
    const double a = normal_quantile(1.0 - alpha) - theta * std::sqrt(info);
    return normal_hazard(a) / std::sqrt(info);
}

ProgramOutcome simulate_program(const MapDraws& map, const std::vector<TrialDesign>& designs,
                                const SuccessRule& rule, std::span<const EndpointSpec> endpoints,
                                double kappa, std::uint64_t seed) {
    const std::size_t d = map.endpoints;
    const std::size_t k_count = map.trials;
    require(map.rows > 0, ErrorKind::Domain, "program simulation: empty MAP draws");
    require(designs.size() == k_count, ErrorKind::Configuration,
            "program simulation: one design per phase III trial required");
    require(endpoints.size() == d, ErrorKind::Configuration,
            "program simulation: endpoint set does not match MAP draws");
    for (const auto& des : designs) des.validate(d);
    rule.validate(d);
    require(d == 1 || std::fabs(kappa) < 1.0, ErrorKind::Conditioning,
            "program simulation: |kappa| must be < 1");

    // Per trial: sds, critical values; per endpoint: pooled threshold.
    std::vector<double> se(k_count * d), crit(k_count * d), info(k_count * d);
    for (std::size_t k = 0; k < k_count; ++k)
        for (std::size_t e = 0; e < d; ++e) {
            info[k * d + e] = designs[k].info_levels[e];
            se[k * d + e] = 1.0 / std::sqrt(designs[k].info_levels[e]);
            crit[k * d + e] = designs[k].critical_value(e);
        }
    std::vector<double> pooled_threshold(d, 0.0);
    std::vector<bool> pooled_checked(d, false);
    for (std::size_t e : rule.tpp_endpoints) {
        pooled_threshold[e] = endpoints[e].tpp_internal();
        pooled_checked[e] = true;
    }
    for (std::size_t e : rule.trend_endpoints) pooled_checked[e] = true;
    std::vector<bool> sig_required(d, false);
    for (std::size_t e : rule.significance_endpoints) sig_required[e] = true;

    const double kc = d == 2 ? kappa : 0.0;
    const double kc_c = std::sqrt(1.0 - kc * kc);
    const RngStream root = stage_stream(seed, streams::kProgramSim);

    std::atomic<std::size_t> n_sig{0}, n_success{0};
    std::vector<std::atomic<std::size_t>> ep_sig(d), ep_pool(d);
    parallel_for(map.rows, [&](std::size_t begin, std::size_t end) {
        std::size_t local_sig = 0, local_success = 0;
        std::vector<std::size_t> local_ep_sig(d, 0), local_ep_pool(d, 0);
        std::vector<double> est(k_count * d);
        for (std::size_t r = begin; r < end; ++r) {
            RngStream rng = root.child(r);
            for (std::size_t k = 0; k < k_count; ++k) {
                const double z0 = rng.normal();
                est[k * d] = map.theta(r, k, 0) + se[k * d] * z0;
                if (d == 2) {
                    const double z1 = rng.normal();
                    est[k * d + 1] = map.theta(r, k, 1) + se[k * d + 1] * (kc * z0 + kc_c * z1);
                }
            }
            bool all_sig = true, pooled_ok = true;
            for (std::size_t e = 0; e < d; ++e) {
                bool sig_e = true;
                double num = 0.0, den = 0.0;
                for (std::size_t k = 0; k < k_count; ++k) {
                    if (!(est[k * d + e] / se[k * d + e] > crit[k * d + e])) sig_e = false;
                    num += info[k * d + e] * est[k * d + e];
                    den += info[k * d + e];
                }
                const bool pool_e = num / den > pooled_threshold[e];
                local_ep_sig[e] += sig_e ? 1 : 0;
                local_ep_pool[e] += pool_e ? 1 : 0;
                if (sig_required[e] && !sig_e) all_sig = false;
                if (pooled_checked[e] && !pool_e) pooled_ok = false;
            }
            local_sig += all_sig ? 1 : 0;
            local_success += (all_sig && pooled_ok) ? 1 : 0;
        }
        n_sig += local_sig;
        n_success += local_success;
        for (std::size_t e = 0; e < d; ++e) {
            ep_sig[e] += local_ep_sig[e];
            ep_pool[e] += local_ep_pool[e];
        }
    });

    ProgramOutcome out;
    out.draws = map.rows;
    out.significance = make_proportion(n_sig.load(), map.rows);
    out.efficacy_success = make_proportion(n_success.load(), map.rows);
    for (std::size_t e = 0; e < d; ++e) {
        out.endpoint_significance.push_back(make_proportion(ep_sig[e].load(), map.rows));
        out.endpoint_pooled_pass.push_back(make_proportion(ep_pool[e].load(), map.rows));
    }
    return out;
}

}  // namespace pos
