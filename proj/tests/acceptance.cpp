// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pos/benchmarks.hpp"
#include "pos/calibration.hpp"
#include "pos/conditional_pos.hpp"
#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/meta_analysis.hpp"
#include "pos/pipeline.hpp"
#include "pos/program_sim.hpp"
#include "pos/rng.hpp"
#include "pos/stats.hpp"
#include "properties.hpp"

using namespace pos;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

const double kDeltaP = 0.42;  // internal scale
const double kTarget = 0.72 * 0.72 * 0.76;

StandardProgramSpec accelerated() { return StandardProgramSpec::standard(false, true); }

PipelineConfig load_config(const json& doc) {
    const auto v = validate_config(doc, postest::data_path(""));
    if (!v.ok()) fail(ErrorKind::Validation, "example config rejected: " + v.errors.front());
    return *v.config;
}

void calibration(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = calibrate_omega_single(kTarget, accelerated(), -kDeltaP);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double var = r.component_sd * r.component_sd;
    o.detail << "omega=" << r.omega << " variance=" << var << " time=" << secs << "s ";
    o.expect(r.omega >= 0.18 && r.omega <= 0.28, "omega in [0.18, 0.28]");
    o.expect(std::fabs(var - 0.0326) < 0.0005, "component variance 0.0326");
    o.expect(secs < 1.0, "runtime < 1 s");
}

void no_sse(Outcome& o) {
    const double p = prob_no_sse(0.70, 0.15);
    o.detail << "p=" << p << " ";
    o.expect(std::fabs(p - 0.955) < 1e-12, "0.955");
    o.expect(std::fabs(p - 0.96) <= 0.01, "table value 0.96 within 0.01");
}

void efficacy(Outcome& o) {
    const auto b = derive_benchmarks(0.4624, 0.70, 0.88, SseTable::defaults(SseStratum::NonOncology), "table");
    o.detail << "IIa=" << b.p_efficacy_2a << " IIb=" << b.p_efficacy_2b << " III=" << b.p_efficacy_3 << " ";
    o.expect(std::fabs(b.p_efficacy_2a - 0.72) <= 0.02, "IIa 0.72");
    o.expect(std::fabs(b.p_efficacy_2b - 0.72) <= 0.02, "IIb 0.72");
    o.expect(std::fabs(b.p_efficacy_3 - 0.76) <= 0.02, "III 0.76");
}

void map_predictive(Outcome& o) {
    const double omega = calibrate_omega_single(kTarget, accelerated(), kDeltaP).omega;
    auto doc = postest::load_json(postest::data_path("worked_example.json"));
    doc["prior"] = {{"type", "mixture"}, {"omega", omega}};
    doc["samples"] = 40000;
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_pipeline(load_config(doc), {StopAfter::Bridge, "", false});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double p = report["bridge"]["p_theta_star_benefit"]["p"];
    o.detail << "P{theta* < 0}=" << p << " rows=" << report["posterior"]["rows"] << " time=" << secs << "s ";
    o.expect(std::fabs(p - 0.998) <= 0.005, "0.998 +/- 0.005");
    o.expect(secs < 60.0, "runtime < 60 s");
}

void conditional(Outcome& o) {
    const double c = conditional_pos(0.831, 0.88);
    double worst = 0.0;
    for (int i = 1; i <= 9; ++i)
        for (int j = 1; j <= 9; ++j) {
            const double ep = i / 10.0, p = j / 10.0;
            const double odds = adjustment_factor(ep) * p / (1.0 - p);
            worst = std::max(worst, std::fabs(conditional_pos(ep, p) - odds / (1.0 + odds)));
        }
    o.detail << "C=" << c << " identity error=" << worst << " ";
    o.expect(std::fabs(c - 0.80) <= 0.005, "0.80 +/- 0.005");
    o.expect(worst <= 1e-12, "two-route identity");
}

void end_to_end(Outcome& o) {
    const double f = final_pos(0.48, 0.80);
    const auto report =
        run_pipeline(load_config(postest::load_json(postest::data_path("worked_example.json"))), {StopAfter::Final, "", false});
    const double fin = report["stages"]["final_pos"]["p"];
    o.detail << "final_pos(0.48,0.80)=" << f << " pipeline=" << fin << " sig="
             << report["stages"]["significance"]["p"].get<double>() << " eff="
             << report["stages"]["efficacy_success"]["p"].get<double>() << " ";
    o.expect(std::fabs(f - 0.384) < 1e-12, "0.384");
    o.expect(std::fabs(fin - 0.38) <= 0.02, "pipeline 0.38 +/- 0.02");
    const double targets[2][3] = {{-0.44, -0.23, -0.07}, {-0.30, -0.14, 0.02}};
    const char* keys[3] = {"q10", "q50", "q90"};
    for (int e = 0; e < 2; ++e)
        for (int k = 0; k < 3; ++k) {
            const double q = report["bridge"]["targets"][e]["quantiles"][keys[k]];
            o.detail << q << (k < 2 ? "/" : " ");
            o.expect(std::fabs(q - targets[e][k]) <= 0.03, std::string("marginal ") + keys[k]);
        }
}

void mcmc_oracle(Outcome& o) {
    int checked = 0, failed = 0;
    double worst = 0.0;
    for (double theta_hat : {-0.5, 0.0, 0.5, 1.0, 1.5})
        for (double info : {1.0, 4.0, 16.0})
            for (double omega : {0.2, 0.5, 0.8}) {
                const std::vector<double> tpp{1.0};
                const auto prior = MixturePrior::from_tpp(tpp, omega);
                MetaAnalysisInput in{.studies = {{"s1", {theta_hat}, {info}, std::nullopt}},
                                     .endpoints = {{"p", EndpointKind::ContinuousNormal, Direction::BenefitPositive, 1.0}},
                                     .rho = 0.0,
                                     .kappa = 0.0,
                                     .tau_priors = {HeterogeneityPrior::from_scale(0.0)},
                                     .mu_prior = prior};
                McmcConfig cfg;
                cfg.chains = 4;
                cfg.warmup = 2000;
                cfg.keep = 5000;
                cfg.seed = 1000 + static_cast<std::uint64_t>(checked);
                const auto draws = fit(in, cfg, {.max_rhat = 1.05, .min_ess = 400.0, .sample_study_effects = false});
                const auto oracle = oracle_posterior_mixture(theta_hat, info, prior);
                const auto mu = draws.mu_column(0);
                const double m = mean(mu), v = variance(mu), sd = std::sqrt(v);
                double m4 = 0.0;
                for (double x : mu) m4 += std::pow(x - m, 4);
                m4 /= static_cast<double>(mu.size());
                const double ess = draws.diagnostics.ess_bulk[0];
                const double se_mean = sd / std::sqrt(ess);
                const double se_sd = std::sqrt(std::max(m4 - v * v, 0.0) / ess) / (2.0 * sd);
                const double zm = std::fabs(m - oracle.mean()) / se_mean;
                const double zs = std::fabs(sd - oracle.sd()) / se_sd;
                worst = std::max({worst, zm, zs});
                if (zm > 3.0 || zs > 3.0) {
                    ++failed;
                    o.detail << "(theta_hat=" << theta_hat << " I=" << info << " omega=" << omega << " z_mean=" << zm
                             << " z_sd=" << zs << ") ";
                }
                ++checked;
            }
    o.detail << checked << " grid points, worst |z|=" << worst << " ";
    o.expect(failed == 0, "oracle grid within 3 MC se");

    double max_rhat = 0.0;
    for (const char* name : {"worked_example.json", "binary_example.json"}) {
        const auto r = run_pipeline(load_config(postest::load_json(postest::data_path(name))), {StopAfter::Fit, "", false});
        std::function<void(const json&)> scan = [&](const json& j) {
            if (j.is_object()) {
                if (j.contains("split_rhat")) max_rhat = std::max(max_rhat, j["split_rhat"].get<double>());
                for (const auto& [_, v] : j.items()) scan(v);
            } else if (j.is_array()) {
                for (const auto& v : j) scan(v);
            }
        };
        scan(r["posterior"]["diagnostics"]);
    }
    o.detail << "max split R-hat on fixtures=" << max_rhat << " ";
    o.expect(max_rhat < 1.01, "split R-hat < 1.01 on shipped fixtures");
}

MapDraws fixed_map(std::size_t rows, std::vector<double> theta) {
    MapDraws m;
    m.rows = rows;
    m.trials = 1;
    m.endpoints = theta.size();
    for (std::size_t r = 0; r < rows; ++r)
        for (double t : theta) m.theta3.push_back(t);
    m.tau3.assign(rows * theta.size(), 0.0);
    return m;
}

void simulation_oracle(Outcome& o) {
    const std::size_t n = 100000;
    const std::vector<EndpointSpec> one{{"p", EndpointKind::ContinuousNormal, Direction::BenefitPositive, 0.2}};
    const SuccessRule sig{{0}, {}, {}};
    int points = 0, failed = 0;
    std::uint64_t seed = 1;
    for (double theta : {0.0, 0.1, 0.2, 0.3, 0.5})
        for (double alpha : {0.01, 0.025, 0.05, 0.1}) {
            const auto out = simulate_program(fixed_map(n, {theta}), {{"III", {100.0}, {alpha}}}, sig, one, 0.0, seed++);
            const double p = analytic_power(theta, 100.0, alpha);
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
            if (std::fabs(out.significance.p - p) > 3.0 * se) ++failed;
            ++points;
        }
    o.detail << points << " power points, " << failed << " outside 3 se; ";
    o.expect(failed == 0, "simulated power vs analytic");

    const std::vector<EndpointSpec> two{one[0], {"s", EndpointKind::ContinuousNormal, Direction::BenefitPositive, 0.2}};
    const SuccessRule both{{0, 1}, {}, {}};
    double worst_kappa = 0.0;
    for (double kappa : {-0.5, 0.0, 0.3, 0.6}) {
        const auto out = simulate_program(fixed_map(400000, {0.0, 0.0}), {{"III", {100.0, 100.0}, {0.4999999, 0.4999999}}},
                                          both, two, kappa, seed++);
        const double est = std::sin(2.0 * M_PI * (out.significance.p - 0.25));
        worst_kappa = std::max(worst_kappa, std::fabs(est - kappa));
    }
    o.detail << "kappa recovery error=" << worst_kappa << "; ";
    o.expect(worst_kappa <= 0.02, "kappa within 0.02");

    const double theta = 0.2, info = 30.0, alpha = 0.05, c = normal_quantile(1.0 - alpha);
    RngStream r(17, 1);
    double sum = 0.0, sum2 = 0.0;
    std::size_t kept = 0;
    for (int i = 0; i < 1000000; ++i) {
        const double est = theta + r.normal() / std::sqrt(info);
        if (est * std::sqrt(info) > c) {
            sum += est - theta;
            sum2 += (est - theta) * (est - theta);
            ++kept;
        }
    }
    const double m = sum / kept, se = std::sqrt((sum2 / kept - m * m) / kept);
    const double bias = conditional_mle_bias(theta, info, alpha);
    o.detail << "bias formula=" << bias << " simulated=" << m << " ";
    o.expect(std::fabs(m - bias) < 3.0 * se, "truncation bias within 3 se");
}

void properties(Outcome& o) {
    for (const auto& r : postest::all_properties(1000, 2024)) {
        o.detail << r.name << " " << r.cases - r.failures << "/" << r.cases << "; ";
        o.expect(r.ok() && r.cases >= 1000, r.name + (r.first_failure.empty() ? "" : ": " + r.first_failure));
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"calibration reproduction", calibration},
        {"no-SSE reproduction", no_sse},
        {"efficacy benchmark decomposition", efficacy},
        {"MAP predictive probability", map_predictive},
        {"conditional PoS consistency", conditional},
        {"end-to-end worked example", end_to_end},
        {"MCMC oracle suite", mcmc_oracle},
        {"simulation oracle suite", simulation_oracle},
        {"property suites", properties},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[threw: " << e.what() << "] ";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %zu: %s (%.2fs) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
