#include "pos/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/model.hpp"
#include "pos/parallel.hpp"
#include "pos/quadrature.hpp"
#include "pos/rng.hpp"

namespace pos {

void CalibrationStage::validate() const {
    require(trials >= 1, ErrorKind::Configuration, "calibration stage '" + phase + "': trials must be >= 1");
    require(alpha > 0.0 && alpha < 0.5, ErrorKind::Domain,
            "calibration stage '" + phase + "': alpha must lie in (0, 0.5)");
    require(power > 0.0 && power < 1.0, ErrorKind::Domain,
            "calibration stage '" + phase + "': power must lie in (0, 1)");
}

StandardProgramSpec StandardProgramSpec::standard(bool oncology, bool accelerated) {
    StandardProgramSpec s;
    if (accelerated) s.stages.push_back({"IIa", 1, 0.1, 0.8, false});
    s.stages.push_back({"IIb", 1, 0.05, 0.8, false});
    s.stages.push_back({"III", oncology ? 1 : 2, 0.025, 0.9, true});
    return s;
}

void StandardProgramSpec::validate() const {
    require(!stages.empty(), ErrorKind::Configuration, "calibration: program has no stages");
    for (const auto& st : stages) st.validate();
}

double design_information(double delta, double alpha, double power) {
    require(delta != 0.0 && std::isfinite(delta), ErrorKind::Domain,
            "design information: delta must be non-zero");
    const double z = normal_quantile(1.0 - alpha) + normal_quantile(power);
    return z * z / (delta * delta);
}

double program_success_given_effect(double mu, const StandardProgramSpec& program, double delta) {
    double p = 1.0;
    for (const auto& st : program.stages) {
        const double info = design_information(delta, st.alpha, st.power);
        const double one = normal_cdf(mu * std::sqrt(info) - normal_quantile(1.0 - st.alpha));
        p *= std::pow(one, st.trials);
    }
    return p;
}

double component_success_probability(double mean, double sd, const StandardProgramSpec& program,
                                     double delta, double abs_tol) {
    program.validate();
    require(sd > 0.0, ErrorKind::Domain, "calibration: component sd must be > 0");
    const double d = std::fabs(delta);
    // Precompute per-stage sqrt(I) and critical values; the integrand is hot.
    struct Term { double root_info, crit; int trials; };
    std::vector<Term> terms;
    for (const auto& st : program.stages)
        terms.push_back({std::sqrt(design_information(d, st.alpha, st.power)),
                         normal_quantile(1.0 - st.alpha), st.trials});
    auto f = [&](double mu) {
        double p = normal_pdf(mu, mean, sd);
        for (const auto& t : terms) p *= std::pow(normal_cdf(mu * t.root_info - t.crit), t.trials);
        return p;
    };
    return integrate(f, mean - 8.0 * sd, mean + 8.0 * sd, abs_tol, 1e-12, 2000).value;
}

namespace {

std::string bounds_message(double target, double a, double b) {
    std::ostringstream os;
    os.precision(6);
    os << "calibration target " << target << " outside the attainable range [" << std::min(a, b)
       << ", " << std::max(a, b) << "] (null-component success " << a << ", TPP-component success "
       << b << ")";
    return os.str();
}

}  // namespace

CalibrationResult calibrate_omega_single(double target, const StandardProgramSpec& program,
                                         double delta, double abs_tol) {
    require(target > 0.0 && target < 1.0, ErrorKind::Domain, "calibration target must lie in (0, 1)");
    const double d = std::fabs(delta);
    const double sd = solve_component_sd(d);
    CalibrationResult r;
    r.method = "quadrature";
    r.target = target;
    r.component_sd = sd;
    r.null_success = component_success_probability(0.0, sd, program, d, abs_tol);
    r.tpp_success = component_success_probability(d, sd, program, d, abs_tol);
    const double a = r.null_success, b = r.tpp_success;
    require(std::fabs(a - b) > 1e-12, ErrorKind::IllConditionedCalibration,
            "calibration: null and TPP components give the same success probability");
    if (target < std::min(a, b) || target > std::max(a, b))
        fail(ErrorKind::InfeasibleCalibration, bounds_message(target, a, b));
    r.omega = std::clamp((target - b) / (a - b), 0.0, 1.0);
    return r;
}

CalibrationResult calibrate_omega_mc(double target, const TwoEndpointCalibrationSpec& spec,
                                     std::size_t draws, std::uint64_t seed) {
    require(target > 0.0 && target < 1.0, ErrorKind::Domain, "calibration target must lie in (0, 1)");
    require(draws >= 100000, ErrorKind::Configuration, "calibration: at least 1e5 Monte Carlo draws required");
    spec.program.validate();
    require(std::fabs(spec.rho) <= 1.0 && std::fabs(spec.kappa) <= 1.0, ErrorKind::Domain,
            "calibration: |rho| and |kappa| must be <= 1");
    for (int e = 0; e < 2; ++e) {
        require(spec.delta[e] > 0.0, ErrorKind::Domain, "calibration: TPP thresholds must be benefit-positive");
        require(spec.unit_info_sd[e] > 0.0, ErrorKind::Domain, "calibration: unit-information sd must be > 0");
    }

    // Which endpoints a stage tests, and their informations.
    const auto& uisd = spec.unit_info_sd;
    const int small_info = uisd[1] > uisd[0] ? 1 : 0;  // larger sd = smaller information at equal n
    struct Stage {
        int trials;
        std::array<bool, 2> tested;
        bool either;
        std::array<double, 2> root_info;
        std::array<double, 2> crit;
    };
    std::vector<Stage> stages;
    for (const auto& st : spec.program.stages) {
        Stage s{};
        s.trials = st.trials;
        s.either = false;
        double n = 0.0;
        if (st.pivotal) {
            for (int e = 0; e < 2; ++e) {
                const double a = spec.pivotal_alpha_override[e] > 0.0 ? spec.pivotal_alpha_override[e] : st.alpha;
                s.tested[e] = a < 1.0;
                s.crit[e] = a < 1.0 ? normal_quantile(1.0 - a) : -INFINITY;
                if (s.tested[e]) {
                    const double i_e = design_information(spec.delta[e], a, st.power);
                    n = std::max(n, i_e * uisd[e] * uisd[e]);
                }
            }
            require(n > 0.0, ErrorKind::Configuration, "calibration: pivotal stage tests no endpoint");
        } else {
            s.either = spec.phase2_either;
            for (int e = 0; e < 2; ++e) {
                s.tested[e] = spec.phase2_either || e == small_info;
                s.crit[e] = normal_quantile(1.0 - st.alpha);
            }
            n = design_information(spec.delta[small_info], st.alpha, st.power) * uisd[small_info] * uisd[small_info];
        }
        for (int e = 0; e < 2; ++e) s.root_info[e] = std::sqrt(n) / uisd[e];
        stages.push_back(s);
    }

    const double sd0 = solve_component_sd(spec.delta[0]);
    const double sd1 = solve_component_sd(spec.delta[1]);
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
    const double kap_c = std::sqrt(std::max(0.0, 1.0 - spec.kappa * spec.kappa));
    const RngStream root = stage_stream(seed, streams::kCalibration);

    auto run_component = [&](int component) {
        const RngStream base = root.child(static_cast<std::uint64_t>(component));
        const double m0 = component == 0 ? 0.0 : spec.delta[0];
        const double m1 = component == 0 ? 0.0 : spec.delta[1];
        std::atomic<std::size_t> hits{0};
        parallel_for(draws, [&](std::size_t begin, std::size_t end) {
            std::size_t local = 0;
            for (std::size_t i = begin; i < end; ++i) {
                RngStream rng = base.child(i);
                const double u0 = rng.normal(), u1 = rng.normal();
                const double mu0 = m0 + sd0 * u0;
                const double mu1 = m1 + sd1 * (spec.rho * u0 + rho_c * u1);
                bool ok = true;
                for (const auto& s : stages) {
                    for (int k = 0; k < s.trials && ok; ++k) {
                        // Standardised statistics z_e = mu_e sqrt(I_e) + error.
                        const double e0 = rng.normal(), e1 = rng.normal();
                        const double z0 = mu0 * s.root_info[0] + e0;
                        const double z1 = mu1 * s.root_info[1] + spec.kappa * e0 + kap_c * e1;
                        const bool p0 = z0 > s.crit[0], p1 = z1 > s.crit[1];
                        if (s.either) ok = (s.tested[0] && p0) || (s.tested[1] && p1);
                        else ok = (!s.tested[0] || p0) && (!s.tested[1] || p1);
                    }
                    if (!ok) break;
                }
                local += ok ? 1 : 0;
            }
            hits += local;
        });
        return static_cast<double>(hits.load()) / static_cast<double>(draws);
    };

    CalibrationResult r;
    r.method = "monte-carlo";
    r.target = target;
    r.draws = draws;
    r.null_success = run_component(0);
    r.tpp_success = run_component(1);
    const double a = r.null_success, b = r.tpp_success;
    const double n = static_cast<double>(draws);
    r.null_success_se = std::sqrt(a * (1.0 - a) / n);
    r.tpp_success_se = std::sqrt(b * (1.0 - b) / n);
    const double combined = std::hypot(r.null_success_se, r.tpp_success_se);
    if (!(std::fabs(a - b) >= 5.0 * combined)) {
        std::ostringstream os;
        os << "calibration: null and TPP success probabilities (" << a << ", " << b
           << ") are within 5 Monte Carlo standard errors";
        fail(ErrorKind::IllConditionedCalibration, os.str());
    }
    const double diff = a - b;
    const double raw = (target - b) / diff;
    const double d_a = -(target - b) / (diff * diff);
    const double d_b = (target - a) / (diff * diff);
    r.omega_se = std::sqrt(d_a * d_a * r.null_success_se * r.null_success_se +
                           d_b * d_b * r.tpp_success_se * r.tpp_success_se);
    r.omega = std::clamp(raw, 0.0, 1.0);
    return r;
}

double downweight_tpp(double omega, double multiplier) {
    require(multiplier > 0.0 && multiplier <= 1.0, ErrorKind::Domain,
            "downweighting multiplier must lie in (0, 1]");
    require(omega >= 0.0 && omega <= 1.0, ErrorKind::Domain, "omega must lie in [0, 1]");
    if (omega == 0.0) return 0.0;
    return omega / (omega + (1.0 - omega) * multiplier);
}

}  // namespace pos
