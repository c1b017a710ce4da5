#pragma once

// Calibration of the null-component weight omega of the mixture prior so that
// the prior probability of efficacy success in a standard development program
// equals a benchmark target. No between-study heterogeneity enters here.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pos {

struct CalibrationStage {
    std::string phase;
    int trials = 1;
    double alpha = 0.025;  // one-sided
    double power = 0.9;    // design power at the TPP threshold
    bool pivotal = false;  // every tested endpoint must be significant

    void validate() const;
};

struct StandardProgramSpec {
    std::vector<CalibrationStage> stages;

    // IIb (1 trial, 0.05, 0.8) then III (2 trials, or 1 for oncology, 0.025, 0.9).
    // `accelerated` prepends IIa (1 trial, 0.1, 0.8).
    static StandardProgramSpec standard(bool oncology, bool accelerated);
    void validate() const;
};

// {Phi^-1(1 - alpha) + Phi^-1(power)}^2 / delta^2.
double design_information(double delta, double alpha, double power);

// Probability that a program with true effect mu (internal scale) passes every
// stage when each trial is sized for `delta`: prod_s Phi(mu sqrt(I_s) - c_s)^trials_s.
double program_success_given_effect(double mu, const StandardProgramSpec& program, double delta);

// Integral of program_success_given_effect against N(mean, sd^2), over mean +/- 8 sd.
double component_success_probability(double mean, double sd, const StandardProgramSpec& program,
                                     double delta, double abs_tol = 1e-10);

struct CalibrationResult {
    double omega = 0.0;
    double null_success = 0.0;  // A
    double tpp_success = 0.0;   // B
    double target = 0.0;
    double omega_se = 0.0;      // Monte Carlo only
    double null_success_se = 0.0;
    double tpp_success_se = 0.0;
    double component_sd = 0.0;  // single endpoint only
    std::size_t draws = 0;
    std::string method;  // "quadrature" or "monte-carlo"
};

// omega = (target - B) / (A - B). Throws InfeasibleCalibration (with both
// bounds in the message) when the target lies outside [min(A,B), max(A,B)].
CalibrationResult calibrate_omega_single(double target, const StandardProgramSpec& program,
                                         double delta, double abs_tol = 1e-10);

struct TwoEndpointCalibrationSpec {
    StandardProgramSpec program;
    std::array<double, 2> delta{};          // TPP thresholds, internal scale
    std::array<double, 2> unit_info_sd{1.0, 1.0};
    double rho = 0.0;    // correlation of mu components; |rho| <= 1
    double kappa = 0.0;  // correlation of estimate errors within a trial
    // Non-pivotal stages test either endpoint instead of only the endpoint
    // with the smaller information at equal sample size.
    bool phase2_either = false;
    // Per-endpoint alpha override for pivotal stages; 1 means always passes.
    std::array<double, 2> pivotal_alpha_override{0.0, 0.0};
};

// Monte Carlo version for two endpoints. Â and B̂ use `draws` samples each;
// the omega standard error is by the delta method. omega is clamped to [0, 1].
// Throws IllConditionedCalibration when |Â - B̂| < 5 combined standard errors.
CalibrationResult calibrate_omega_mc(double target, const TwoEndpointCalibrationSpec& spec,
                                     std::size_t draws, std::uint64_t seed);

// omega / (omega + (1 - omega) m): the TPP component weight scaled by m and
// the pair renormalised.
double downweight_tpp(double omega, double multiplier);

}  // namespace pos
