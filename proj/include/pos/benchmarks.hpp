#pragma once

// Industry benchmark algebra: evaluation of supplied logistic models,
// efficacy-success decomposition and the probability of no safety
// showstopper event (SSE).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace pos {

// Categorical features hold one level; flag features (target, route) may hold
// several. Binary features use the levels "yes" / "no".
struct ProgramFeatures {
    std::map<std::string, std::vector<std::string>> levels;

    static ProgramFeatures from_json(const nlohmann::json& j);
    void validate() const;
};

// Vocabulary of recognised features and their levels.
const std::map<std::string, std::vector<std::string>>& feature_vocabulary();
bool is_flag_feature(const std::string& feature);

struct LogisticModel {
    double intercept = 0.0;
    std::map<std::string, double> coefficients;  // "feature.level" -> value
    std::map<std::string, std::string> reference_levels;  // feature -> level absorbed by intercept

    static LogisticModel from_json(const nlohmann::json& j);
};

// expit(intercept + sum of coefficients of active levels). Every active level
// of a feature the model uses needs a coefficient or must be that feature's
// reference level; coefficients must name known features and levels.
double eval_logistic(const ProgramFeatures& features, const LogisticModel& model);

enum class Stage { IIa, IIb, III, Submission };
std::string_view to_string(Stage s);

enum class SseStratum { NonOncology, Oncology };
SseStratum parse_sse_stratum(std::string_view s);
std::string_view to_string(SseStratum s);

// P{SSE | fail in phase}. Phase II values apply to IIa and IIb alike.
struct SseTable {
    double phase2 = 0.101;
    double phase3 = 0.15;

    static SseTable defaults(SseStratum stratum);
    double given_fail(Stage s) const;
};

// 1 - (1 - p_success) (1 - p_sse_given_fail).
double efficacy_success_benchmark(double p_success, double p_sse_given_fail);

// 1 - (1 - p_success) p_sse_given_fail.
double prob_no_sse(double p_success_phase3, double p_sse_given_fail);

// sqrt(p): phase IIb share of a phase II benchmark.
double phase2b_split(double p_phase2);

struct BenchmarkSet {
    // Indexed by Stage. Submission has no efficacy / SSE entries.
    double p_success_2a = 0.0, p_success_2b = 0.0, p_success_3 = 0.0, p_submission = 0.0;
    double p_efficacy_2a = 0.0, p_efficacy_2b = 0.0, p_efficacy_3 = 0.0;
    double p_no_sse_2a = 0.0, p_no_sse_2b = 0.0, p_no_sse_3 = 0.0;
    std::string provenance;  // "evaluated-from-coefficients" or "user-supplied"

    // Calibration target: product of efficacy benchmarks over the listed stages.
    double efficacy_product(bool accelerated) const;
};

// Fills every derived entry from per-stage success probabilities.
BenchmarkSet derive_benchmarks(double p_phase2, double p_phase3, double p_submission,
                               const SseTable& sse, std::string provenance);

// Coefficient document: {"phase2": model, "phase3": model, "submission": model}
// where each model is {"intercept": x, "coefficients": {...}, "reference_levels": {...}}.
BenchmarkSet evaluate_benchmarks(const ProgramFeatures& features, const nlohmann::json& coefficients,
                                 const SseTable& sse);

}  // namespace pos
