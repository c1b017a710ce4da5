#include "pos/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "pos/distributions.hpp"
#include "pos/error.hpp"

namespace pos {

const std::map<std::string, std::vector<std::string>>& feature_vocabulary() {
    static const std::map<std::string, std::vector<std::string>> vocab = {
        {"disease_area",
         {"allergy-respiratory", "immunology", "cardiovascular-metabolic-renal", "endocrine",
          "haematology", "infectious-diseases", "neurology", "oncology", "ophthalmology",
          "psychiatry", "others"}},
        {"molecule", {"small-molecule", "protein-antibody", "protein-other", "other"}},
        {"target", {"receptor", "enzyme", "other"}},
        {"route", {"oral", "intramuscular", "intravenous", "subcutaneous", "topical", "other"}},
        {"sponsor_top20", {"yes", "no"}},
        {"lifecycle_class", {"new-molecular-entity", "lifecycle-management", "biosimilar"}},
        {"breakthrough", {"yes", "no"}},
        {"special_protocol", {"yes", "no"}},
    };
    return vocab;
}

bool is_flag_feature(const std::string& feature) { return feature == "target" || feature == "route"; }

namespace {

bool known_level(const std::string& feature, const std::string& level) {
    const auto& vocab = feature_vocabulary();
    const auto it = vocab.find(feature);
    if (it == vocab.end()) return false;
    return std::find(it->second.begin(), it->second.end(), level) != it->second.end();
}

std::pair<std::string, std::string> split_key(const std::string& key) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) fail(ErrorKind::Schema, "coefficient key '" + key + "' is not feature.level");
    return {key.substr(0, dot), key.substr(dot + 1)};
}

}  // namespace

ProgramFeatures ProgramFeatures::from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Schema, "program features must be an object");
    ProgramFeatures f;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            f.levels[key] = {value.get<std::string>()};
        } else if (value.is_boolean()) {
            f.levels[key] = {value.get<bool>() ? "yes" : "no"};
        } else if (value.is_array()) {
            auto& v = f.levels[key];
            for (const auto& x : value) {
                require(x.is_string(), ErrorKind::Schema, "feature '" + key + "': levels must be strings");
                v.push_back(x.get<std::string>());
            }
        } else {
            fail(ErrorKind::Schema, "feature '" + key + "': expected a level, list of levels or boolean");
        }
    }
    f.validate();
    return f;
}

void ProgramFeatures::validate() const {
    for (const auto& [feature, lv] : levels) {
        require(feature_vocabulary().count(feature) == 1, ErrorKind::Schema,
                "unknown program feature '" + feature + "'");
        require(!lv.empty(), ErrorKind::Schema, "feature '" + feature + "' has no level");
        require(lv.size() == 1 || is_flag_feature(feature), ErrorKind::Schema,
                "feature '" + feature + "' takes exactly one level");
        for (const auto& l : lv)
            require(known_level(feature, l), ErrorKind::Schema,
                    "unknown level '" + l + "' for feature '" + feature + "'");
    }
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Schema, "logistic model must be an object");
    for (const auto& [key, _] : j.items())
        require(key == "intercept" || key == "coefficients" || key == "reference_levels",
                ErrorKind::Schema, "logistic model: unknown key '" + key + "'");
    require(j.contains("intercept") && j["intercept"].is_number(), ErrorKind::Schema,
            "logistic model: numeric 'intercept' required");
    LogisticModel m;
    m.intercept = j["intercept"].get<double>();
    if (j.contains("coefficients")) {
        require(j["coefficients"].is_object(), ErrorKind::Schema, "logistic model: 'coefficients' must be an object");
        for (const auto& [key, v] : j["coefficients"].items()) {
            require(v.is_number(), ErrorKind::Schema, "coefficient '" + key + "' must be numeric");
            const auto [feature, level] = split_key(key);
            require(known_level(feature, level), ErrorKind::Schema, "coefficient '" + key + "' names an unknown feature or level");
            m.coefficients[key] = v.get<double>();
        }
    }
    if (j.contains("reference_levels")) {
        require(j["reference_levels"].is_object(), ErrorKind::Schema,
                "logistic model: 'reference_levels' must be an object");
        for (const auto& [feature, v] : j["reference_levels"].items()) {
            require(v.is_string() && known_level(feature, v.get<std::string>()), ErrorKind::Schema,
                    "reference level for '" + feature + "' is unknown");
            m.reference_levels[feature] = v.get<std::string>();
        }
    }
    return m;
}

double eval_logistic(const ProgramFeatures& features, const LogisticModel& model) {
    features.validate();
    std::map<std::string, bool> used;
    for (const auto& [key, _] : model.coefficients) used[split_key(key).first] = true;
    for (const auto& [feature, _] : model.reference_levels) used[feature] = true;

    double eta = model.intercept;
    for (const auto& [feature, _] : used) {
        const auto it = features.levels.find(feature);
        require(it != features.levels.end(), ErrorKind::Schema,
                "logistic model uses feature '" + feature + "' which the program does not supply");
        for (const auto& level : it->second) {
            const auto c = model.coefficients.find(feature + "." + level);
            if (c != model.coefficients.end()) {
                eta += c->second;
                continue;
            }
            const auto ref = model.reference_levels.find(feature);
            const bool is_reference = ref != model.reference_levels.end() && ref->second == level;
            // Binary features coded "no" and unset flags contribute nothing.
            const bool implicit_zero = level == "no";
            require(is_reference || implicit_zero, ErrorKind::Schema,
                    "no coefficient for '" + feature + "." + level + "'");
        }
    }
    return expit(eta);
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::IIa: return "IIa";
        case Stage::IIb: return "IIb";
        case Stage::III: return "III";
        case Stage::Submission: return "submission";
    }
    return "?";
}

SseStratum parse_sse_stratum(std::string_view s) {
    if (s == "non-oncology") return SseStratum::NonOncology;
    if (s == "oncology") return SseStratum::Oncology;
    fail(ErrorKind::Schema, "unknown SSE stratum '" + std::string(s) + "'");
}

std::string_view to_string(SseStratum s) {
    return s == SseStratum::Oncology ? "oncology" : "non-oncology";
}

SseTable SseTable::defaults(SseStratum stratum) {
    return stratum == SseStratum::Oncology ? SseTable{0.093, 0.01} : SseTable{0.101, 0.15};
}

double SseTable::given_fail(Stage s) const {
    switch (s) {
        case Stage::IIa:
        case Stage::IIb: return phase2;
        case Stage::III: return phase3;
        case Stage::Submission: break;
    }
    fail(ErrorKind::Domain, "no SSE benchmark for the submission stage");
}

static void require_prob(double p, const char* what, bool allow_one, bool allow_zero = false) {
    const bool lower = allow_zero ? p >= 0.0 : p > 0.0;
    require(lower && (allow_one ? p <= 1.0 : p < 1.0), ErrorKind::Domain,
            std::string(what) + " must lie in " + (allow_zero ? "[0, " : "(0, ") + (allow_one ? "1]" : "1)"));
}

double efficacy_success_benchmark(double p_success, double p_sse_given_fail) {
    require_prob(p_success, "success probability", true);
    require_prob(p_sse_given_fail, "P{SSE | fail}", false, true);
    return 1.0 - (1.0 - p_success) * (1.0 - p_sse_given_fail);
}

double prob_no_sse(double p_success_phase3, double p_sse_given_fail) {
    require_prob(p_success_phase3, "success probability", true);
    require_prob(p_sse_given_fail, "P{SSE | fail}", true, true);
    return 1.0 - (1.0 - p_success_phase3) * p_sse_given_fail;
}

double phase2b_split(double p_phase2) {
    require_prob(p_phase2, "phase II benchmark", true);
    return std::sqrt(p_phase2);
}

double BenchmarkSet::efficacy_product(bool accelerated) const {
    return (accelerated ? p_efficacy_2a : 1.0) * p_efficacy_2b * p_efficacy_3;
}

BenchmarkSet derive_benchmarks(double p_phase2, double p_phase3, double p_submission,
                               const SseTable& sse, std::string provenance) {
    BenchmarkSet b;
    b.provenance = std::move(provenance);
    b.p_success_2a = b.p_success_2b = phase2b_split(p_phase2);
    b.p_success_3 = p_phase3;
    b.p_submission = p_submission;
    b.p_efficacy_2a = b.p_efficacy_2b = efficacy_success_benchmark(b.p_success_2b, sse.phase2);
    b.p_efficacy_3 = efficacy_success_benchmark(p_phase3, sse.phase3);
    b.p_no_sse_2a = b.p_no_sse_2b = prob_no_sse(b.p_success_2b, sse.phase2);
    b.p_no_sse_3 = prob_no_sse(p_phase3, sse.phase3);
    return b;
}

BenchmarkSet evaluate_benchmarks(const ProgramFeatures& features, const nlohmann::json& coefficients,
                                 const SseTable& sse) {
    require(coefficients.is_object(), ErrorKind::Schema, "coefficient document must be an object");
    for (const auto& [key, _] : coefficients.items())
        require(key == "phase2" || key == "phase3" || key == "submission" || key == "note" || key == "version",
                ErrorKind::Schema, "coefficient document: unknown key '" + key + "'");
    for (const char* key : {"phase2", "phase3", "submission"})
        require(coefficients.contains(key), ErrorKind::Schema,
                std::string("coefficient document: missing model '") + key + "'");
    const double p2 = eval_logistic(features, LogisticModel::from_json(coefficients["phase2"]));
    const double p3 = eval_logistic(features, LogisticModel::from_json(coefficients["phase3"]));
    const double ps = eval_logistic(features, LogisticModel::from_json(coefficients["submission"]));
    return derive_benchmarks(p2, p3, ps, sse, "evaluated-from-coefficients");
}

}  // namespace pos
