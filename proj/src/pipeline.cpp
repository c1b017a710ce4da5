#include "pos/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pos/distributions.hpp"
#include "pos/error.hpp"
#include "pos/map_predictive.hpp"
#include "pos/meta_analysis.hpp"
#include "pos/stats.hpp"

namespace pos {

using nlohmann::json;

namespace {

// Collects "path: message" errors while walking the config document.
class Checker {
public:
    std::vector<std::string> errors;

    void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    void allowed_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        for (const auto& [k, _] : obj.items()) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) error(path + "." + k, "unknown field");
        }
    }

    const json* get(const json& obj, const std::string& path, const char* key, bool required) {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) error(path + "." + key, "missing required field");
            return nullptr;
        }
        return &*it;
    }

    std::optional<double> number(const json& obj, const std::string& path, const char* key, bool required,
                                 double lo = -INFINITY, double hi = INFINITY, bool lo_open = false,
                                 bool hi_open = false) {
        const json* v = get(obj, path, key, required);
        if (!v) return std::nullopt;
        return check_number(*v, path + "." + key, lo, hi, lo_open, hi_open);
    }

    std::optional<double> check_number(const json& v, const std::string& p, double lo = -INFINITY,
                                       double hi = INFINITY, bool lo_open = false, bool hi_open = false) {
        if (!v.is_number()) {
            error(p, "expected a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        const bool below = lo_open ? !(x > lo) : !(x >= lo);
        const bool above = hi_open ? !(x < hi) : !(x <= hi);
        if (!std::isfinite(x) || below || above) {
            std::ostringstream os;
            os << "value " << x << " out of range " << (lo_open ? "(" : "[") << lo << ", " << hi
               << (hi_open ? ")" : "]");
            error(p, os.str());
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::string> string(const json& obj, const std::string& path, const char* key, bool required) {
        const json* v = get(obj, path, key, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            error(path + "." + key, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& path, const char* key) {
        const json* v = get(obj, path, key, false);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) {
            error(path + "." + key, "expected true or false");
            return std::nullopt;
        }
        return v->get<bool>();
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& path, const char* key,
                                               bool required, std::size_t size, double lo = -INFINITY,
                                               double hi = INFINITY, bool lo_open = false, bool hi_open = false) {
        const json* v = get(obj, path, key, required);
        if (!v) return std::nullopt;
        const std::string p = path + "." + key;
        if (!v->is_array() || (size > 0 && v->size() != size)) {
            error(p, size > 0 ? "expected an array of " + std::to_string(size) + " numbers" : "expected an array");
            return std::nullopt;
        }
        std::vector<double> out;
        bool ok = true;
        for (std::size_t i = 0; i < v->size(); ++i) {
            auto x = check_number((*v)[i], p + "[" + std::to_string(i) + "]", lo, hi, lo_open, hi_open);
            ok = ok && x.has_value();
            out.push_back(x.value_or(0.0));
        }
        if (!ok) return std::nullopt;
        return out;
    }

    // Runs a library constructor, turning its Error into a path-tagged entry.
    template <class F>
    auto attempt(const std::string& path, F&& f) -> std::optional<decltype(f())> {
        try {
            return f();
        } catch (const Error& e) {
            error(path, e.what());
            return std::nullopt;
        } catch (const json::exception& e) {
            error(path, e.what());
            return std::nullopt;
        }
    }
};

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::optional<json> load_json(Checker& c, const std::string& path, const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        c.error(path, "cannot open file '" + file.string() + "'");
        return std::nullopt;
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        c.error(path, "invalid JSON in '" + file.string() + "': " + e.what());
        return std::nullopt;
    }
}

// Inline object, or a path string resolved against base_dir.
std::optional<json> object_or_file(Checker& c, const json& v, const std::string& path,
                                   const std::filesystem::path& base) {
    if (v.is_object()) return v;
    if (v.is_string()) return load_json(c, path, base / v.get<std::string>());
    c.error(path, "expected an object or a file path");
    return std::nullopt;
}

std::optional<EndpointSpec> parse_endpoint(Checker& c, const json& e, const std::string& p, Nuisance* nuisance) {
    if (!e.is_object()) {
        c.error(p, "expected an object");
        return std::nullopt;
    }
    c.allowed_keys(e, p, {"id", "kind", "direction", "tpp_threshold", "response_sd", "event_prob"});
    EndpointSpec spec;
    bool ok = true;
    if (auto id = c.string(e, p, "id", true)) spec.id = *id; else ok = false;
    if (auto k = c.string(e, p, "kind", true)) {
        if (auto v = c.attempt(p + ".kind", [&] { return parse_endpoint_kind(*k); })) spec.kind = *v; else ok = false;
    } else {
        ok = false;
    }
    if (auto d = c.string(e, p, "direction", true)) {
        if (auto v = c.attempt(p + ".direction", [&] { return parse_direction(*d); })) spec.direction = *v; else ok = false;
    } else {
        ok = false;
    }
    if (auto t = c.number(e, p, "tpp_threshold", true)) spec.tpp_threshold = *t; else ok = false;
    if (ok && !c.attempt(p + ".tpp_threshold", [&] { spec.validate(); return true; })) ok = false;
    if (nuisance) {
        if (auto s = c.number(e, p, "response_sd", false, 0.0, INFINITY, true)) nuisance->response_sd = *s;
        if (auto q = c.number(e, p, "event_prob", false, 0.0, 1.0, true, true)) nuisance->event_prob = *q;
    }
    if (!ok) return std::nullopt;
    return spec;
}

std::optional<HeterogeneityPrior> parse_heterogeneity(Checker& c, const json& v, const std::string& p,
                                                      const EndpointSpec* endpoint, const Nuisance* nuisance,
                                                      const CategoryMultipliers& mult) {
    if (!v.is_object()) {
        c.error(p, "expected an object with one of scale, median or category");
        return std::nullopt;
    }
    c.allowed_keys(v, p, {"scale", "median", "category"});
    const int given = v.contains("scale") + v.contains("median") + v.contains("category");
    if (given != 1) {
        c.error(p, "give exactly one of scale, median or category");
        return std::nullopt;
    }
    if (v.contains("scale")) {
        auto z = c.number(v, p, "scale", true, 0.0);
        if (!z) return std::nullopt;
        return HeterogeneityPrior::from_scale(*z);
    }
    if (v.contains("median")) {
        auto m = c.number(v, p, "median", true, 0.0);
        if (!m) return std::nullopt;
        return HeterogeneityPrior::from_median(*m);
    }
    auto cat = c.string(v, p, "category", true);
    if (!cat) return std::nullopt;
    auto category = c.attempt(p + ".category", [&] { return parse_heterogeneity_category(*cat); });
    if (!category) return std::nullopt;
    if (!endpoint || !nuisance) {
        c.error(p + ".category", "category needs an endpoint with nuisance parameters; give scale or median");
        return std::nullopt;
    }
    auto sd = c.attempt(p + ".category", [&] { return unit_information_sd(*endpoint, *nuisance); });
    if (!sd) return std::nullopt;
    return HeterogeneityPrior::from_category(*category, *sd, mult);
}

std::vector<std::size_t> endpoint_indices(Checker& c, const json& arr, const std::string& p,
                                          const std::vector<EndpointSpec>& eps) {
    std::vector<std::size_t> out;
    if (!arr.is_array()) {
        c.error(p, "expected an array of endpoint ids");
        return out;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_string()) {
            c.error(idx(p, i), "expected an endpoint id");
            continue;
        }
        const auto id = arr[i].get<std::string>();
        bool found = false;
        for (std::size_t e = 0; e < eps.size(); ++e)
            if (eps[e].id == id) {
                out.push_back(e);
                found = true;
            }
        if (!found) c.error(idx(p, i), "unknown endpoint '" + id + "'");
    }
    return out;
}

}  // namespace

ValidationResult validate_config(const json& doc, const std::filesystem::path& base_dir) {
    Checker c;
    ValidationResult result;
    if (!doc.is_object()) {
        result.errors.push_back("$: expected a JSON object");
        return result;
    }
    const std::string root = "$";
    c.allowed_keys(doc, root, {"version", "seed", "samples", "mcmc", "endpoints", "studies", "arm_counts", "rho",
                               "kappa", "heterogeneity", "prior", "binary", "benchmarks", "phase3", "bridge",
                               "scorecard", "ep_table", "ep", "approval_anchor_override", "output", "description"});
    PipelineConfig cfg;
    cfg.base_dir = base_dir;

    if (auto v = c.number(doc, root, "version", false, 1, 1)) (void)v;
    if (const json* s = c.get(doc, root, "seed", false)) {
        if (s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0))
            cfg.seed = s->get<std::uint64_t>();
        else
            c.error("$.seed", "expected a non-negative integer");
    }
    if (const json* s = c.get(doc, root, "samples", false)) {
        if (s->is_number_integer() && s->get<long long>() >= 100)
            cfg.samples = s->get<std::size_t>();
        else
            c.error("$.samples", "expected an integer >= 100");
    }

    // MCMC settings.
    cfg.mcmc.chains = 4;
    cfg.mcmc.warmup = 5000;
    if (const json* m = c.get(doc, root, "mcmc", false)) {
        const std::string p = "$.mcmc";
        c.allowed_keys(*m, p, {"chains", "warmup", "thin", "adapt_window", "target_accept", "max_rhat", "min_ess"});
        if (auto v = c.number(*m, p, "chains", false, 2, 64)) cfg.mcmc.chains = static_cast<int>(*v);
        if (auto v = c.number(*m, p, "warmup", false, 100, 1e7)) cfg.mcmc.warmup = static_cast<int>(*v);
        if (auto v = c.number(*m, p, "thin", false, 1, 1000)) cfg.mcmc.thin = static_cast<int>(*v);
        if (auto v = c.number(*m, p, "adapt_window", false, 10, 1e6)) cfg.mcmc.adapt_window = static_cast<int>(*v);
        if (auto v = c.number(*m, p, "target_accept", false, 0.0, 1.0, true, true)) cfg.mcmc.target_accept = *v;
        if (auto v = c.number(*m, p, "max_rhat", false, 1.0)) cfg.fit_options.max_rhat = *v;
        if (auto v = c.number(*m, p, "min_ess", false, 0.0)) cfg.fit_options.min_ess = *v;
    }
    cfg.mcmc.seed = cfg.seed;
    cfg.mcmc.keep = static_cast<int>((cfg.samples + cfg.mcmc.chains - 1) / cfg.mcmc.chains);

    // Phase II endpoints.
    CategoryMultipliers mult;
    bool endpoints_ok = false;
    if (const json* eps = c.get(doc, root, "endpoints", true)) {
        if (!eps->is_array() || eps->empty() || eps->size() > 2) {
            c.error("$.endpoints", "expected an array of 1 or 2 endpoints");
        } else {
            endpoints_ok = true;
            for (std::size_t i = 0; i < eps->size(); ++i) {
                Nuisance n;
                auto e = parse_endpoint(c, (*eps)[i], idx("$.endpoints", i), &n);
                if (!e) {
                    endpoints_ok = false;
                    continue;
                }
                cfg.endpoints.push_back(*e);
                cfg.nuisance.push_back(n);
            }
        }
    }
    const std::size_t d = cfg.endpoints.size();
    bool binary = false;
    if (endpoints_ok) {
        for (const auto& e : cfg.endpoints) binary = binary || e.routes_binary();
        if (binary && d != 1) {
            c.error("$.endpoints", "the binary pathway supports a single endpoint");
            endpoints_ok = false;
        }
        std::set<std::string> ids;
        for (const auto& e : cfg.endpoints)
            if (!ids.insert(e.id).second) c.error("$.endpoints", "duplicate endpoint id '" + e.id + "'");
    }
    cfg.pathway = binary ? Pathway::Binary : Pathway::Continuous;

    if (auto v = c.number(doc, root, "rho", false, -1.0, 1.0, true, true)) cfg.rho = *v;
    if (auto v = c.number(doc, root, "kappa", false, -1.0, 1.0, true, true)) cfg.kappa = *v;
    if (d == 1 && cfg.rho != 0.0) c.error("$.rho", "must be 0 with one endpoint");

    // Data: exactly one of studies / arm_counts.
    const bool has_studies = doc.contains("studies"), has_counts = doc.contains("arm_counts");
    if (has_studies == has_counts) {
        c.error("$", "give exactly one of 'studies' (continuous pathway) or 'arm_counts' (binary pathway)");
    } else if (endpoints_ok && binary != has_counts) {
        c.error(binary ? "$.studies" : "$.arm_counts",
                binary ? "risk-difference endpoints take 'arm_counts'" : "continuous endpoints take 'studies'");
    }
    if (has_studies && endpoints_ok && !binary) {
        const json& st = doc["studies"];
        if (!st.is_array() || st.empty()) c.error("$.studies", "expected a non-empty array");
        else
            for (std::size_t j = 0; j < st.size(); ++j) {
                const std::string p = idx("$.studies", j);
                const json& s = st[j];
                if (!s.is_object()) {
                    c.error(p, "expected an object");
                    continue;
                }
                c.allowed_keys(s, p, {"study_id", "theta_hat", "fisher_info", "se", "kappa"});
                StudyEstimate est;
                est.study_id = c.string(s, p, "study_id", true).value_or("");
                auto th = c.numbers(s, p, "theta_hat", true, d);
                std::optional<std::vector<double>> info;
                if (s.contains("fisher_info") == s.contains("se")) {
                    c.error(p, "give exactly one of fisher_info or se");
                } else if (s.contains("fisher_info")) {
                    info = c.numbers(s, p, "fisher_info", true, d, 0.0, INFINITY, true);
                } else if (auto se = c.numbers(s, p, "se", true, d, 0.0, INFINITY, true)) {
                    info.emplace();
                    for (double x : *se) info->push_back(1.0 / (x * x));
                }
                if (auto k = c.number(s, p, "kappa", false, -1.0, 1.0, true, true)) {
                    if (d != 2) c.error(p + ".kappa", "kappa only applies with two endpoints");
                    est.kappa = *k;
                }
                if (!th || !info) continue;
                for (std::size_t e = 0; e < d; ++e) est.theta_hat.push_back(orient(cfg.endpoints[e].direction, (*th)[e]));
                est.fisher_info = *info;
                cfg.studies.push_back(est);
            }
    }
    if (has_counts && endpoints_ok && binary) {
        const json& st = doc["arm_counts"];
        if (!st.is_array() || st.empty()) c.error("$.arm_counts", "expected a non-empty array");
        else
            for (std::size_t j = 0; j < st.size(); ++j) {
                const std::string p = idx("$.arm_counts", j);
                const json& s = st[j];
                c.allowed_keys(s, p, {"study_id", "n_treat", "r_treat", "n_ctrl", "r_ctrl"});
                ArmCounts a;
                a.study_id = c.string(s, p, "study_id", true).value_or("");
                auto nt = c.number(s, p, "n_treat", true, 1), rt = c.number(s, p, "r_treat", true, 0);
                auto nc = c.number(s, p, "n_ctrl", true, 1), rc = c.number(s, p, "r_ctrl", true, 0);
                if (!nt || !rt || !nc || !rc) continue;
                a.n_treat = static_cast<int>(*nt);
                a.r_treat = static_cast<int>(*rt);
                a.n_ctrl = static_cast<int>(*nc);
                a.r_ctrl = static_cast<int>(*rc);
                if (c.attempt(p, [&] { a.validate(); return true; })) cfg.arm_counts.push_back(a);
            }
    }

    // Heterogeneity priors.
    const json* het = c.get(doc, root, "heterogeneity", endpoints_ok);
    if (het) {
        c.allowed_keys(*het, "$.heterogeneity", {"phase2", "phase3", "multipliers"});
        if (const json* m = c.get(*het, "$.heterogeneity", "multipliers", false)) {
            const std::string p = "$.heterogeneity.multipliers";
            c.allowed_keys(*m, p, {"large", "substantial", "moderate", "small", "very-small"});
            if (auto v = c.number(*m, p, "large", false, 0.0, INFINITY, true)) mult.large = *v;
            if (auto v = c.number(*m, p, "substantial", false, 0.0, INFINITY, true)) mult.substantial = *v;
            if (auto v = c.number(*m, p, "moderate", false, 0.0, INFINITY, true)) mult.moderate = *v;
            if (auto v = c.number(*m, p, "small", false, 0.0, INFINITY, true)) mult.small = *v;
            if (auto v = c.number(*m, p, "very-small", false, 0.0, INFINITY, true)) mult.very_small = *v;
        }
        if (const json* p2 = c.get(*het, "$.heterogeneity", "phase2", endpoints_ok)) {
            if (!p2->is_array() || p2->size() != d) {
                c.error("$.heterogeneity.phase2", "expected one entry per endpoint");
            } else {
                for (std::size_t e = 0; e < d; ++e)
                    if (auto h = parse_heterogeneity(c, (*p2)[e], idx("$.heterogeneity.phase2", e), &cfg.endpoints[e],
                                                     &cfg.nuisance[e], mult))
                        cfg.tau2.push_back(*h);
            }
        }
    }

    // Prior for mu.
    if (const json* pr = c.get(doc, root, "prior", true)) {
        const std::string p = "$.prior";
        c.allowed_keys(*pr, p, {"type", "omega", "mean", "sd", "accelerated", "oncology", "downweight", "program",
                                "mc_draws", "phase2_either", "tpp_log_or"});
        auto type = c.string(*pr, p, "type", true);
        auto& pd = cfg.prior;
        if (type == "calibrated") {
            pd.type = PriorDirective::Type::Calibrated;
            pd.accelerated = c.boolean(*pr, p, "accelerated").value_or(false);
            pd.oncology = c.boolean(*pr, p, "oncology").value_or(false);
            pd.phase2_either = c.boolean(*pr, p, "phase2_either").value_or(false);
            if (auto v = c.number(*pr, p, "downweight", false, 0.0, 1.0, true)) pd.downweight = *v;
            if (auto v = c.number(*pr, p, "mc_draws", false, 1e5, 1e8)) pd.mc_draws = static_cast<std::size_t>(*v);
            if (const json* prog = c.get(*pr, p, "program", false)) {
                if (!prog->is_array() || prog->empty()) {
                    c.error(p + ".program", "expected a non-empty array of stages");
                } else {
                    StandardProgramSpec spec;
                    for (std::size_t i = 0; i < prog->size(); ++i) {
                        const std::string sp = idx(p + ".program", i);
                        const json& s = (*prog)[i];
                        c.allowed_keys(s, sp, {"phase", "trials", "alpha", "power"});
                        CalibrationStage st;
                        st.phase = c.string(s, sp, "phase", true).value_or("");
                        if (st.phase != "IIa" && st.phase != "IIb" && st.phase != "III")
                            c.error(sp + ".phase", "expected IIa, IIb or III");
                        st.pivotal = st.phase == "III";
                        if (auto v = c.number(s, sp, "trials", true, 1, 10)) st.trials = static_cast<int>(*v);
                        if (auto v = c.number(s, sp, "alpha", true, 0.0, 0.5, true, true)) st.alpha = *v;
                        if (auto v = c.number(s, sp, "power", true, 0.0, 1.0, true, true)) st.power = *v;
                        spec.stages.push_back(st);
                    }
                    pd.program = spec;
                }
            }
            if (binary) {
                if (auto v = c.number(*pr, p, "tpp_log_or", true)) {
                    pd.delta_log_or = d == 1 ? orient(cfg.endpoints[0].direction, *v) : *v;
                    if (!(pd.delta_log_or > 0.0))
                        c.error(p + ".tpp_log_or", "must lie on the benefit side of 0");
                }
            }
        } else if (type == "mixture") {
            pd.type = PriorDirective::Type::Mixture;
            if (auto v = c.number(*pr, p, "omega", true, 0.0, 1.0)) pd.omega = *v;
            if (auto v = c.number(*pr, p, "downweight", false, 0.0, 1.0, true)) pd.downweight = *v;
            if (binary) {
                if (auto v = c.number(*pr, p, "tpp_log_or", true)) {
                    pd.delta_log_or = d == 1 ? orient(cfg.endpoints[0].direction, *v) : *v;
                    if (!(pd.delta_log_or > 0.0))
                        c.error(p + ".tpp_log_or", "must lie on the benefit side of 0");
                }
            }
        } else if (type == "normal") {
            pd.type = PriorDirective::Type::Normal;
            auto mean = c.numbers(*pr, p, "mean", true, d);
            auto sd = c.numbers(*pr, p, "sd", true, d, 0.0, INFINITY, true);
            if (mean && sd && endpoints_ok) {
                for (std::size_t e = 0; e < d; ++e) pd.mean.push_back(orient(cfg.endpoints[e].direction, (*mean)[e]));
                pd.sd = *sd;
            }
        } else if (type) {
            c.error(p + ".type", "expected calibrated, mixture or normal");
        }
    }

    // Binary pathway extras.
    if (binary) {
        if (const json* b = c.get(doc, root, "binary", false)) {
            const std::string p = "$.binary";
            c.allowed_keys(*b, p, {"control_prior", "control_heterogeneity"});
            if (const json* cp = c.get(*b, p, "control_prior", false)) {
                if (auto v = c.number(*cp, p + ".control_prior", "mean", true)) cfg.ctrl_prior.mean = *v;
                if (auto v = c.number(*cp, p + ".control_prior", "sd", true, 0.0, INFINITY, true)) cfg.ctrl_prior.sd = *v;
            }
            if (const json* ch = c.get(*b, p, "control_heterogeneity", false))
                if (auto h = parse_heterogeneity(c, *ch, p + ".control_heterogeneity", nullptr, nullptr, mult))
                    cfg.ctrl_tau = *h;
        }
    } else if (doc.contains("binary")) {
        c.error("$.binary", "only applies to risk-difference endpoints");
    }

    // Bridge.
    if (const json* br = c.get(doc, root, "bridge", false)) {
        const std::string p = "$.bridge";
        c.allowed_keys(*br, p, {"fixture", "theta_star_heterogeneity", "conditioning_endpoint"});
        if (binary) c.error(p, "bridging is not available on the binary pathway");
        if (const json* fx = c.get(*br, p, "fixture", true))
            if (auto j = object_or_file(c, *fx, p + ".fixture", base_dir))
                if (auto f = c.attempt(p + ".fixture", [&] { return BridgeFixture::from_json(*j); })) cfg.bridge = *f;
        if (const json* ts = c.get(*br, p, "theta_star_heterogeneity", true))
            if (auto h = parse_heterogeneity(c, *ts, p + ".theta_star_heterogeneity",
                                             endpoints_ok && d > 0 ? &cfg.endpoints[0] : nullptr,
                                             endpoints_ok && d > 0 ? &cfg.nuisance[0] : nullptr, mult))
                cfg.theta_star_tau = *h;
        if (d == 2 && !br->contains("conditioning_endpoint"))
            c.error(p + ".conditioning_endpoint", "required with two phase II endpoints");
    }

    // Phase III.
    if (const json* p3 = c.get(doc, root, "phase3", true)) {
        const std::string p = "$.phase3";
        c.allowed_keys(*p3, p, {"endpoints", "trials", "success_rule", "kappa", "rho", "heterogeneity"});
        if (const json* eps = c.get(*p3, p, "endpoints", false)) {
            if (!eps->is_array() || eps->empty() || eps->size() > 2) {
                c.error(p + ".endpoints", "expected an array of 1 or 2 endpoints");
            } else {
                for (std::size_t i = 0; i < eps->size(); ++i)
                    if (auto e = parse_endpoint(c, (*eps)[i], idx(p + ".endpoints", i), nullptr))
                        cfg.phase3_endpoints.push_back(*e);
            }
        } else {
            cfg.phase3_endpoints = cfg.endpoints;
            if (cfg.bridge) c.error(p + ".endpoints", "required when bridging");
        }
        const std::size_t d3 = cfg.phase3_endpoints.size();
        if (!cfg.bridge && !binary && endpoints_ok && d3 > 0) {
            bool same = d3 == d;
            for (std::size_t e = 0; same && e < d; ++e) same = cfg.phase3_endpoints[e].id == cfg.endpoints[e].id;
            if (!same) c.error(p + ".endpoints", "without a bridge the phase III endpoints must match the phase II endpoints");
        }
        if (auto v = c.number(*p3, p, "kappa", false, -1.0, 1.0, true, true)) cfg.phase3_kappa = *v;
        if (auto v = c.number(*p3, p, "rho", false, -1.0, 1.0, true, true)) cfg.phase3_rho = *v;
        else cfg.phase3_rho = cfg.rho;

        if (const json* h3 = c.get(*p3, p, "heterogeneity", !cfg.bridge && endpoints_ok)) {
            if (!h3->is_array() || h3->size() != d3) {
                c.error(p + ".heterogeneity", "expected one entry per phase III endpoint");
            } else {
                for (std::size_t e = 0; e < d3; ++e) {
                    const bool matched = e < d && !cfg.bridge;
                    if (auto h = parse_heterogeneity(c, (*h3)[e], idx(p + ".heterogeneity", e),
                                                     matched ? &cfg.endpoints[e] : nullptr,
                                                     matched ? &cfg.nuisance[e] : nullptr, mult))
                        cfg.tau3.push_back(*h);
                }
            }
        }

        if (const json* tr = c.get(*p3, p, "trials", true)) {
            if (!tr->is_array() || tr->empty()) {
                c.error(p + ".trials", "at least one phase III trial is required");
            } else {
                for (std::size_t k = 0; k < tr->size(); ++k) {
                    const std::string tp = idx(p + ".trials", k);
                    const json& t = (*tr)[k];
                    if (binary) {
                        c.allowed_keys(t, tp, {"n_treat", "n_ctrl", "alpha"});
                        BinaryTrialDesign bd;
                        if (auto v = c.number(t, tp, "n_treat", true, 1)) bd.n_treat = static_cast<int>(*v);
                        if (auto v = c.number(t, tp, "n_ctrl", true, 1)) bd.n_ctrl = static_cast<int>(*v);
                        if (auto v = c.number(t, tp, "alpha", false, 0.0, 0.5, true, true)) bd.alpha = *v;
                        cfg.binary_designs.push_back(bd);
                        continue;
                    }
                    c.allowed_keys(t, tp, {"info", "power", "alpha"});
                    TrialDesign des;
                    des.phase = "III-" + std::to_string(k + 1);
                    des.alpha.assign(d3, 0.025);
                    if (auto a = c.numbers(t, tp, "alpha", false, d3, 0.0, 0.5, true, true)) des.alpha = *a;
                    if (t.contains("info") == t.contains("power")) {
                        c.error(tp, "give exactly one of info or power");
                    } else if (t.contains("info")) {
                        if (auto i = c.numbers(t, tp, "info", true, d3, 0.0, INFINITY, true)) des.info_levels = *i;
                    } else if (auto pw = c.numbers(t, tp, "power", true, d3, 0.0, 1.0, true, true)) {
                        for (std::size_t e = 0; e < d3; ++e)
                            des.info_levels.push_back(design_information(cfg.phase3_endpoints[e].tpp_internal(), des.alpha[e], (*pw)[e]));
                    }
                    cfg.designs.push_back(des);
                }
            }
        }
        if (binary) {
            if (const json* r = c.get(*p3, p, "success_rule", false)) {
                c.allowed_keys(*r, p + ".success_rule", {"tpp"});
                cfg.binary_require_tpp = c.boolean(*r, p + ".success_rule", "tpp").value_or(true);
            }
        } else if (const json* r = c.get(*p3, p, "success_rule", true)) {
            const std::string rp = p + ".success_rule";
            c.allowed_keys(*r, rp, {"significance", "tpp", "trend"});
            if (const json* s = c.get(*r, rp, "significance", true))
                cfg.rule.significance_endpoints = endpoint_indices(c, *s, rp + ".significance", cfg.phase3_endpoints);
            if (const json* s = c.get(*r, rp, "tpp", false))
                cfg.rule.tpp_endpoints = endpoint_indices(c, *s, rp + ".tpp", cfg.phase3_endpoints);
            if (const json* s = c.get(*r, rp, "trend", false))
                cfg.rule.trend_endpoints = endpoint_indices(c, *s, rp + ".trend", cfg.phase3_endpoints);
            c.attempt(rp, [&] { cfg.rule.validate(d3); return true; });
        }
    }

    if (cfg.bridge) {
        // Reorder bridge targets to match the phase III endpoints.
        auto& f = *cfg.bridge;
        if (f.sets.size() != cfg.phase3_endpoints.size()) {
            c.error("$.bridge.fixture", "fixture targets must cover every phase III endpoint");
        } else {
            BridgeFixture sorted = f;
            sorted.sets.clear();
            sorted.target_directions.clear();
            for (const auto& e : cfg.phase3_endpoints) {
                bool found = false;
                for (std::size_t i = 0; i < f.sets.size(); ++i)
                    if (f.sets[i].endpoint_id == e.id) {
                        sorted.sets.push_back(f.sets[i]);
                        if (f.target_directions[i] != e.direction)
                            c.error("$.bridge.fixture", "direction of target '" + e.id + "' differs from the phase III endpoint");
                        sorted.target_directions.push_back(e.direction);
                        found = true;
                    }
                if (!found) c.error("$.bridge.fixture", "no quantiles for phase III endpoint '" + e.id + "'");
            }
            f = sorted;
            if (endpoints_ok && d >= 1 && f.anchor_direction != cfg.endpoints[0].direction)
                c.error("$.bridge.fixture", "anchor direction differs from the conditioning endpoint");
        }
    }

    // Benchmarks.
    if (const json* b = c.get(doc, root, "benchmarks", true)) {
        const std::string p = "$.benchmarks";
        c.allowed_keys(*b, p, {"direct", "coefficients", "features", "sse_stratum", "sse"});
        auto& bd = cfg.benchmarks;
        if (auto s = c.string(*b, p, "sse_stratum", false)) {
            if (auto st = c.attempt(p + ".sse_stratum", [&] { return parse_sse_stratum(*s); })) bd.stratum = *st;
        }
        bd.sse = SseTable::defaults(bd.stratum);
        if (const json* s = c.get(*b, p, "sse", false)) {
            c.allowed_keys(*s, p + ".sse", {"phase2", "phase3"});
            if (auto v = c.number(*s, p + ".sse", "phase2", false, 0.0, 1.0, false, true)) bd.sse.phase2 = *v;
            if (auto v = c.number(*s, p + ".sse", "phase3", false, 0.0, 1.0, false, true)) bd.sse.phase3 = *v;
        }
        const bool direct = b->contains("direct"), coef = b->contains("coefficients");
        if (direct == coef) {
            c.error(p, "give exactly one of direct or coefficients");
        } else if (direct) {
            const json& dj = (*b)["direct"];
            const std::string dp = p + ".direct";
            c.allowed_keys(dj, dp, {"phase2", "phase3", "submission"});
            auto p2 = c.number(dj, dp, "phase2", true, 0.0, 1.0, true);
            auto p3 = c.number(dj, dp, "phase3", true, 0.0, 1.0, true);
            auto ps = c.number(dj, dp, "submission", true, 0.0, 1.0, true, true);
            if (p2 && p3 && ps) bd.direct = derive_benchmarks(*p2, *p3, *ps, bd.sse, "user-supplied");
        } else {
            if (auto j = object_or_file(c, (*b)["coefficients"], p + ".coefficients", base_dir)) bd.coefficients = *j;
            if ((*b)["coefficients"].is_string()) bd.coefficients_path = (*b)["coefficients"].get<std::string>();
            if (const json* f = c.get(*b, p, "features", true))
                if (auto pf = c.attempt(p + ".features", [&] { return ProgramFeatures::from_json(*f); })) bd.features = *pf;
            if (bd.coefficients && bd.features)
                c.attempt(p + ".coefficients", [&] { return evaluate_benchmarks(*bd.features, *bd.coefficients, bd.sse); });
        }
    }

    // Approval layer.
    if (const json* sc = c.get(doc, root, "scorecard", true))
        if (auto card = c.attempt("$.scorecard", [&] { return RiskScorecard::from_json(*sc); })) cfg.scorecard = *card;
    const bool has_table = doc.contains("ep_table"), has_ep = doc.contains("ep");
    if (has_table == has_ep) {
        c.error("$", "give exactly one of 'ep_table' or 'ep'");
    } else if (has_ep) {
        if (auto v = c.number(doc, root, "ep", true, 0.0, 1.0, true, true)) cfg.ep_direct = *v;
    } else if (auto j = object_or_file(c, doc["ep_table"], "$.ep_table", base_dir)) {
        if (auto t = c.attempt("$.ep_table", [&] { return EpTable::from_json(*j); })) {
            cfg.ep_table = *t;
            c.attempt("$.ep_table", [&] { return t->lookup(cfg.scorecard); });
        }
    }
    if (auto v = c.number(doc, root, "approval_anchor_override", false, 0.0, 1.0, true, true)) cfg.approval_anchor = *v;

    if (const json* o = c.get(doc, root, "output", false)) {
        c.allowed_keys(*o, "$.output", {"report", "draws"});
        cfg.report_path = c.string(*o, "$.output", "report", false).value_or("");
        cfg.draws_path = c.string(*o, "$.output", "draws", false).value_or("");
    }

    // Cross-field checks that need library validation.
    if (c.errors.empty() && !binary) {
        c.attempt("$.studies", [&] {
            for (const auto& s : cfg.studies) {
                s.validate();
                require(s.endpoints() == d, ErrorKind::Validation, "study '" + s.study_id + "' must report every endpoint");
            }
            return true;
        });
        for (std::size_t k = 0; k < cfg.designs.size(); ++k)
            c.attempt(idx("$.phase3.trials", k), [&] { cfg.designs[k].validate(cfg.phase3_endpoints.size()); return true; });
    }

    result.errors = std::move(c.errors);
    if (result.errors.empty()) result.config = std::move(cfg);
    return result;
}

ValidationResult validate_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return {std::nullopt, {"$: cannot open config file '" + path.string() + "'"}};
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        return {std::nullopt, {std::string("$: invalid JSON: ") + e.what()}};
    }
    return validate_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

namespace {

json proportion_json(const Proportion& p) { return {{"p", p.p}, {"se", p.se}, {"hits", p.hits}, {"n", p.n}}; }

// Summary of a column on the reporting scale.
json column_summary(const std::string& name, std::vector<double> values, Direction dir) {
    for (double& v : values) v = orient(dir, v);
    static const std::vector<double> probs = {0.025, 0.1, 0.25, 0.5, 0.75, 0.9, 0.975};
    const auto q = quantiles(values, probs);
    json qs = json::object();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::ostringstream key;
        key << "q" << std::setprecision(4) << probs[i] * 100;
        qs[key.str()] = q[i];
    }
    return {{"parameter", name}, {"mean", mean(values)}, {"sd", values.size() > 1 ? stddev(values) : 0.0}, {"quantiles", qs}};
}

json diagnostics_json(const ChainDiagnostics& d, const std::vector<std::string>& names) {
    json params = json::array();
    for (std::size_t p = 0; p < d.split_rhat.size(); ++p)
        params.push_back({{"parameter", p < names.size() ? names[p] : std::to_string(p)},
                          {"split_rhat", d.split_rhat[p]},
                          {"ess_bulk", d.ess_bulk[p]}});
    return {{"parameters", params}, {"accept_rate", d.accept_rate}};
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (Error& e) {
        if (e.stage().empty()) e.set_stage(name);
        throw;
    }
}

double stage_efficacy(const BenchmarkSet& b, const std::string& phase) {
    if (phase == "IIa") return b.p_efficacy_2a;
    if (phase == "IIb") return b.p_efficacy_2b;
    return b.p_efficacy_3;
}

void truncate_rows(PosteriorDraws& d, std::size_t rows) {
    if (d.rows() <= rows) return;
    d.mu.resize(rows * d.endpoints);
    d.tau.resize(rows * d.endpoints);
    if (!d.theta2.empty()) d.theta2.resize(rows * d.studies * d.endpoints);
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

json run_pipeline(const PipelineConfig& cfg, const RunOptions& options) {
    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["tool_version"] = kVersion;
    report["seed"] = cfg.seed;
    report["samples"] = cfg.samples;
    report["pathway"] = cfg.pathway == Pathway::Binary ? "binary" : "continuous";
    report["bridged"] = cfg.bridge.has_value();
    json notes = json::array();
    notes.push_back("pooled TPP and trend checks weight trial estimates by design information");
    notes.push_back("effects are reported on the scale and sign convention of each endpoint");
    auto finish = [&]() {
        report["notes"] = notes;
        if (options.include_timestamp) report["generated_at"] = timestamp();
        return report;
    };

    const std::size_t d = cfg.endpoints.size();
    const bool binary = cfg.pathway == Pathway::Binary;

    // Benchmarks.
    const BenchmarkSet bench = stage("benchmarks", [&] {
        if (cfg.benchmarks.direct) return *cfg.benchmarks.direct;
        return evaluate_benchmarks(*cfg.benchmarks.features, *cfg.benchmarks.coefficients, cfg.benchmarks.sse);
    });
    report["benchmarks"] = {
        {"provenance", bench.provenance},
        {"coefficients_file", cfg.benchmarks.coefficients_path},
        {"sse_stratum", to_string(cfg.benchmarks.stratum)},
        {"sse_given_fail", {{"phase2", cfg.benchmarks.sse.phase2}, {"phase3", cfg.benchmarks.sse.phase3}}},
        {"success", {{"IIa", bench.p_success_2a}, {"IIb", bench.p_success_2b}, {"III", bench.p_success_3}, {"submission", bench.p_submission}}},
        {"efficacy_success", {{"IIa", bench.p_efficacy_2a}, {"IIb", bench.p_efficacy_2b}, {"III", bench.p_efficacy_3}}},
        {"no_sse", {{"IIa", bench.p_no_sse_2a}, {"IIb", bench.p_no_sse_2b}, {"III", bench.p_no_sse_3}}},
    };

    // Prior for mu (internal scale).
    std::vector<double> tpp(d);
    for (std::size_t e = 0; e < d; ++e) tpp[e] = binary ? cfg.prior.delta_log_or : cfg.endpoints[e].tpp_internal();
    json calib = nullptr;
    const MixturePrior prior = stage("calibrate", [&] {
        const auto& pd = cfg.prior;
        switch (pd.type) {
            case PriorDirective::Type::Normal: return MixturePrior::single_normal(pd.mean, pd.sd, cfg.rho);
            case PriorDirective::Type::Mixture: {
                const double w = downweight_tpp(pd.omega, pd.downweight);
                return MixturePrior::from_tpp(tpp, w, cfg.rho);
            }
            case PriorDirective::Type::Calibrated: break;
        }
        const StandardProgramSpec program = pd.program ? *pd.program : StandardProgramSpec::standard(pd.oncology, pd.accelerated);
        double target = 1.0;
        for (const auto& st : program.stages) target *= stage_efficacy(bench, st.phase);
        CalibrationResult cr;
        if (d == 1) {
            cr = calibrate_omega_single(target, program, tpp[0]);
        } else {
            TwoEndpointCalibrationSpec spec;
            spec.program = program;
            spec.delta = {tpp[0], tpp[1]};
            for (std::size_t e = 0; e < 2; ++e) spec.unit_info_sd[e] = unit_information_sd(cfg.endpoints[e], cfg.nuisance[e]);
            spec.rho = cfg.rho;
            spec.kappa = cfg.kappa;
            spec.phase2_either = pd.phase2_either;
            cr = calibrate_omega_mc(target, spec, pd.mc_draws, cfg.seed);
        }
        const double w = downweight_tpp(cr.omega, pd.downweight);
        json stages = json::array();
        for (const auto& st : program.stages)
            stages.push_back({{"phase", st.phase}, {"trials", st.trials}, {"alpha", st.alpha}, {"power", st.power},
                              {"efficacy_benchmark", stage_efficacy(bench, st.phase)}});
        calib = {{"method", cr.method}, {"target", cr.target}, {"omega", cr.omega}, {"omega_downweighted", w},
                 {"downweight_multiplier", pd.downweight}, {"null_component_success", cr.null_success},
                 {"tpp_component_success", cr.tpp_success}, {"omega_se", cr.omega_se}, {"draws", cr.draws},
                 {"program", stages}};
        return MixturePrior::from_tpp(tpp, w, cfg.rho);
    });
    {
        json pj = {{"omega", prior.omega()}, {"rho", prior.rho()}, {"null_sds", prior.null_sds()},
                   {"tpp_sds", prior.tpp_sds()}, {"scale", binary ? "log-odds-ratio" : "effect"}};
        std::vector<double> null_mean, tpp_mean, null_var;
        for (std::size_t e = 0; e < d; ++e) {
            null_mean.push_back(orient(cfg.endpoints[e].direction, prior.null_mean()[e]));
            tpp_mean.push_back(orient(cfg.endpoints[e].direction, prior.tpp_mean()[e]));
            null_var.push_back(prior.null_sds()[e] * prior.null_sds()[e]);
        }
        pj["null_mean"] = null_mean;
        pj["tpp_mean"] = tpp_mean;
        pj["component_variances"] = null_var;
        report["prior"] = pj;
    }
    report["calibration"] = calib;
    if (options.stop == StopAfter::Calibrate) return finish();

    // Fit.
    std::optional<PosteriorDraws> post;
    std::optional<BinaryPosterior> bpost;
    stage("fit", [&] {
        if (binary) {
            BinaryFitInput in{cfg.arm_counts, cfg.endpoints[0], cfg.tau2[0], cfg.ctrl_tau, prior, cfg.ctrl_prior};
            bpost = fit_binary(in, cfg.mcmc, cfg.fit_options);
            truncate_rows(bpost->log_or, cfg.samples);
            bpost->ctrl_mu.resize(bpost->log_or.rows());
            bpost->ctrl_tau.resize(bpost->log_or.rows());
        } else {
            MetaAnalysisInput in{cfg.studies, cfg.endpoints, cfg.rho, cfg.kappa, cfg.tau2, prior};
            post = fit(in, cfg.mcmc, cfg.fit_options);
            truncate_rows(*post, cfg.samples);
        }
        return true;
    });
    {
        const PosteriorDraws& pd = binary ? bpost->log_or : *post;
        json summaries = json::array();
        for (std::size_t e = 0; e < d; ++e)
            summaries.push_back(column_summary((binary ? "log_or_mu[" : "mu[") + cfg.endpoints[e].id + "]",
                                               pd.mu_column(e), cfg.endpoints[e].direction));
        for (std::size_t e = 0; e < d; ++e)
            summaries.push_back(column_summary("tau[" + cfg.endpoints[e].id + "]", pd.tau_column(e), Direction::BenefitPositive));
        json diag = diagnostics_json(pd.diagnostics, pd.chains.names);
        json warnings = pd.warnings;
        if (binary) {
            summaries.push_back(column_summary("ctrl_logodds_mu", bpost->ctrl_mu, Direction::BenefitPositive));
            summaries.push_back(column_summary("ctrl_tau", bpost->ctrl_tau, Direction::BenefitPositive));
            diag["control_model"] = diagnostics_json(bpost->ctrl_diagnostics, bpost->ctrl_names);
            warnings = bpost->warnings;
        }
        report["posterior"] = {{"rows", pd.rows()}, {"summaries", summaries}, {"diagnostics", diag}, {"warnings", warnings}};
        if (!options.draws_csv.empty()) {
            std::ostringstream os;
            write_draws_csv(os, pd.chains);
            write_file_atomic(options.draws_csv, os.str());
        }
    }
    if (options.stop == StopAfter::Fit) return finish();

    // MAP / bridge.
    const std::size_t trials = cfg.trials();
    std::optional<MapDraws> map;
    std::optional<BinaryMapDraws> bmap;
    stage(cfg.bridge ? "bridge" : "map", [&] {
        if (binary) {
            bmap = sample_binary_map(*bpost, cfg.endpoints[0], cfg.tau3.empty() ? HeterogeneityPrior::from_scale(0.0) : cfg.tau3[0],
                                     trials, cfg.seed);
            std::vector<double> rd(bmap->rows);
            for (std::size_t r = 0; r < bmap->rows; ++r)
                rd[r] = bmap->p_treat3[r * trials] - bmap->p_ctrl3[r * trials];
            report["map"] = {{"risk_difference_trial1", column_summary("risk_difference", rd, Direction::BenefitPositive)}};
            return true;
        }
        if (!cfg.bridge) {
            map = sample_phase3_effects(*post, {cfg.tau3, cfg.phase3_rho}, trials, cfg.seed);
            json m = json::array();
            for (std::size_t e = 0; e < d; ++e) {
                auto col = map->column(0, e);
                std::size_t hits = 0;
                for (double v : col) hits += v > 0.0 ? 1 : 0;
                json s = column_summary("theta3[" + cfg.endpoints[e].id + "]", col, cfg.endpoints[e].direction);
                s["p_benefit"] = proportion_json(make_proportion(hits, col.size()));
                m.push_back(s);
            }
            report["map"] = {{"trial1", m}};
            return true;
        }
        // theta* for the conditioning endpoint: a new phase II-like study effect.
        const std::size_t ce = 0;
        const auto mu_col = post->mu_column(ce);
        const MapDraws star = sample_phase3_effects(mu_col, 1, {{cfg.theta_star_tau}, 0.0}, 1, cfg.seed);
        const auto theta_star = star.column(0, 0);
        std::size_t benefit = 0;
        for (double v : theta_star) benefit += v > 0.0 ? 1 : 0;
        const auto& fx = *cfg.bridge;
        json anchors = json::array();
        const Direction cdir = cfg.endpoints[ce].direction;
        for (double a : fx.sets[0].anchors) {
            std::size_t below = 0;
            for (double v : theta_star) below += orient(cdir, v) <= a ? 1 : 0;
            anchors.push_back({{"anchor", a}, {"map_percentile", 100.0 * static_cast<double>(below) / theta_star.size()}});
        }
        const auto sets = fx.internal_sets();
        const MarginalPriorDraws marg = sample_marginal(theta_star, sets, cfg.seed);
        json targets = json::array();
        for (std::size_t e = 0; e < sets.size(); ++e) {
            json s = column_summary("theta3[" + cfg.phase3_endpoints[e].id + "]", marg.column(e), cfg.phase3_endpoints[e].direction);
            json fams = json::object();
            for (const auto& [k, v] : marg.family_counts[e]) fams[k] = v;
            s["families"] = fams;
            targets.push_back(s);
        }
        json b = {{"theta_star", column_summary("theta_star[" + cfg.endpoints[ce].id + "]", theta_star, cdir)},
                  {"p_theta_star_benefit", proportion_json(make_proportion(benefit, theta_star.size()))},
                  {"anchors", anchors},
                  {"targets", targets},
                  {"rejections", marg.rejections}};
        if (sets.size() == 2) b["spearman"] = spearman(marg.column(0), marg.column(1));
        report["bridge"] = b;
        map = bridged_map_draws(marg, trials);
        return true;
    });
    if (options.stop == StopAfter::Bridge) return finish();

    // Phase III simulation.
    const ProgramOutcome outcome = stage("simulate", [&] {
        if (binary) return simulate_binary_program(*bmap, cfg.binary_designs, cfg.endpoints[0], cfg.binary_require_tpp, cfg.seed);
        return simulate_program(*map, cfg.designs, cfg.rule, cfg.phase3_endpoints, cfg.phase3_kappa, cfg.seed);
    });
    json stages_json = {{"significance", proportion_json(outcome.significance)},
                        {"efficacy_success", proportion_json(outcome.efficacy_success)}};
    {
        json per = json::array();
        const auto& eps = binary ? cfg.endpoints : cfg.phase3_endpoints;
        for (std::size_t e = 0; e < outcome.endpoint_significance.size(); ++e)
            per.push_back({{"endpoint", eps[e].id},
                           {"significant_all_trials", proportion_json(outcome.endpoint_significance[e])},
                           {"pooled_check", proportion_json(outcome.endpoint_pooled_pass[e])}});
        stages_json["per_endpoint"] = per;
    }
    report["stages"] = stages_json;
    if (options.stop == StopAfter::Simulate) return finish();

    // Safety, approval and the final product.
    stage("approval", [&] {
        const double no_sse = bench.p_no_sse_3;
        const double positive = outcome.efficacy_success.p * no_sse;
        const double positive_se = outcome.efficacy_success.se * no_sse;
        const double ep = cfg.ep_direct ? *cfg.ep_direct : cfg.ep_table->lookup(cfg.scorecard);
        const double c_factor = adjustment_factor(ep, cfg.approval_anchor);
        const double cond = conditional_pos(ep, bench.p_submission, cfg.approval_anchor);
        const double fin = final_pos(positive, cond);
        require(outcome.significance.p >= outcome.efficacy_success.p && outcome.efficacy_success.p >= positive &&
                    positive >= fin,
                ErrorKind::Numerical, "staged probabilities are not weakly decreasing");
        require(std::fabs(fin - cond * positive) <= 1e-12, ErrorKind::Numerical, "final PoS product check failed");
        report["stages"]["no_sse_factor"] = no_sse;
        report["stages"]["positive_phase3"] = {{"p", positive}, {"se", positive_se}};
        report["stages"]["final_pos"] = {{"p", fin}, {"se", positive_se * cond}};
        report["approval"] = {{"risk_profile", cfg.scorecard.profile_key()},
                              {"ep", ep},
                              {"ep_source", cfg.ep_direct ? "direct" : (cfg.ep_table->is_additive() ? "additive-table" : "full-table")},
                              {"approval_anchor", cfg.approval_anchor},
                              {"adjustment_factor", c_factor},
                              {"approval_benchmark", bench.p_submission},
                              {"conditional_pos", cond}};
        return true;
    });
    return finish();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + tmp.string() + "'");
        out << text;
        out.flush();
        require(static_cast<bool>(out), ErrorKind::Io, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorKind::Io, "cannot move report into place at '" + path.string() + "': " + ec.message());
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation:
        case ErrorKind::Schema:
        case ErrorKind::Configuration:
        case ErrorKind::Domain:
        case ErrorKind::Conditioning:
            return 2;
        case ErrorKind::Convergence:
        case ErrorKind::StuckChain:
            return 3;
        case ErrorKind::InfeasibleCalibration:
        case ErrorKind::IllConditionedCalibration:
            return 4;
        default:
            return 1;
    }
}

}  // namespace pos
