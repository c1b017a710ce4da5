#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pos/error.hpp"
#include "pos/pipeline.hpp"
#include "properties.hpp"

using namespace pos;
using nlohmann::json;

namespace {

json example(const std::string& name) { return postest::load_json(postest::data_path(name)); }

PipelineConfig must_validate(const json& doc) {
    const auto v = validate_config(doc, postest::data_path(""));
    std::string all;
    for (const auto& e : v.errors) all += e + "\n";
    INFO(all);
    REQUIRE(v.ok());
    return *v.config;
}

bool mentions(const ValidationResult& v, const std::string& needle) {
    for (const auto& e : v.errors)
        if (e.find(needle) != std::string::npos) return true;
    return false;
}

// Point-mass prior at the TPP, no heterogeneity, no SSE risk: each trial is
// significant with its design power.
json degenerate(int trials) {
    json t = json::array();
    for (int k = 0; k < trials; ++k) t.push_back({{"power", {0.9}}, {"alpha", {0.025}}});
    return {
        {"version", 1},
        {"seed", 3},
        {"samples", 40000},
        {"mcmc", {{"chains", 4}, {"warmup", 1000}}},
        {"endpoints", {{{"id", "y"}, {"kind", "continuous-normal"}, {"direction", "benefit-positive"},
                        {"tpp_threshold", 0.3}, {"response_sd", 1.0}}}},
        {"studies", {{{"study_id", "s1"}, {"theta_hat", {0.3}}, {"se", {0.5}}}}},
        {"heterogeneity", {{"phase2", {{{"scale", 0.0}}}}}},
        {"prior", {{"type", "normal"}, {"mean", {0.3}}, {"sd", {1e-3}}}},
        {"benchmarks", {{"direct", {{"phase2", 0.5}, {"phase3", 0.7}, {"submission", 0.9}}},
                        {"sse", {{"phase2", 0.1}, {"phase3", 0.0}}}}},
        {"phase3", {{"heterogeneity", {{{"scale", 0.0}}}}, {"trials", t}, {"success_rule", {{"significance", {"y"}}}}}},
        {"scorecard", "AAAAA"},
        {"ep", 0.9},
    };
}

int code_of(const PipelineConfig& cfg, RunOptions opt, std::string* stage = nullptr) {
    try {
        run_pipeline(cfg, opt);
    } catch (const Error& e) {
        if (stage) *stage = e.stage();
        return exit_code_for(e.kind());
    }
    return 0;
}

}  // namespace

TEST_CASE("validation reports every problem") {
    const auto empty = validate_config(json::object());
    CHECK_FALSE(empty.ok());
    CHECK(empty.errors.size() >= 3);
    CHECK_FALSE(empty.config.has_value());

    auto doc = example("worked_example.json");
    doc["phase3"]["trials"][0]["alpha"][0] = 0.6;
    doc["mystery"] = 1;
    const auto v = validate_config(doc, postest::data_path(""));
    CHECK_FALSE(v.ok());
    CHECK(mentions(v, "alpha"));
    CHECK(mentions(v, "mystery"));

    auto none = example("worked_example.json");
    none["phase3"]["trials"] = json::array();
    CHECK_FALSE(validate_config(none, postest::data_path("")).ok());

    auto both = example("worked_example.json");
    both["ep"] = 0.8;
    CHECK_FALSE(validate_config(both, postest::data_path("")).ok());

    CHECK_FALSE(validate_config_file(postest::data_path("no_such_file.json")).ok());
}

TEST_CASE("shipped examples validate") {
    for (const char* name : {"worked_example.json", "binary_example.json"}) {
        const auto v = validate_config_file(postest::data_path(name));
        std::string all;
        for (const auto& e : v.errors) all += e + "\n";
        INFO(name << "\n" << all);
        CHECK(v.ok());
    }
}

TEST_CASE("degenerate program reproduces design power") {
    for (int k : {1, 2}) {
        const auto cfg = must_validate(degenerate(k));
        const auto r = run_pipeline(cfg, {StopAfter::Final, "", false});
        const double sig = r["stages"]["significance"]["p"];
        const double fin = r["stages"]["final_pos"]["p"];
        const double expect = std::pow(0.9, k);
        const double se = std::sqrt(expect * (1 - expect) / 40000.0);
        CHECK(std::fabs(sig - expect) < 4 * se);
        CHECK(r["stages"]["no_sse_factor"].get<double>() == 1.0);
        CHECK(r["approval"]["conditional_pos"].get<double>() == doctest::Approx(0.9));
        CHECK(std::fabs(fin - 0.9 * expect) < 4 * se);
    }
}

TEST_CASE("worked example: staged values, determinism and golden report") {
    const auto cfg = must_validate(example("worked_example.json"));
    const auto a = run_pipeline(cfg, {StopAfter::Final, "", false});
    const auto b = run_pipeline(cfg, {StopAfter::Final, "", false});
    CHECK(a == b);
    CHECK_FALSE(a.contains("generated_at"));
    const auto stamped = run_pipeline(cfg);
    CHECK(stamped.contains("generated_at"));
    CHECK(postest::stable_report(stamped) == a);

    const auto& s = a["stages"];
    CHECK(std::fabs(s["significance"]["p"].get<double>() - 0.57) < 0.03);
    CHECK(std::fabs(s["efficacy_success"]["p"].get<double>() - 0.50) < 0.03);
    CHECK(std::fabs(s["positive_phase3"]["p"].get<double>() - 0.48) < 0.03);
    CHECK(std::fabs(s["final_pos"]["p"].get<double>() - 0.38) < 0.03);
    CHECK(s["significance"]["p"] >= s["efficacy_success"]["p"]);
    CHECK(s["positive_phase3"]["p"] >= s["final_pos"]["p"]);
    CHECK(std::fabs(a["bridge"]["spearman"].get<double>() - 0.4) < 0.05);

    const auto golden_file = postest::golden_path("worked_example_report.json");
    REQUIRE_MESSAGE(std::filesystem::exists(golden_file), "missing golden report " << golden_file);
    const auto golden = postest::load_json(golden_file);
    auto mine = a;
    auto theirs = golden;
    mine.erase("tool_version");
    theirs.erase("tool_version");
    const auto diff = postest::json_diff(theirs, mine, 1e-9);
    INFO(diff);
    CHECK(diff.empty());
}

TEST_CASE("binary pathway runs end to end") {
    auto doc = example("binary_example.json");
    doc["samples"] = 5000;
    const auto cfg = must_validate(doc);
    const auto r = run_pipeline(cfg, {StopAfter::Final, "", false});
    CHECK(r["pathway"] == "binary");
    const double fin = r["stages"]["final_pos"]["p"];
    CHECK(fin > 0.0);
    CHECK(fin < r["stages"]["efficacy_success"]["p"].get<double>());
}

TEST_CASE("stopping early") {
    const auto cfg = must_validate(example("worked_example.json"));
    const auto r = run_pipeline(cfg, {StopAfter::Calibrate, "", false});
    CHECK(r.contains("prior"));
    CHECK_FALSE(r.contains("posterior"));
    CHECK_FALSE(r.contains("stages"));
}

TEST_CASE("errors carry their stage and exit code") {
    auto strict = must_validate(example("worked_example.json"));
    strict.fit_options.max_rhat = 0.5;
    std::string stage;
    CHECK(code_of(strict, {StopAfter::Fit, "", false}, &stage) == 3);
    CHECK(stage == "fit");

    auto infeasible = example("worked_example.json");
    infeasible["benchmarks"].erase("coefficients");
    infeasible["benchmarks"].erase("features");
    infeasible["benchmarks"]["direct"] = {{"phase2", 0.99}, {"phase3", 0.99}, {"submission", 0.99}};
    CHECK(code_of(must_validate(infeasible), {StopAfter::Calibrate, "", false}, &stage) == 4);
    CHECK(stage == "calibrate");

    CHECK(exit_code_for(ErrorKind::Validation) == 2);
    CHECK(exit_code_for(ErrorKind::StuckChain) == 3);
    CHECK(exit_code_for(ErrorKind::IllConditionedCalibration) == 4);
    CHECK(exit_code_for(ErrorKind::Io) == 1);
}

TEST_CASE("atomic report writes") {
    const auto dir = std::filesystem::temp_directory_path() / "pos_atomic_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "report.json";
    write_file_atomic(path, "{\"a\": 1}");
    write_file_atomic(path, "{\"a\": 2}");
    std::ifstream in(path);
    CHECK(json::parse(in)["a"] == 2);
    CHECK_FALSE(std::filesystem::exists(dir / "report.json.tmp"));
    CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "x.json", "{}"), Error);
    std::filesystem::remove_all(dir);
}
