#pragma once

// End-to-end PoS evaluation: calibrate -> fit -> MAP / bridge -> simulate ->
// no-SSE factor -> conditional PoS -> final product. Configuration and report
// are JSON documents (see docs/config-schema.md and docs/report-schema.md).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pos/benchmarks.hpp"
#include "pos/binary.hpp"
#include "pos/bridge.hpp"
#include "pos/calibration.hpp"
#include "pos/conditional_pos.hpp"
#include "pos/error.hpp"
#include "pos/mcmc.hpp"
#include "pos/model.hpp"
#include "pos/program_sim.hpp"

namespace pos {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

enum class Pathway { Continuous, Binary };

struct PriorDirective {
    enum class Type { Calibrated, Mixture, Normal } type = Type::Calibrated;
    double omega = 0.5;               // Mixture
    std::vector<double> mean, sd;     // Normal, internal scale
    bool accelerated = false;         // Calibrated
    bool oncology = false;
    double downweight = 1.0;          // TPP multiplier applied after calibration
    std::optional<StandardProgramSpec> program;  // overrides the standard program
    std::size_t mc_draws = 200000;    // two-endpoint calibration
    bool phase2_either = false;
    double delta_log_or = 0.0;        // binary pathway: TPP on the log-OR scale
};

struct BenchmarkDirective {
    std::optional<BenchmarkSet> direct;
    std::optional<nlohmann::json> coefficients;
    std::optional<ProgramFeatures> features;
    std::string coefficients_path;
    SseTable sse;
    SseStratum stratum = SseStratum::NonOncology;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::size_t samples = 40000;
    McmcConfig mcmc;
    FitOptions fit_options;
    Pathway pathway = Pathway::Continuous;

    std::vector<EndpointSpec> endpoints;  // phase II
    std::vector<Nuisance> nuisance;
    std::vector<StudyEstimate> studies;   // internal scale
    std::vector<ArmCounts> arm_counts;
    double rho = 0.0, kappa = 0.0;
    std::vector<HeterogeneityPrior> tau2, tau3;
    PriorDirective prior;

    // Binary pathway.
    HeterogeneityPrior ctrl_tau = HeterogeneityPrior::from_scale(0.5);
    ControlPrior ctrl_prior;
    std::vector<BinaryTrialDesign> binary_designs;
    bool binary_require_tpp = true;

    // Phase III.
    std::vector<EndpointSpec> phase3_endpoints;
    std::vector<TrialDesign> designs;
    SuccessRule rule;
    double phase3_kappa = 0.0;
    double phase3_rho = 0.0;

    std::optional<BridgeFixture> bridge;
    HeterogeneityPrior theta_star_tau = HeterogeneityPrior::from_scale(0.0);

    BenchmarkDirective benchmarks;
    RiskScorecard scorecard;
    std::optional<EpTable> ep_table;
    std::optional<double> ep_direct;
    double approval_anchor = kApprovalAnchor;

    std::string report_path;
    std::string draws_path;
    std::filesystem::path base_dir;

    std::size_t trials() const {
        return pathway == Pathway::Binary ? binary_designs.size() : designs.size();
    }
};

struct ValidationResult {
    std::optional<PipelineConfig> config;
    std::vector<std::string> errors;  // "path: message"
    bool ok() const { return errors.empty(); }
};

// Checks the whole document and reports every problem at once; never returns
// a partially accepted config. Relative file paths resolve against base_dir.
ValidationResult validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
ValidationResult validate_config_file(const std::filesystem::path& path);

enum class StopAfter { Calibrate, Fit, Bridge, Simulate, Final };

struct RunOptions {
    StopAfter stop = StopAfter::Final;
    std::string draws_csv;  // posterior draw dump, empty for none
    bool include_timestamp = true;
};

// Runs the pipeline up to `options.stop` and returns the report. Errors carry
// the name of the stage that raised them.
nlohmann::json run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

// Writes `text` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Process exit code for an error kind: 2 validation, 3 convergence,
// 4 infeasible calibration, 1 otherwise.
int exit_code_for(ErrorKind kind);

}  // namespace pos
