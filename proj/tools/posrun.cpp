// posrun: command-line front end for the PoS pipeline.
//
//   posrun validate --config program.json
//   posrun pos --config program.json --seed 7 --samples 40000 --out report.json
//
// Exit codes: 0 success, 2 invalid config, 3 MCMC non-convergence,
// 4 infeasible calibration, 1 anything else.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pos/error.hpp"
#include "pos/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::string out;
    std::string dump_draws;
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool run_flags) {
    cmd->add_option("--config", f.config, "Program config (JSON)")->required()->check(CLI::ExistingFile);
    if (!run_flags) return;
    cmd->add_option("--seed", f.seed, "Override the config seed");
    cmd->add_option("--samples", f.samples, "Override the number of posterior draws L")->check(CLI::Range(100, 100000000));
    cmd->add_option("--out", f.out, "Report path (default: config output.report, else stdout)");
    cmd->add_option("--dump-draws", f.dump_draws, "Write raw posterior draws to this CSV");
    cmd->add_flag("--no-timestamp", f.no_timestamp, "Omit generated_at from the report");
}

int run(const CommonFlags& f, pos::StopAfter stop) {
    auto v = pos::validate_config_file(f.config);
    if (!v.ok()) {
        for (const auto& e : v.errors) std::cerr << "config error: " << e << "\n";
        return 2;
    }
    pos::PipelineConfig cfg = std::move(*v.config);
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.mcmc.seed = *f.seed;
    }
    if (f.samples) {
        cfg.samples = *f.samples;
        cfg.mcmc.keep = static_cast<int>((cfg.samples + cfg.mcmc.chains - 1) / cfg.mcmc.chains);
    }
    pos::RunOptions opt;
    opt.stop = stop;
    opt.include_timestamp = !f.no_timestamp;
    if (!f.dump_draws.empty()) opt.draws_csv = f.dump_draws;
    else if (!cfg.draws_path.empty()) opt.draws_csv = (cfg.base_dir / cfg.draws_path).string();

    std::string out = f.out;
    if (out.empty() && !cfg.report_path.empty()) out = (cfg.base_dir / cfg.report_path).string();
    try {
        const nlohmann::json report = pos::run_pipeline(cfg, opt);
        const std::string text = report.dump(2) + "\n";
        if (out.empty()) std::cout << text;
        else pos::write_file_atomic(out, text);
    } catch (const pos::Error& e) {
        std::cerr << "error";
        if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
        std::cerr << " (" << pos::to_string(e.kind()) << "): " << e.what() << "\n";
        return pos::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probability-of-success evaluation for a drug development program"};
    app.set_version_flag("--version", std::string(pos::kVersion));
    app.require_subcommand(1);

    CommonFlags flags;
    auto* validate = app.add_subcommand("validate", "Check a config and list every problem");
    add_common(validate, flags, false);
    struct Sub {
        const char* name;
        const char* help;
        pos::StopAfter stop;
    };
    const Sub subs[] = {
        {"calibrate", "Benchmarks and prior calibration only", pos::StopAfter::Calibrate},
        {"fit", "Calibrate and fit the phase II meta-analysis", pos::StopAfter::Fit},
        {"bridge", "Run through the MAP prior and bridging step", pos::StopAfter::Bridge},
        {"simulate", "Run through the phase III simulation", pos::StopAfter::Simulate},
        {"pos", "Full pipeline including the approval layer", pos::StopAfter::Final},
    };
    std::optional<pos::StopAfter> chosen;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, flags, true);
        cmd->callback([&chosen, stop = s.stop] { chosen = stop; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (validate->parsed()) {
        auto v = pos::validate_config_file(flags.config);
        if (!v.ok()) {
            for (const auto& e : v.errors) std::cerr << "config error: " << e << "\n";
            return 2;
        }
        std::cout << "config ok\n";
        return 0;
    }
    return run(flags, *chosen);
}
