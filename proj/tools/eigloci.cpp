// eigloci command line: run the pipeline or verify a report tree.
//   eigloci run --config FILE [--preset paper|desk] [--seed N] [--out DIR] [--stages a,b]
//   eigloci verify --report DIR
// Exit codes: 0 ok, 2 validation failure, 3 stage error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eigloci/pipeline/config.hpp"
#include "eigloci/pipeline/run.hpp"
#include "eigloci/pipeline/verify.hpp"

namespace ep = eigloci::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"Inverse eigenvalue loci versus the Mandelbrot boundary: diagnostics pipeline"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the pipeline stages and write a report tree");
    std::string config_file, preset = "paper", out, stages;
    std::optional<std::uint64_t> seed;
    run->add_option("--config", config_file, "flat key = value config file")->required()->check(CLI::ExistingFile);
    run->add_option("--preset", preset, "base parameter bundle")->check(CLI::IsMember({"paper", "desk"}));
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out, "output directory");
    run->add_option("--stages", stages, "comma-separated stage list (default: all)");

    auto* verify = app.add_subcommand("verify", "re-check identities and schema of a report tree");
    std::string report_dir;
    verify->add_option("--report", report_dir, "report directory")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*run) {
        ep::PipelineConfig cfg;
        try {
            cfg = ep::preset_config(preset);
            ep::apply_config_file(cfg, config_file);
            if (seed) cfg.seed = *seed;
            if (!out.empty()) cfg.out = out;
            if (!stages.empty()) cfg.set("stages", stages);
            cfg.validate();
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
        try {
            const auto res = ep::run_pipeline(cfg);
            for (const auto& t : res.timings) std::cout << t.name << "\t" << t.seconds << " s\t" << t.status << "\n";
            std::cout << "report written to " << res.dir.string() << "\n";
            return 0;
        } catch (const ep::StageError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    }

    const auto v = ep::verify_report(report_dir);
    for (const auto& f : v.findings)
        std::cout << (f.ok ? "PASS " : "FAIL ") << f.check << (f.detail.empty() ? "" : "  (" + f.detail + ")") << "\n";
    return v.ok() ? 0 : 2;
}
