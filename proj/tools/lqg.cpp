// lqg: run one experiment from a config file.
//
//   lqg <experiment> --config FILE [--seed N] [--out DIR]
//
// Exit status: 0 when every gated check passes, 1 when a gated check fails,
// 2 on usage or configuration errors.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lqg/config.hpp"
#include "lqg/harness.hpp"

namespace {

struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void print_report(const lqg::RunManifest& m, const std::string& dir) {
    for (const auto& c : m.checks) {
        const char* tag = c.gated ? (c.passed ? "PASS" : "FAIL") : (c.passed ? "ok  " : "note");
        std::printf("%s  %-60s value=%.6g threshold=%.6g%s%s\n", tag, c.name.c_str(), c.value, c.threshold,
                    c.detail.empty() ? "" : "  ", c.detail.c_str());
    }
    if (!m.dropped.empty()) std::printf("%zu dropped item(s) recorded in the manifest\n", m.dropped.size());
    std::printf("%s: %s (results in %s)\n", m.experiment.c_str(), m.passed() ? "passed" : "FAILED", dir.c_str());
}

int run(lqg::Experiment experiment, const Args& args) {
    lqg::ExperimentConfig cfg;
    try {
        cfg = lqg::load_config(args.config);
    } catch (const lqg::ConfigError& e) {
        std::fprintf(stderr, "%s: %s\n", args.config.c_str(), e.what());
        return lqg::kExitUsage;
    }
    if (cfg.experiment != experiment) {
        std::fprintf(stderr, "%s: config is for '%s', not '%s'\n", args.config.c_str(), lqg::to_string(cfg.experiment),
                     lqg::to_string(experiment));
        return lqg::kExitUsage;
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.output_dir = *args.out;

    const auto diags = lqg::validate(cfg);
    for (const auto& d : diags)
        std::fprintf(stderr, "%s: %s: %s\n", lqg::to_string(d.severity), d.key.c_str(), d.message.c_str());
    if (lqg::has_errors(diags)) return lqg::kExitUsage;

    try {
        const auto manifest = lqg::run(cfg, cfg.output_dir, lqg::worker_count());
        print_report(manifest, cfg.output_dir);
        return manifest.passed() ? lqg::kExitPass : lqg::kExitGatedFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return lqg::kExitUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Liouville quantum gravity KPZ experiments"};
    app.require_subcommand(1);
    Args args;
    std::optional<lqg::Experiment> chosen;
    const lqg::Experiment all[] = {lqg::Experiment::kpz_table, lqg::Experiment::gff_stats, lqg::Experiment::measure_scan,
                                   lqg::Experiment::fpt_run, lqg::Experiment::kpz_verify, lqg::Experiment::boundary_verify};
    for (auto e : all) {
        auto* sub = app.add_subcommand(lqg::to_string(e), std::string("run the ") + lqg::to_string(e) + " experiment");
        sub->add_option("--config", args.config, "experiment config (YAML)")->required();
        sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--out", args.out, "override the output directory");
        sub->callback([&chosen, e] { chosen = e; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lqg::kExitUsage;
    }
    return run(*chosen, args);
}
