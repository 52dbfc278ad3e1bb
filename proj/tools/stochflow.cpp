// stochflow: run named experiments and write CSV plus verdict files.
//
// Exit status: 0 all verdicts pass, 1 some verdict fails, 2 configuration error,
// 3 runtime error.

#include "stochflow/config.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/harness.hpp"
#include "stochflow/parallel.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> paths;
    std::optional<int> threads;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "YAML experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Base seed (overrides monte_carlo.seed)");
    sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
    sub->add_option("--paths", o.paths, "Monte Carlo paths (overrides monte_carlo.n_paths)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "Worker threads; never changes numeric output")->check(CLI::PositiveNumber);
}

std::vector<stochflow::ExperimentConfig> plan(const std::string& subcommand, const Options& o) {
    using namespace stochflow;
    std::vector<ExperimentConfig> configs;
    const auto allowed = experiments_for(subcommand);
    if (!o.config.empty()) {
        ExperimentConfig cfg = load_config(o.config);
        if (std::find(allowed.begin(), allowed.end(), cfg.experiment) == allowed.end()) {
            throw SchemaError("experiment: '" + cfg.experiment + "' does not belong to subcommand '" + subcommand + "'");
        }
        configs.push_back(std::move(cfg));
    } else {
        for (const auto& name : allowed) configs.push_back(default_config(name));
    }
    for (auto& cfg : configs) {
        if (o.seed) cfg.monte_carlo.seed = *o.seed;
        if (o.paths) cfg.monte_carlo.n_paths = *o.paths;
        if (o.out) cfg.output.dir = *o.out;
        validate(cfg);
    }
    return configs;
}

void report(const stochflow::ExperimentResult& r) {
    std::size_t ok = 0;
    for (const auto& c : r.criteria) ok += c.passed ? 1 : 0;
    std::cout << r.experiment << ": " << (r.passed() ? "PASS" : "FAIL") << " (" << ok << "/" << r.criteria.size()
              << " criteria, " << r.wall_seconds << " s)\n";
    for (const auto& c : r.criteria) {
        if (!c.passed) std::cout << "  failed " << c.name << " = " << c.value << "\n";
    }
}

int run(const std::string& subcommand, const Options& o) {
    using namespace stochflow;
    if (o.threads) parallel::set_threads(*o.threads);
    const auto configs = plan(subcommand, o);
    bool all = true;
    for (const auto& cfg : configs) {
        const ExperimentResult r = run_experiment(cfg);
        report(r);
        all = all && r.passed();
    }
    if (subcommand == "validate") {
        const std::filesystem::path base = configs.front().output.dir;
        const ExperimentResult det = determinism_check(base / "determinism", configs.front().monte_carlo.seed);
        report(det);
        all = all && det.passed();
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear stochastic flows: solvers, diagnostics and experiments"};
    app.require_subcommand(1);
    Options options;
    const std::vector<std::pair<std::string, std::string>> subcommands{
        {"simulate", "Cross-solver agreement, moment bound and orthogonality"},
        {"chaos", "Wiener chaos convergence against Euler"},
        {"invert", "Inverse flow convergence"},
        {"diagonal", "Diagonal moments, Skorokhod growth and three-series diagnostics"},
        {"schatten", "Schatten smoothing exponent and Picard solver"},
        {"validate", "Every experiment plus the determinism check"},
    };
    for (const auto& [name, help] : subcommands) add_common(app.add_subcommand(name, help), options);
    CLI11_PARSE(app, argc, argv);

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
        return run(subcommand, options);
    } catch (const stochflow::SchemaError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
