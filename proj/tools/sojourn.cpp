#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <sojourn/experiment.hpp>

namespace {

enum Exit { ok = 0, config_error = 2, numerical_failure = 3, gate_failure = 4 };

int run(const std::string& mode_name, const std::string& config_path, const std::string& preset_name,
        std::optional<std::uint64_t> seed, const std::string& out_dir, unsigned threads, bool gate)
{
    using namespace sojourn;
    ExperimentConfig cfg;
    Mode mode;
    try {
        mode = parse_mode(mode_name);
        if (!config_path.empty() == !preset_name.empty())
            throw ConfigError("--config", "give exactly one of --config or --preset");
        cfg = config_path.empty() ? preset(preset_name) : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        validate(cfg, mode);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    }

    RunOutput out;
    try {
        out = run_mode(mode, cfg, threads);
        write_outputs(out, cfg.output.dir);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return numerical_failure;
    }

    std::printf("%s: wrote %s (config %s)\n", mode_name.c_str(), cfg.output.dir.c_str(), config_hash(cfg).c_str());
    for (const auto& g : out.gates)
        std::printf("  %-20s %s  %s\n", g.name.c_str(), g.passed ? "PASS" : "FAIL", g.detail.c_str());
    if (gate && !out.gates_passed()) return gate_failure;
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sojourn functionals of long-range dependent spatiotemporal Gaussian fields"};
    app.set_version_flag("--version", std::string(sojourn::software_version));
    app.require_subcommand(1);

    std::string config, preset_name, out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = sojourn::default_threads();
    bool gate = false;

    for (const char* name : {"density", "covariance", "variance", "simulate", "experiment", "rosenblatt"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON experiment config");
        sub->add_option("--preset", preset_name, "built-in preset")
            ->check(CLI::IsMember(sojourn::preset_names()));
        sub->add_option("--seed", seed, "override the master seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads (default from SOJOURN_THREADS)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--gate", gate, "exit 4 when an acceptance gate fails");
    }
    auto* dump = app.add_subcommand("preset", "print a preset config as JSON");
    std::string dump_name;
    dump->add_option("name", dump_name)->required()->check(CLI::IsMember(sojourn::preset_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : config_error;
    }

    if (dump->parsed()) {
        std::cout << sojourn::to_json(sojourn::preset(dump_name)).dump(2) << "\n";
        return ok;
    }
    for (auto* sub : app.get_subcommands())
        return run(sub->get_name(), config, preset_name, seed, out_dir, threads, gate);
    return config_error;
}
