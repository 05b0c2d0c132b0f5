// ripple — command-line front end: one subcommand per experiment.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ripple/pipeline.hpp"

namespace {

int run(const std::string& sub, const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
        const std::string& scale) {
    using namespace ripple;
    std::optional<Scale> sc;
    if (!scale.empty()) sc = parse_scale(scale);
    RunConfig cfg = load_config(config, sc);
    const auto kind = parse_run_kind(sub);
    if (cfg.run != *kind)
        throw ConfigError("run", "config has run = \"" + std::string(to_string(cfg.run)) + "\" but the subcommand is " + sub);
    if (seed) cfg.ensemble.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    Pipeline p(cfg, cfg.output_dir);
    p.run();
    for (const auto& w : p.warnings()) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ripple — driven rippled-channel experiments (spectrum, Floquet evolution, classical diffusion)"};
    app.footer(ripple::schema_summary());
    app.set_version_flag("--version", std::string(RIPPLE_VERSION));
    app.require_subcommand(1);

    std::string config, out, scale;
    std::optional<std::uint64_t> seed;
    std::string chosen;
    for (const char* name : {"spectrum", "evolve", "qe", "classical", "compare"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "ensemble seed (overrides ensemble.seed)");
        sub->add_option("--scale", scale, "preset for omitted values")->check(CLI::IsMember({"paper", "ci"}));
        sub->footer(ripple::schema_summary());
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        return run(chosen, config, out, seed, scale);
    } catch (const ripple::Error& e) {
        std::cerr << "error (" << (e.category() == ripple::ErrorCategory::config      ? "config"
                                   : e.category() == ripple::ErrorCategory::numerical ? "numerical"
                                                                                      : "physics")
                  << "): " << e.what() << "\n";
        return ripple::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
