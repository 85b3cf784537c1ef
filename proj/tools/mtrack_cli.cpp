#include "mtrack/commands.hpp"
#include "mtrack/config.hpp"
#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Mouse-tracking paradata toolkit"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out_dir, thresholds, personalization, leakage;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "root seed");
    app.add_option("--workers", workers, "parallel workers");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--thresholds", thresholds, "hover thresholds in ms, comma separated");
    app.add_option("--personalization", personalization, "none, baseline or baseline_position (comma list allowed)");
    app.add_option("--leakage", leakage, "fold_local or global");

    const auto names = mtrack::command_names();
    for (const auto& name : names) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mtrack::kExitValidation;
    }

    try {
        mtrack::RunConfig config = config_path.empty() ? mtrack::RunConfig{} : mtrack::load_run_config(config_path);
        if (seed) config.seed = *seed;
        if (workers) config.workers = *workers;
        if (out_dir) config.out_dir = *out_dir;
        if (thresholds) {
            config.thresholds.clear();
            for (auto field : mtrack::csv::split(*thresholds)) {
                const auto v = mtrack::csv::parse_double(mtrack::csv::trim(field));
                if (!v) throw mtrack::ValidationError("bad threshold '" + std::string(field) + "'");
                config.thresholds.push_back(*v);
            }
        }
        if (personalization) {
            config.personalization.clear();
            for (auto field : mtrack::csv::split(*personalization))
                config.personalization.push_back(mtrack::parse_personalization(mtrack::csv::trim(field)));
        }
        if (leakage) config.leakage = mtrack::parse_leakage(*leakage);
        return mtrack::run_command(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr);
    } catch (const mtrack::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mtrack::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mtrack::kExitRuntime;
    }
}
