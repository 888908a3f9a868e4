// strainwars: run one two-strain contact process experiment.
//
//   strainwars <kind> [--config FILE | --preset NAME] [--seed N] [--out PREFIX] [--parallel N]
//   strainwars presets
//   strainwars show [--config FILE | --preset NAME]
//
// Exit status: 0 success, 2 configuration error, 3 runtime or statistical error.

#include "strainwars/experiment.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options
{
    std::string config_path;
    std::string preset_name;
    std::string out_prefix;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> parallel;
};

strainwars::ExperimentConfig load(const Options& o)
{
    using strainwars::ConfigError;
    if (!o.config_path.empty() && !o.preset_name.empty())
        throw ConfigError({"--config and --preset are mutually exclusive"});
    strainwars::ExperimentConfig c;
    if (!o.preset_name.empty())
        c = strainwars::preset(o.preset_name);
    else if (!o.config_path.empty())
    {
        std::ifstream in(o.config_path);
        if (!in)
            throw ConfigError({"--config: cannot read " + o.config_path});
        std::ostringstream text;
        text << in.rdbuf();
        c = strainwars::parse_config(text.str());
    }
    else
        throw ConfigError({"one of --config or --preset is required"});

    if (o.seed)
        c.seed = *o.seed;
    else if (!c.seed)
    {
        if (const char* env = std::getenv("STRAINWARS_SEED"))
        {
            std::uint64_t s = 0;
            const std::string text(env);
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
            if (ec != std::errc{} || ptr != text.data() + text.size())
                throw ConfigError({"STRAINWARS_SEED: expected a nonnegative integer, got '" + text + "'"});
            c.seed = s;
        }
    }
    if (!o.out_prefix.empty())
        c.output_prefix = o.out_prefix;
    if (o.parallel)
        c.parallel = *o.parallel;
    return c;
}

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config_path, "Experiment configuration file");
    cmd->add_option("--preset", o.preset_name, "Built-in scenario");
    cmd->add_option("--seed", o.seed, "Master seed (overrides the config and STRAINWARS_SEED)");
    cmd->add_option("--out", o.out_prefix, "Output path prefix");
    cmd->add_option("--parallel", o.parallel, "Worker threads (0: one per hardware thread)");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-strain contact process experiments"};
    app.require_subcommand(1);
    Options opts;

    const std::vector<std::string> kinds = {"ode",    "simulate",  "survival",    "critical",
                                            "coexist", "regime", "crowd-out", "oracle-check"};
    for (const auto& k : kinds)
        add_common(app.add_subcommand(k, "Run a " + k + " experiment"), opts);
    auto* run_cmd = app.add_subcommand("run", "Run whatever experiment the config names");
    add_common(run_cmd, opts);
    auto* show_cmd = app.add_subcommand("show", "Print the canonical configuration and exit");
    add_common(show_cmd, opts);
    app.add_subcommand("presets", "List built-in scenarios");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "presets")
    {
        for (const auto& p : strainwars::preset_names())
            std::cout << p << '\n';
        return 0;
    }

    strainwars::ExperimentConfig config;
    try
    {
        config = load(opts);
        if (name != "run" && name != "show")
        {
            const auto kind = strainwars::parse_experiment_kind(name);
            if (kind != config.experiment)
                throw strainwars::ConfigError({"experiment: config describes '" + to_string(config.experiment) +
                                               "' but the '" + name + "' subcommand was used"});
        }
        strainwars::validate_config(config);
    }
    catch (const strainwars::ConfigError& e)
    {
        std::cerr << "strainwars: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "strainwars: configuration error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (name == "show")
    {
        std::cout << strainwars::serialize_config(config);
        return 0;
    }

    try
    {
        const auto manifest = strainwars::run_experiment(config);
        for (const auto& f : manifest.outputs)
            std::cout << f.sha256 << "  " << f.path << '\n';
        std::cout << "manifest: " << manifest.manifest_path << " (" << manifest.wall_seconds << " s, seed "
                  << manifest.seed << ")\n";
    }
    catch (const std::exception& e)
    {
        std::cerr << "strainwars: " << to_string(config.experiment) << " failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
