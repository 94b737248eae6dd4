// gmpl: experiment runner. Exit codes: 0 success, 1 invalid configuration or
// usage, 2 numeric failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "gmpl/errors.hpp"
#include "gmpl/version.hpp"

namespace {

using namespace gmpl::cli;

std::string flag_name(std::string key) {
    for (char& ch : key)
        if (ch == '_') ch = '-';
    return "--" + key;
}

struct Invocation {
    const ExperimentInfo* info = nullptr;
    std::string config_file;
    std::map<std::string, std::string> flags;
    std::vector<std::string> sets;  // run --set key=value
};

ConfigEntries overrides_of(const Invocation& inv, CLI::App* sub) {
    ConfigEntries out;
    if (inv.info)
        for (const ParamSpec& p : inv.info->params)
            if (sub->get_option(flag_name(p.key))->count() > 0) out.emplace_back(p.key, inv.flags.at(p.key));
    for (const std::string& s : inv.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw gmpl::ConfigError("--set expects key=value, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

int execute(const ExperimentInfo& info, const ConfigEntries& file, const ConfigEntries& overrides) {
    const ResolvedConfig cfg = resolve(info, file, overrides);
    const Outcome outcome = run_experiment(cfg);
    if (info.writes_files) write_outputs(outcome, cfg.str("out"));
    std::cout << outcome.text;
    if (info.writes_files)
        for (const OutputFile& f : outcome.files) std::cout << "wrote " << cfg.str("out") << "/" << f.name << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gmpl: Poisson limit experiments for the Gauss map", "gmpl"};
    app.set_version_flag("--version", std::string(gmpl::kVersion));
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, Invocation>> subs;
    subs.reserve(gmpl::cli::experiments().size() + 1);
    for (const ExperimentInfo& e : gmpl::cli::experiments()) {
        CLI::App* sub = app.add_subcommand(e.name, e.summary);
        subs.emplace_back(sub, Invocation{&e, {}, {}, {}});
        Invocation& inv = subs.back().second;
        sub->add_option("--config", inv.config_file, "key = value or JSON config file");
        for (const ParamSpec& p : e.params) {
            const std::string help = p.fallback.empty() ? p.help : p.help + " (default " + p.fallback + ")";
            sub->add_option(flag_name(p.key), inv.flags[p.key], help);
        }
    }
    CLI::App* run = app.add_subcommand("run", "run the experiment named by `experiment` in a config file");
    subs.emplace_back(run, Invocation{});
    Invocation& run_inv = subs.back().second;
    run->add_option("--config", run_inv.config_file, "config file")->required();
    run->add_option("--set", run_inv.sets, "override, key=value");

    if (argc > 1 && argv[1][0] != '-' && !find_experiment(argv[1]) && std::string(argv[1]) != "run") {
        std::cerr << "gmpl: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "gmpl: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        for (auto& [sub, inv] : subs) {
            if (!sub->parsed()) continue;
            ConfigEntries file;
            if (!inv.config_file.empty()) file = load_config(inv.config_file);
            const ConfigEntries over = overrides_of(inv, sub);
            if (inv.info) return execute(*inv.info, file, over);

            std::optional<std::string> name;
            for (const auto& [k, v] : file)
                if (k == "experiment") name = v;
            if (!name) throw gmpl::ConfigError("config file has no `experiment` key");
            const ExperimentInfo* info = find_experiment(*name);
            if (!info) throw gmpl::ConfigError("unknown experiment '" + *name + "'");
            return execute(*info, file, over);
        }
    } catch (const gmpl::ConfigError& e) {
        std::cerr << "gmpl: invalid config: " << e.what() << "\n";
        return 1;
    } catch (const gmpl::DomainError& e) {
        std::cerr << "gmpl: invalid config: " << e.what() << "\n";
        return 1;
    } catch (const gmpl::NumericError& e) {
        std::cerr << "gmpl: numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gmpl: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
