// Command line front end: thinhom <command> --config run.json [--out dir] [--serial] [--verbose]

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "thinhom/commands.hpp"

int main(int argc, char** argv) {
    using namespace thinhom;
    CLI::App app{"Effective coefficients, limit solves and thin-domain validation for rough thin domains"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool serial = false, verbose = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory, overrides the configured one");
        sub->add_flag("--serial", serial, "single-threaded, byte-reproducible run");
        sub->add_flag("--verbose", verbose, "progress on stderr");
    };
    for (const char* name : {"coeffs", "solve", "validate", "unfold-check"}) {
        static const std::map<std::string, std::string> help{
            {"coeffs", "effective coefficients with provenance"},
            {"solve", "solve the limit problem on omega"},
            {"validate", "compare thin-domain solves with the limit solution"},
            {"unfold-check", "two-path checks of the unfolding identities"}};
        add_common(app.add_subcommand(name, help.at(name)));
    }
    auto* profiles = app.add_subcommand("profiles", "list the profile catalog");
    bool as_json = false;
    profiles->add_flag("--json", as_json, "print the catalog as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (profiles->parsed()) {
        if (as_json) {
            std::cout << profiles_json().dump(2) << '\n';
        } else {
            for (const auto& e : profile_catalog()) {
                std::cout << e.name << "  " << e.formula << "  defaults:";
                for (double d : e.defaults) std::cout << ' ' << d;
                std::cout << '\n';
            }
        }
        return kExitOk;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    Json config;
    try {
        config = load_config_file(config_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    CommandOptions opt;
    if (!out_dir.empty()) opt.out = out_dir;
    opt.serial = serial;
    opt.verbose = verbose;
    return run_command(command, config, opt);
}
