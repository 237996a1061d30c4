#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qshare/experiments.h"

#ifndef QSHARE_VERSION
#define QSHARE_VERSION "0.0.0"
#endif

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;
constexpr int kCheckFailed = 4;

void print_config_error(const qshare::ConfigError &e, const std::string &path) {
    std::cerr << "error: invalid config '" << path << "'\n";
    for (const auto &v : e.violations()) {
        std::cerr << "  " << v.field << ": " << v.message << "\n";
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multi-tenant quantum cloud attack and defense simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out_dir;
    bool quiet = false, check = false;
    size_t threads = 1;

    auto *run = app.add_subcommand("run", "Run a scenario config and write its report bundle");
    run->add_option("config", config_path, "Scenario config (JSON)")->required();
    run->add_option("--seed", seed, "Override the config's root seed");
    run->add_option("--out", out_dir, "Output directory (overrides the config's out)");
    run->add_flag("--quiet", quiet, "Print nothing on success");
    run->add_flag("--check", check, "Exit 4 when a built-in property check fails");
    run->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(size_t{1}, size_t{256}));

    auto *validate = app.add_subcommand("validate", "Validate a scenario config");
    validate->add_option("config", config_path, "Scenario config (JSON)")->required();
    validate->add_flag("--quiet", quiet, "Print nothing on success");

    auto *list = app.add_subcommand("list-devices", "List builtin device names");
    auto *version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*version) {
        std::cout << "qshare " << QSHARE_VERSION << "\n";
        return kOk;
    }
    if (*list) {
        for (const auto &name : qshare::builtin_device_names()) {
            std::string detail;
            if (name.find(':') == std::string::npos) {
                auto g = qshare::builtin_graph(name);
                detail = std::to_string(g.n_qubits()) + " qubits, " + std::to_string(g.edges().size()) + " edges";
            } else if (name.rfind("grid", 0) == 0) {
                detail = "R x C grid lattice, e.g. grid:4x5";
            } else {
                detail = "N-qubit line, e.g. line:3";
            }
            std::cout << name << "\t" << detail << "\n";
        }
        return kOk;
    }

    qshare::ScenarioConfig cfg;
    try {
        cfg = qshare::load_config_file(config_path);
    } catch (const qshare::ConfigError &e) {
        print_config_error(e, config_path);
        return kUsage;
    }
    if (*validate) {
        if (!quiet) {
            std::cout << "OK\n";
        }
        return kOk;
    }

    if (seed) {
        cfg.seed = *seed;
    }
    if (!out_dir.empty()) {
        cfg.out = out_dir;
    }
    qshare::ReportBundle bundle;
    try {
        bundle = qshare::run_scenario(cfg, {threads});
        qshare::write_bundle(bundle, cfg.out);
    } catch (const std::exception &e) {
        std::cerr << "error: scenario '" << qshare::scenario_name(cfg.scenario) << "' failed: " << e.what() << "\n";
        return kRuntime;
    }
    if (!quiet) {
        std::cout << bundle.summary;
        std::cout << "wrote " << cfg.out << "\n";
    }
    if (check && !bundle.passed()) {
        if (quiet) {
            for (const auto &c : bundle.checks) {
                if (!c.passed) {
                    std::cerr << "check failed: " << c.name << ": " << c.detail << "\n";
                }
            }
        }
        return kCheckFailed;
    }
    return kOk;
}
