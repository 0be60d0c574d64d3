#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "selock/config.hpp"
#include "selock/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
    selock::ExperimentConfig config = selock::ExperimentConfig::load(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    selock::RunManifest manifest = selock::run_experiment(config);
    std::cout << manifest.summary.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path) {
    selock::ExperimentConfig config = selock::ExperimentConfig::load(config_path);
    std::ifstream in(grid_path);
    if (!in) throw selock::ConfigError("cannot open grid file: " + grid_path);
    nlohmann::json grid;
    try {
        in >> grid;
    } catch (const nlohmann::json::exception& e) {
        throw selock::ConfigError(std::string("grid parse error: ") + e.what());
    }
    selock::RunManifest manifest = selock::sweep_experiment(config, grid);
    std::cout << manifest.summary.dump(2) << "\n";
    return 0;
}

int cmd_verify(const std::string& suite, const std::string& report_path) {
    selock::VerifyReport report = selock::run_suite(suite);
    nlohmann::json j = report.to_json();
    for (const auto& r : report.results)
        std::cout << r.id << " " << (r.passed ? "PASS" : "FAIL") << " " << r.name << " ["
                  << r.detail << "] (" << r.seconds << "s)\n";
    if (!report_path.empty()) std::ofstream(report_path) << j.dump(2) << "\n";
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-locking laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_override, grid_path, suite, report_path;

    auto* run = app.add_subcommand("run", "train per seed, write metrics CSVs");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_override, "output directory override");

    auto* sweep = app.add_subcommand("sweep", "cross-product grid of training runs");
    sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
    sweep->add_option("--grid", grid_path, "grid spec (JSON)")->required();

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite, "core | theory | arew | all")->required();
    verify->add_option("--report", report_path, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(config_path, out_override);
        if (*sweep) return cmd_sweep(config_path, grid_path);
        return cmd_verify(suite, report_path);
    } catch (const selock::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const selock::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
