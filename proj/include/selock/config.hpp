#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "selock/trainers.hpp"

namespace selock {

struct AgentConfig {
    std::string init = "deficient";  // deficient | random | zero
    double init_scale = 0.3;
    DeficientConfig deficient;
    std::vector<std::string> ops = {"identity", "bayes_full", "bayes_partial", "toward_uniform",
                                    "anti_bayes"};
    double rho = 0.5;
};

struct DiagConfig {
    long n_rollouts = 2000;
    double delta = 0.05;
    double epsilon = 0.05;
};

struct ExperimentConfig {
    EnvKind kind = EnvKind::Hypothesis;
    HypConfig hyp;
    PrefConfig pref;
    AgentConfig agent;
    TrainConfig train;
    DiagConfig diag;
    std::string out_dir = "out";
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    EnvFamily family(std::uint64_t seed) const;
    AgentSpec spec() const;
    AgentParams initial_params(std::uint64_t seed) const;

    // round-trips with every default filled in, so runs are self-describing
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    std::string config_hash() const;  // stable under key reordering
};

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::vector<std::string> csv_paths;
    std::vector<double> seconds;
    nlohmann::json summary;

    nlohmann::json to_json() const;
};

int worker_cap();  // SEL_LOCK_THREADS, defaults to hardware concurrency

// Executes train per seed, writes one metrics CSV per seed plus summary.json
// and manifest.json under out_dir.
RunManifest run_experiment(const ExperimentConfig& config);

// Cross product of the grid (flip_alpha, lambda_inj, arew_mode, algorithm)
// times seeds; one summary row per cell.
RunManifest sweep_experiment(const ExperimentConfig& config, const nlohmann::json& grid);

}  // namespace selock
