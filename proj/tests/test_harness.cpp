#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "selock/config.hpp"
#include "selock/verify.hpp"

using namespace selock;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig small_config(const std::string& out) {
    nlohmann::json j = {
        {"env", {{"kind", "hypothesis"}, {"num_states", 4}, {"num_queries", 3}, {"horizon", 3}}},
        {"train", {{"steps", 3}, {"batch_size", 4}, {"diag_rollouts", 4}}},
        {"seeds", {1, 2}},
        {"out_dir", out},
    };
    return ExperimentConfig::from_json(j);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parses with defaults and validates") {
    ExperimentConfig c = small_config("unused");
    CHECK(c.kind == EnvKind::Hypothesis);
    CHECK(c.hyp.num_states == 4);
    CHECK(c.hyp.horizon == 3);
    CHECK(c.train.algorithm == Algorithm::PPO);
    CHECK(c.train.lr == 0.1);
    CHECK(c.agent.init == "deficient");
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});

    // round trip preserves everything, with defaults made explicit
    ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());

    CHECK_THROWS_AS(ExperimentConfig::from_json({{"seeds", nlohmann::json::array()}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"env", {{"kind", "marslander"}}}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(
                        {{"train", {{"algorithm", "grpo"}, {"group_size", 3}, {"batch_size", 4}}}}),
                    ConfigError);
}

TEST_CASE("config hash is stable under key reordering") {
    ExperimentConfig c = small_config("unused");
    nlohmann::json j = c.to_json();
    // rebuild the object inserting keys in reverse order
    nlohmann::json reordered;
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) reordered[*it] = j.at(*it);
    CHECK(ExperimentConfig::from_json(reordered).config_hash() == c.config_hash());

    ExperimentConfig other = small_config("unused");
    other.train.lr = 0.2;
    CHECK(other.config_hash() != c.config_hash());
}

TEST_CASE("run_experiment writes per-seed CSVs, summary, and manifest") {
    TempDir dir("selock_harness_run");
    ExperimentConfig c = small_config(dir.path.string());
    RunManifest manifest = run_experiment(c);

    CHECK(manifest.csv_paths.size() == 2);
    CHECK(manifest.config_hash == c.config_hash());
    for (const auto& p : manifest.csv_paths) {
        std::string text = slurp(p);
        CHECK(text.rfind(metrics_csv_header(), 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 3 steps
    }
    CHECK(fs::exists(dir.path / "summary.json"));
    CHECK(fs::exists(dir.path / "manifest.json"));
    nlohmann::json summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
    CHECK(summary.at("per_seed").size() == 2);
    CHECK(summary.contains("final_reward_mean"));
}

TEST_CASE("identical configs give byte-identical CSVs; steps=0 gives a bare header") {
    TempDir d1("selock_harness_a"), d2("selock_harness_b");
    ExperimentConfig c1 = small_config(d1.path.string());
    ExperimentConfig c2 = small_config(d2.path.string());
    run_experiment(c1);
    run_experiment(c2);
    CHECK(slurp(d1.path / "metrics_seed1.csv") == slurp(d2.path / "metrics_seed1.csv"));
    CHECK(slurp(d1.path / "metrics_seed2.csv") == slurp(d2.path / "metrics_seed2.csv"));

    TempDir d3("selock_harness_c");
    ExperimentConfig c3 = small_config(d3.path.string());
    c3.train.steps = 0;
    run_experiment(c3);
    CHECK(slurp(d3.path / "metrics_seed1.csv") == metrics_csv_header() + "\n");
    nlohmann::json summary = nlohmann::json::parse(slurp(d3.path / "summary.json"));
    CHECK(summary.at("per_seed")[0].contains("initial_I_th"));
}

TEST_CASE("sweep covers the grid and a singleton grid matches run") {
    TempDir dir("selock_harness_sweep");
    ExperimentConfig c = small_config(dir.path.string());
    nlohmann::json grid = {{"flip_alpha", {0.0, 0.3}}, {"lambda_inj", {0.5, 1.0}}};
    RunManifest manifest = sweep_experiment(c, grid);
    nlohmann::json cells = manifest.summary.at("cells");
    CHECK(cells.size() == 4);
    CHECK(manifest.csv_paths.size() == 8);  // 4 cells x 2 seeds

    TempDir d_run("selock_harness_single_run"), d_single("selock_harness_single_sweep");
    ExperimentConfig cr = small_config(d_run.path.string());
    run_experiment(cr);
    ExperimentConfig cs = small_config(d_single.path.string());
    sweep_experiment(cs, nlohmann::json::object());
    CHECK(slurp(d_run.path / "metrics_seed1.csv") ==
          slurp(d_single.path / "cell_0" / "metrics_seed1.csv"));
}

TEST_CASE("worker cap honors the environment override") {
    char saved[32] = {0};
    if (const char* v = std::getenv("SEL_LOCK_THREADS")) std::snprintf(saved, 31, "%s", v);
    setenv("SEL_LOCK_THREADS", "3", 1);
    CHECK(worker_cap() == 3);
    setenv("SEL_LOCK_THREADS", "0", 1);  // invalid values fall back
    CHECK(worker_cap() >= 1);
    if (saved[0]) setenv("SEL_LOCK_THREADS", saved, 1);
    else unsetenv("SEL_LOCK_THREADS");
}

TEST_CASE("pe env configs drive the harness too") {
    TempDir dir("selock_harness_pe");
    nlohmann::json j = {
        {"env", {{"kind", "pe_g"}, {"num_items", 4}, {"num_attrs", 3}, {"subset_size", 2},
                 {"horizon", 3}}},
        {"agent", {{"init", "random"}}},
        {"train", {{"steps", 2}, {"batch_size", 4}, {"diag_rollouts", 4}}},
        {"seeds", {5}},
        {"out_dir", dir.path.string()},
    };
    ExperimentConfig c = ExperimentConfig::from_json(j);
    CHECK(c.kind == EnvKind::PrefG);
    RunManifest manifest = run_experiment(c);
    CHECK(manifest.csv_paths.size() == 1);
    std::string text = slurp(manifest.csv_paths[0]);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("verify rejects unknown suites") {
    CHECK_THROWS_AS(run_suite("everything"), UsageError);
}
