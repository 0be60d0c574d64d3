#include "selock/config.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "selock/diagnostics.hpp"

namespace selock {

namespace {

EnvKind kind_from_string(const std::string& s) {
    if (s == "hypothesis") return EnvKind::Hypothesis;
    if (s == "pe_g") return EnvKind::PrefG;
    if (s == "pe_f") return EnvKind::PrefF;
    throw ConfigError("env.kind must be hypothesis | pe_g | pe_f");
}

std::string kind_to_string(EnvKind k) {
    switch (k) {
        case EnvKind::Hypothesis: return "hypothesis";
        case EnvKind::PrefG: return "pe_g";
        case EnvKind::PrefF: return "pe_f";
    }
    return "?";
}

CritiqueMode critique_mode_from_string(const std::string& s) {
    if (s == "default") return CritiqueMode::Default;
    if (s == "flodial") return CritiqueMode::FloDial;
    throw ConfigError("critique.mode must be default | flodial");
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

EnvFamily ExperimentConfig::family(std::uint64_t seed) const {
    EnvFamily f;
    f.kind = kind;
    f.hyp = hyp;
    f.pref = pref;
    f.base_seed = splitmix64(seed ^ 0xFA417);
    return f;
}

AgentSpec ExperimentConfig::spec() const {
    AgentSpec s = AgentSpec::for_family(family(0));
    s.ops = op_slate_from_names(agent.ops, agent.rho);
    return s;
}

AgentParams ExperimentConfig::initial_params(std::uint64_t seed) const {
    AgentSpec s = spec();
    if (agent.init == "zero") return zero_params(s);
    if (agent.init == "random") {
        Rng rng = make_rng(seed, 0x1417);
        return random_params(s, agent.init_scale, rng);
    }
    if (agent.init == "deficient") {
        int null_action = kind == EnvKind::Hypothesis ? (hyp.include_null_query ? 0 : -1) : 0;
        return init_deficient(s, null_action, agent.deficient);
    }
    throw ConfigError("agent.init must be deficient | random | zero");
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["env"] = {{"kind", kind_to_string(kind)},
                {"num_states", hyp.num_states},
                {"num_queries", hyp.num_queries},
                {"alphabet", hyp.alphabet},
                {"horizon", kind == EnvKind::Hypothesis ? hyp.horizon : pref.horizon},
                {"include_null_query", hyp.include_null_query},
                {"include_identity_query", hyp.include_identity_query},
                {"num_items", pref.num_items},
                {"num_attrs", pref.num_attrs},
                {"subset_size", pref.subset_size}};
    j["agent"] = {{"init", agent.init},
                  {"init_scale", agent.init_scale},
                  {"null_query_bias", agent.deficient.null_query_bias},
                  {"identity_bias", agent.deficient.identity_bias},
                  {"toward_uniform_bias", agent.deficient.toward_uniform_bias},
                  {"ops", agent.ops},
                  {"rho", agent.rho}};
    j["train"] = {{"algorithm", to_string(train.algorithm)},
                  {"lr", train.lr},
                  {"clip", train.clip},
                  {"clip_low", train.clip_low},
                  {"clip_high", train.clip_high},
                  {"gae_lambda", train.gae_lambda},
                  {"gamma", train.gamma},
                  {"group_size", train.group_size},
                  {"arew_mode", to_string(train.arew_mode)},
                  {"lambda_inj", train.lambda_inj},
                  {"steps", train.steps},
                  {"batch_size", train.batch_size},
                  {"diag_rollouts", train.diag_rollouts}};
    j["critique"] = {{"flip_alpha", train.flip_alpha},
                     {"mode", train.critique_mode == CritiqueMode::FloDial ? "flodial" : "default"}};
    j["diagnostics"] = {{"n_rollouts", diag.n_rollouts}, {"delta", diag.delta},
                        {"epsilon", diag.epsilon}};
    j["out_dir"] = out_dir;
    j["seeds"] = seeds;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("env")) {
        const auto& e = j.at("env");
        std::string kind_str = "hypothesis";
        maybe(e, "kind", kind_str);
        c.kind = kind_from_string(kind_str);
        maybe(e, "num_states", c.hyp.num_states);
        maybe(e, "num_queries", c.hyp.num_queries);
        maybe(e, "alphabet", c.hyp.alphabet);
        maybe(e, "include_null_query", c.hyp.include_null_query);
        maybe(e, "include_identity_query", c.hyp.include_identity_query);
        maybe(e, "num_items", c.pref.num_items);
        maybe(e, "num_attrs", c.pref.num_attrs);
        maybe(e, "subset_size", c.pref.subset_size);
        if (e.contains("horizon")) {
            c.hyp.horizon = e.at("horizon").get<int>();
            c.pref.horizon = c.hyp.horizon;
        }
    }
    if (j.contains("agent")) {
        const auto& a = j.at("agent");
        maybe(a, "init", c.agent.init);
        maybe(a, "init_scale", c.agent.init_scale);
        maybe(a, "null_query_bias", c.agent.deficient.null_query_bias);
        maybe(a, "identity_bias", c.agent.deficient.identity_bias);
        maybe(a, "toward_uniform_bias", c.agent.deficient.toward_uniform_bias);
        maybe(a, "ops", c.agent.ops);
        maybe(a, "rho", c.agent.rho);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        std::string alg = "ppo", mode = "off";
        maybe(t, "algorithm", alg);
        maybe(t, "arew_mode", mode);
        c.train.algorithm = algorithm_from_string(alg);
        c.train.arew_mode = arew_mode_from_string(mode);
        maybe(t, "lr", c.train.lr);
        maybe(t, "clip", c.train.clip);
        maybe(t, "clip_low", c.train.clip_low);
        maybe(t, "clip_high", c.train.clip_high);
        maybe(t, "gae_lambda", c.train.gae_lambda);
        maybe(t, "gamma", c.train.gamma);
        maybe(t, "group_size", c.train.group_size);
        maybe(t, "lambda_inj", c.train.lambda_inj);
        maybe(t, "steps", c.train.steps);
        maybe(t, "batch_size", c.train.batch_size);
        maybe(t, "diag_rollouts", c.train.diag_rollouts);
    }
    if (j.contains("critique")) {
        const auto& k = j.at("critique");
        maybe(k, "flip_alpha", c.train.flip_alpha);
        std::string mode = "default";
        maybe(k, "mode", mode);
        c.train.critique_mode = critique_mode_from_string(mode);
    }
    if (j.contains("diagnostics")) {
        const auto& d = j.at("diagnostics");
        maybe(d, "n_rollouts", c.diag.n_rollouts);
        maybe(d, "delta", c.diag.delta);
        maybe(d, "epsilon", c.diag.epsilon);
    }
    maybe(j, "out_dir", c.out_dir);
    maybe(j, "seeds", c.seeds);
    if (c.seeds.empty()) throw ConfigError("seed list must be nonempty");
    c.train.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

std::string ExperimentConfig::config_hash() const {
    // nlohmann::json objects are key-sorted, so the dump is canonical
    std::string dump = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["csv_paths"] = csv_paths;
    j["seconds"] = seconds;
    j["summary"] = summary;
    return j;
}

int worker_cap() {
    if (const char* env = std::getenv("SEL_LOCK_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

namespace {

constexpr const char* kVersion = "selock 0.1.0";

struct SeedResult {
    std::uint64_t seed = 0;
    std::string csv_path;
    double seconds = 0.0;
    double final_reward = 0.0;
    double final_as = 0.0;
    double final_bt = 0.0;
    double init_i_th = 0.0;
    double init_c_bt = 0.0;
    bool init_locked = false;
};

SeedResult run_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                        const std::filesystem::path& out) {
    auto t0 = std::chrono::steady_clock::now();
    SeedResult res;
    res.seed = seed;

    EnvFamily family = config.family(seed);
    AgentSpec spec = config.spec();
    AgentParams init = config.initial_params(seed);

    Rng diag_rng = make_rng(seed, 0xD1A6);
    long n0 = std::max<long>(64, config.diag.n_rollouts / 10);
    res.init_i_th = estimate_I_th(init, spec, family, n0, diag_rng).mean;
    res.init_c_bt = estimate_C_BT(init, spec, family, n0, diag_rng).mean;
    res.init_locked = in_locking_regime(res.init_i_th, res.init_c_bt, config.diag.delta,
                                        config.diag.epsilon);

    TrainingRun run = train(config.train, family, spec, init, seed);

    std::filesystem::path csv = out / ("metrics_seed" + std::to_string(seed) + ".csv");
    std::ofstream os(csv);
    os << metrics_csv_header() << "\n";
    for (const auto& m : run.series) os << metrics_csv_row(m, config.train, seed) << "\n";
    res.csv_path = csv.string();

    std::filesystem::path params_path = out / ("params_seed" + std::to_string(seed) + ".json");
    std::ofstream(params_path) << run.final_params.to_json() << "\n";

    if (!run.series.empty()) {
        int tail = std::min<int>(10, static_cast<int>(run.series.size()));
        for (int i = 0; i < tail; ++i) {
            const auto& m = run.series[run.series.size() - 1 - i];
            res.final_reward += m.mean_reward / tail;
            res.final_as += m.as_proxy_mean / tail;
            res.final_bt += m.bt_proxy_mean / tail;
        }
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

nlohmann::json summarize(const std::vector<SeedResult>& results) {
    nlohmann::json j;
    std::vector<double> rewards;
    for (const auto& r : results) {
        rewards.push_back(r.final_reward);
        j["per_seed"].push_back({{"seed", r.seed},
                                 {"final_reward", r.final_reward},
                                 {"final_as_proxy", r.final_as},
                                 {"final_bt_proxy", r.final_bt},
                                 {"initial_I_th", r.init_i_th},
                                 {"initial_C_BT", r.init_c_bt},
                                 {"initial_in_locking_regime", r.init_locked}});
    }
    MeanStderr ms = mean_stderr(rewards);
    j["final_reward_mean"] = ms.mean;
    j["final_reward_stderr"] = ms.stderr_;
    return j;
}

std::vector<SeedResult> run_seeds(const ExperimentConfig& config,
                                  const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    std::vector<SeedResult> results(config.seeds.size());
    const int workers = std::min<int>(worker_cap(), static_cast<int>(config.seeds.size()));
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < config.seeds.size(); i = next.fetch_add(1))
                results[i] = run_one_seed(config, config.seeds[i], out);
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
    std::filesystem::path out(config.out_dir);
    auto results = run_seeds(config, out);

    RunManifest manifest;
    manifest.config_hash = config.config_hash();
    manifest.version = kVersion;
    for (const auto& r : results) {
        manifest.csv_paths.push_back(r.csv_path);
        manifest.seconds.push_back(r.seconds);
    }
    manifest.summary = summarize(results);
    manifest.summary["config"] = config.to_json();

    std::ofstream(out / "summary.json") << manifest.summary.dump(2) << "\n";
    std::ofstream(out / "manifest.json") << manifest.to_json().dump(2) << "\n";
    return manifest;
}

RunManifest sweep_experiment(const ExperimentConfig& config, const nlohmann::json& grid) {
    auto axis = [&](const char* key, nlohmann::json fallback) {
        if (grid.contains(key) && grid.at(key).is_array() && !grid.at(key).empty())
            return grid.at(key);
        return fallback;
    };
    nlohmann::json alphas = axis("flip_alpha", nlohmann::json::array({config.train.flip_alpha}));
    nlohmann::json lambdas = axis("lambda_inj", nlohmann::json::array({config.train.lambda_inj}));
    nlohmann::json modes = axis("arew_mode", nlohmann::json::array({to_string(config.train.arew_mode)}));
    nlohmann::json algs = axis("algorithm", nlohmann::json::array({to_string(config.train.algorithm)}));
    if (alphas.empty() || lambdas.empty() || modes.empty() || algs.empty())
        throw UsageError("sweep: empty grid");

    std::filesystem::path out(config.out_dir);
    std::filesystem::create_directories(out);

    RunManifest manifest;
    manifest.config_hash = config.config_hash();
    manifest.version = kVersion;
    nlohmann::json table = nlohmann::json::array();

    int cell = 0;
    for (const auto& alg : algs)
        for (const auto& mode : modes)
            for (const auto& lam : lambdas)
                for (const auto& alpha : alphas) {
                    ExperimentConfig c = config;
                    c.train.algorithm = algorithm_from_string(alg.get<std::string>());
                    c.train.arew_mode = arew_mode_from_string(mode.get<std::string>());
                    c.train.lambda_inj = lam.get<double>();
                    c.train.flip_alpha = alpha.get<double>();
                    std::filesystem::path cell_dir = out / ("cell_" + std::to_string(cell++));
                    auto results = run_seeds(c, cell_dir);
                    nlohmann::json row = summarize(results);
                    row["algorithm"] = alg;
                    row["arew_mode"] = mode;
                    row["lambda_inj"] = lam;
                    row["flip_alpha"] = alpha;
                    row["dir"] = cell_dir.string();
                    table.push_back(row);
                    for (const auto& r : results) {
                        manifest.csv_paths.push_back(r.csv_path);
                        manifest.seconds.push_back(r.seconds);
                    }
                }
    manifest.summary["cells"] = table;
    manifest.summary["config"] = config.to_json();
    std::ofstream(out / "summary.json") << manifest.summary.dump(2) << "\n";
    std::ofstream(out / "manifest.json") << manifest.to_json().dump(2) << "\n";
    return manifest;
}

}  // namespace selock
