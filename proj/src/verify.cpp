#include "selock/verify.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "selock/config.hpp"
#include "selock/diagnostics.hpp"

namespace selock {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_cap(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

// Reference self-locking setup shared by A5 and A9.
ExperimentConfig reference_config() {
    ExperimentConfig c;
    c.kind = EnvKind::Hypothesis;
    c.hyp = HypConfig{};  // 8 states, 8 queries, binary feedback, horizon 6
    c.agent.init = "deficient";
    c.train.algorithm = Algorithm::PPO;
    c.train.lr = 0.1;
    c.train.steps = 200;
    c.train.batch_size = 32;
    c.train.group_size = 4;
    c.train.lambda_inj = 4.0;
    c.train.diag_rollouts = 32;
    c.seeds = {1, 2, 3, 4, 5};
    return c;
}

double tail_mean(const std::vector<StepMetrics>& series, double StepMetrics::*field, int k = 10) {
    if (series.empty()) return 0.0;
    int tail = std::min<int>(k, static_cast<int>(series.size()));
    double s = 0.0;
    for (int i = 0; i < tail; ++i) s += series[series.size() - 1 - i].*field;
    return s / tail;
}

double head_mean(const std::vector<StepMetrics>& series, double StepMetrics::*field, int k = 10) {
    if (series.empty()) return 0.0;
    int head = std::min<int>(k, static_cast<int>(series.size()));
    double s = 0.0;
    for (int i = 0; i < head; ++i) s += series[i].*field;
    return s / head;
}

ObservationFn random_obs_fn(int num_states, int num_queries, int alphabet, Rng& rng) {
    ObservationFn fn;
    fn.alphabet = alphabet;
    fn.table.resize(num_states, num_queries);
    for (int s = 0; s < num_states; ++s)
        for (int q = 0; q < num_queries; ++q)
            fn.table(s, q) = static_cast<int>(uniform_below(rng, alphabet));
    return fn;
}

Belief random_belief(int n, Rng& rng) {
    Belief b(n);
    for (int i = 0; i < n; ++i) b[i] = -std::log(std::max(uniform01(rng), 1e-300));
    return b / b.sum();
}

bool params_identical(const AgentParams& a, const AgentParams& b) {
    if (a.query_weights.rows() != b.query_weights.rows() ||
        a.query_weights.cols() != b.query_weights.cols() ||
        a.update_weights.rows() != b.update_weights.rows() ||
        a.update_weights.cols() != b.update_weights.cols())
        return false;
    for (int i = 0; i < a.query_weights.size(); ++i)
        if (a.query_weights.data()[i] != b.query_weights.data()[i]) return false;
    for (int i = 0; i < a.update_weights.size(); ++i)
        if (a.update_weights.data()[i] != b.update_weights.data()[i]) return false;
    return true;
}

AgentSpec spec_with_ops(const EnvFamily& family, std::vector<UpdateOp> ops) {
    AgentSpec spec = AgentSpec::for_family(family);
    spec.ops = std::move(ops);
    return spec;
}

}  // namespace

nlohmann::json CriterionResult::to_json() const {
    return {{"id", id}, {"name", name}, {"passed", passed}, {"detail", detail},
            {"seconds", seconds}};
}

bool VerifyReport::passed() const {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

nlohmann::json VerifyReport::to_json() const {
    nlohmann::json j;
    j["suite"] = suite;
    j["passed"] = passed();
    for (const auto& r : results) j["criteria"].push_back(r.to_json());
    return j;
}

// A1: exact identities.
CriterionResult check_exactness() {
    auto t0 = Clock::now();
    CriterionResult res{"A1", "exactness"};
    Rng rng = make_rng(11, 0xA1);
    std::ostringstream why;
    bool ok = true;

    double worst_norm = 0.0;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        int ns = 2 + static_cast<int>(uniform_below(rng, 7));
        int nq = 1 + static_cast<int>(uniform_below(rng, 6));
        int al = 2 + static_cast<int>(uniform_below(rng, 3));
        ObservationFn fn = random_obs_fn(ns, nq, al, rng);
        Belief b = random_belief(ns, rng);
        int state = static_cast<int>(uniform_below(rng, ns));
        int q = static_cast<int>(uniform_below(rng, nq));
        Belief post = bayes_update(b, q, fn(state, q), fn);
        worst_norm = std::max(worst_norm, std::abs(post.sum() - 1.0));
        if (std::abs(post.sum() - 1.0) > 1e-9 || !is_valid_belief(post)) {
            ok = false;
            why << "bayes normalization violated; ";
        }
        // null symbol is a no-op
        Belief same = bayes_update(b, q, kNullObs, fn);
        if ((same - b).cwiseAbs().maxCoeff() != 0.0) {
            ok = false;
            why << "null observation changed the belief; ";
        }
    }

    double worst_tel = 0.0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        int ns = 2 + static_cast<int>(uniform_below(rng, 4));
        int nq = 1 + static_cast<int>(uniform_below(rng, 4));
        ObservationFn fn = random_obs_fn(ns, nq, 2, rng);
        int state = static_cast<int>(uniform_below(rng, ns));
        QueryPolicy policy = [nq](const Belief&, int, Rng& r) {
            return static_cast<int>(uniform_below(r, nq));
        };
        OracleTrajectory traj =
            oracle_rollout(policy, fn, state, uniform_belief(ns), 4, rng);
        double lhs = traj.total_progress();
        double rhs = potential(traj.beliefs.back(), state) - potential(traj.beliefs.front(), state);
        worst_tel = std::max(worst_tel, std::abs(lhs - rhs));
        if (std::abs(lhs - rhs) > 1e-12) {
            ok = false;
            why << "telescoping identity violated; ";
        }
    }

    double worst_center = 0.0;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        int len = 1 + static_cast<int>(uniform_below(rng, 8));
        std::vector<int> labels(len);
        for (int& z : labels) z = static_cast<int>(uniform_below(rng, 3)) - 1;
        std::vector<double> u = margin_coeffs(labels);
        double s = 0.0;
        bool has_p = false, has_n = false;
        for (size_t i = 0; i < u.size(); ++i) {
            s += u[i];
            has_p |= labels[i] > 0;
            has_n |= labels[i] < 0;
        }
        worst_center = std::max(worst_center, std::abs(s));
        if (std::abs(s) > 1e-12) {
            ok = false;
            why << "margin coefficients do not sum to zero; ";
        }
        if (!(has_p && has_n))
            for (double v : u)
                if (v != 0.0) {
                    ok = false;
                    why << "single-class coefficients not all zero; ";
                }
    }

    double worst_soft = 0.0;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        EnvFamily family;
        family.base_seed = splitmix64(1000 + trial);
        AgentSpec spec = AgentSpec::for_family(family);
        Rng prng = make_rng(trial, 0x50F7);
        AgentParams params = random_params(spec, 1.0, prng);
        VectorXd fq = query_features(Eigen::Vector2d(uniform01(rng), uniform01(rng)),
                                     static_cast<int>(uniform_below(rng, spec.horizon)),
                                     spec.horizon);
        double mass_q = 0.0;
        for (int a = 0; a < spec.num_actions; ++a) mass_q += std::exp(query_logprob(params, fq, a));
        VectorXd fu = update_features(static_cast<int>(uniform_below(rng, spec.alphabet)),
                                      spec.alphabet, Eigen::Vector2d(0.3, 0.7), 1, spec.horizon);
        double mass_u = 0.0;
        for (int o = 0; o < spec.num_ops(); ++o) mass_u += std::exp(update_logprob(params, fu, o));
        worst_soft = std::max({worst_soft, std::abs(mass_q - 1.0), std::abs(mass_u - 1.0)});
        if (std::abs(mass_q - 1.0) > 1e-10 || std::abs(mass_u - 1.0) > 1e-10) {
            ok = false;
            why << "softmax logprobs do not normalize; ";
        }
    }

    res.passed = ok;
    res.detail = ok ? "norm " + fmt(worst_norm) + ", telescope " + fmt(worst_tel) + ", center " +
                          fmt(worst_center) + ", softmax " + fmt(worst_soft)
                    : why.str();
    res.seconds = elapsed(t0);
    return res;
}

// A2: analytic score gradient vs central finite differences.
CriterionResult check_gradient_oracle() {
    auto t0 = Clock::now();
    CriterionResult res{"A2", "gradient oracle"};
    double worst = 0.0;
    int checked = 0;
    bool ok = true;

    for (int trial = 0; trial < 120 && ok; ++trial) {
        EnvFamily family;
        family.kind = trial % 4 == 3 ? EnvKind::PrefG : EnvKind::Hypothesis;
        family.hyp = HypConfig{4, 4, 2, 3, true, false};
        family.pref = PrefConfig{4, 3, 2, 3, true};
        family.base_seed = splitmix64(0xA2000 + trial);
        AgentSpec spec = AgentSpec::for_family(family);
        Rng rng = make_rng(trial, 0xA2);
        AgentParams params = random_params(spec, 0.8, rng);
        auto episode = family.make(trial);
        Trajectory traj = rollout(params, spec, *episode, rng);

        Gradient grad = logprob_grad(params, spec, traj);
        auto logp = [&](const AgentParams& p) {
            double s = 0.0;
            for (const auto& st : traj.steps)
                s += query_logprob(p, st.fq, st.action) + update_logprob(p, st.fu, st.op_index);
            return s;
        };
        const double h = 1e-5;
        auto check_block = [&](MatrixXd AgentParams::*block, const MatrixXd& analytic) {
            for (int i = 0; i < analytic.size() && ok; ++i) {
                AgentParams plus = params, minus = params;
                (plus.*block).data()[i] += h;
                (minus.*block).data()[i] -= h;
                double fd = (logp(plus) - logp(minus)) / (2 * h);
                double an = analytic.data()[i];
                double denom = std::max(std::abs(an), std::abs(fd));
                double rel = denom > 1e-8 ? std::abs(an - fd) / denom : std::abs(an - fd);
                worst = std::max(worst, rel);
                ++checked;
                if (rel >= 1e-4) ok = false;
            }
        };
        check_block(&AgentParams::query_weights, grad.query);
        check_block(&AgentParams::update_weights, grad.update);
    }

    res.passed = ok;
    res.detail = "coords " + std::to_string(checked) + ", worst rel err " + fmt(worst);
    res.seconds = elapsed(t0);
    return res;
}

// A3: reweighting with lambda = 0, or with single-class labels, is bitwise the
// vanilla update.
CriterionResult check_lambda_zero() {
    auto t0 = Clock::now();
    CriterionResult res{"A3", "lambda-zero equivalence"};
    bool ok = true;
    std::ostringstream why;

    ExperimentConfig base = reference_config();
    base.train.steps = 15;
    base.train.diag_rollouts = 4;
    for (Algorithm alg : {Algorithm::PPO, Algorithm::GRPO, Algorithm::GSPO}) {
        ExperimentConfig c = base;
        c.train.algorithm = alg;
        EnvFamily family = c.family(3);
        AgentSpec spec = c.spec();
        AgentParams init = c.initial_params(3);

        TrainConfig vanilla = c.train;
        vanilla.arew_mode = ArewMode::Off;
        TrainConfig zero = c.train;
        zero.arew_mode = ArewMode::AsBt;
        zero.lambda_inj = 0.0;

        AgentParams pv = train(vanilla, family, spec, init, 3).final_params;
        AgentParams pz = train(zero, family, spec, init, 3).final_params;
        if (!params_identical(pv, pz)) {
            ok = false;
            why << to_string(alg) << ": lambda=0 trajectory diverged; ";
        }
    }

    // single-class labels with nonzero lambda: coefficients vanish, so the
    // shaped advantages are the outcome advantages bit for bit
    Rng rng = make_rng(7, 0xA3);
    for (int trial = 0; trial < 200 && ok; ++trial) {
        int len = 1 + static_cast<int>(uniform_below(rng, 8));
        std::vector<double> adv(len);
        for (double& a : adv) a = normal01(rng);
        std::vector<int> labels(len, uniform01(rng) < 0.5 ? 1 : -1);
        for (int& z : labels)
            if (uniform01(rng) < 0.3) z = 0;
        bool has_p = false, has_n = false;
        for (int z : labels) {
            has_p |= z > 0;
            has_n |= z < 0;
        }
        if (has_p && has_n) continue;
        std::vector<double> shaped = arew_shape(adv, margin_coeffs(labels), 0.7);
        for (int i = 0; i < len; ++i)
            if (shaped[i] != adv[i]) {
                ok = false;
                why << "single-class shaping altered advantages; ";
            }
    }

    res.passed = ok;
    res.detail = ok ? "ppo/grpo/gspo trajectories bit-identical; single-class shaping inert"
                    : why.str();
    res.seconds = elapsed(t0);
    return res;
}

// A4: enumeration oracle on tiny instances.
CriterionResult check_enumeration_oracle() {
    auto t0 = Clock::now();
    CriterionResult res{"A4", "enumeration oracle"};
    const int cases = 12;
    std::vector<std::string> fails(cases);
    std::vector<double> gaps(cases, 0.0);

    parallel_for(cases, [&](int i) {
        Rng rng = make_rng(100 + i, 0xA4);
        HypConfig cfg;
        cfg.num_states = 3 + static_cast<int>(uniform_below(rng, 3));  // 3..5
        cfg.num_queries = 2 + static_cast<int>(uniform_below(rng, 3));  // 2..4
        cfg.alphabet = 2;
        cfg.horizon = 2 + static_cast<int>(uniform_below(rng, 3));  // 2..4
        HypothesisEnv env = hyp_reset(cfg, 0xA400 + i);

        EnvFamily family;
        family.hyp = cfg;
        family.base_seed = 0;
        family.fixed_hyp = env;
        AgentSpec spec = AgentSpec::for_family(family);
        AgentParams params = random_params(spec, 0.7, rng);

        double exact = exact_I_th(params, spec, env);
        MeanStderr est = estimate_I_th(params, spec, family, 5000, rng);
        double gap = std::abs(exact - est.mean);
        gaps[i] = gap;
        if (gap > 3.0 * std::max(est.stderr_, 1e-12))
            fails[i] = "case " + std::to_string(i) + ": exact " + fmt(exact) + " vs " +
                       fmt(est.mean) + " +- " + fmt(est.stderr_) + "; ";
    });

    std::string why;
    double worst = 0.0;
    for (int i = 0; i < cases; ++i) {
        why += fails[i];
        worst = std::max(worst, gaps[i]);
    }
    res.passed = why.empty();
    res.detail = res.passed
                     ? std::to_string(cases) + " tiny envs within 3 sigma, worst gap " + fmt(worst)
                     : why;
    res.seconds = elapsed(t0);
    return res;
}

// Mean per-step AS proxy of a fixed policy over a fixed evaluation set.
double eval_as_proxy(const AgentParams& params, const AgentSpec& spec, const EnvFamily& family,
                     long n, std::uint64_t eval_seed) {
    double s = 0.0;
    long steps = 0;
    for (long i = 0; i < n; ++i) {
        Rng rng = make_rng(eval_seed, 0xE7A0 + static_cast<std::uint64_t>(i));
        auto episode = family.make(0xE7A000 + static_cast<std::uint64_t>(i));
        Trajectory traj = rollout(params, spec, *episode, rng);
        for (const auto& st : traj.steps) {
            s += st.as_proxy;
            ++steps;
        }
    }
    return steps > 0 ? s / static_cast<double>(steps) : 0.0;
}

// A5: the self-locking trap and its repair.
CriterionResult check_self_locking() {
    auto t0 = Clock::now();
    CriterionResult res{"A5", "self-locking reproduction and repair"};
    ExperimentConfig c = reference_config();
    const int ns = static_cast<int>(c.seeds.size());

    struct SeedOut {
        double init_as = 0, van_as = 0, van_reward = 0, van_bt = 0;
        double arew_reward = 0, arew_as = 0, arew_bt = 0;
    };
    std::vector<SeedOut> outs(ns);

    parallel_for(2 * ns, [&](int job) {
        int i = job % ns;
        std::uint64_t seed = c.seeds[i];
        EnvFamily family = c.family(seed);
        AgentSpec spec = c.spec();
        AgentParams init = c.initial_params(seed);
        TrainConfig tc = c.train;
        if (job < ns) {
            tc.arew_mode = ArewMode::Off;
            TrainingRun run = train(tc, family, spec, init, seed);
            outs[i].init_as = eval_as_proxy(init, spec, family, 2000, seed);
            outs[i].van_as = eval_as_proxy(run.final_params, spec, family, 2000, seed);
            outs[i].van_bt = tail_mean(run.series, &StepMetrics::bt_proxy_mean);
            outs[i].van_reward = tail_mean(run.series, &StepMetrics::mean_reward);
        } else {
            tc.arew_mode = ArewMode::AsBt;
            TrainingRun run = train(tc, family, spec, init, seed);
            outs[i].arew_reward = tail_mean(run.series, &StepMetrics::mean_reward);
            outs[i].arew_as = tail_mean(run.series, &StepMetrics::as_proxy_mean);
            outs[i].arew_bt = tail_mean(run.series, &StepMetrics::bt_proxy_mean);
        }
    });

    int locked = 0, gap_wins = 0;
    double van_as_sum = 0, arew_as_sum = 0, van_bt_sum = 0, arew_bt_sum = 0;
    std::ostringstream detail;
    for (int i = 0; i < ns; ++i) {
        const auto& o = outs[i];
        if (std::abs(o.van_as - o.init_as) <= 0.02) ++locked;
        if (o.arew_reward >= o.van_reward + 0.15) ++gap_wins;
        van_as_sum += o.van_as;
        arew_as_sum += o.arew_as;
        van_bt_sum += o.van_bt;
        arew_bt_sum += o.arew_bt;
        detail << "s" << c.seeds[i] << " vanilla r=" << fmt(o.van_reward)
               << " arew r=" << fmt(o.arew_reward) << " as " << fmt(o.init_as) << "->"
               << fmt(o.van_as) << "; ";
    }
    bool as_bt_higher = arew_as_sum > van_as_sum && arew_bt_sum > van_bt_sum;
    res.passed = locked == ns && gap_wins >= 4 && as_bt_higher;
    detail << "locked " << locked << "/" << ns << ", gap wins " << gap_wins << "/" << ns
           << ", AS " << fmt(van_as_sum / ns) << "->" << fmt(arew_as_sum / ns) << ", BT "
           << fmt(van_bt_sum / ns) << "->" << fmt(arew_bt_sum / ns);
    res.detail = detail.str();
    res.seconds = elapsed(t0);
    return res;
}

// A6: no BT, no AS drift; full BT, positive AS drift.
CriterionResult check_locking_drift() {
    auto t0 = Clock::now();
    CriterionResult res{"A6", "locking drift"};
    const long n = 2000;
    const double eta = 0.5;
    EnvFamily family;
    family.base_seed = splitmix64(0xA6);

    std::vector<int> noise_ok(5, 0), pos_ok(5, 0);
    std::vector<std::string> notes(5);
    parallel_for(5, [&](int s) {
        Rng rng = make_rng(40 + s, 0xA6);

        AgentSpec id_spec = spec_with_ops(family, {{kOpIdentity, 0.5}});
        AgentParams id_params = zero_params(id_spec);
        Rng prng = make_rng(40 + s, 0x1D);
        id_params.query_weights = random_params(id_spec, 0.6, prng).query_weights;
        DriftReport idr = projected_drift(id_params, id_spec, family, 'Q', eta, n, rng);
        double diff = idr.after.i_th.mean - idr.before.i_th.mean;
        double se = std::hypot(idr.after.i_th.stderr_, idr.before.i_th.stderr_);
        noise_ok[s] = std::abs(diff) <= 2.0 * se ? 1 : 0;
        notes[s] = "id " + fmt(diff) + "+-" + fmt(se);

        AgentSpec bf_spec = spec_with_ops(family, {{kOpBayesFull, 0.5}});
        AgentParams bf_params = zero_params(bf_spec);
        bf_params.query_weights = random_params(bf_spec, 0.6, prng).query_weights;
        DriftReport bfr = projected_drift(bf_params, bf_spec, family, 'Q', eta, n, rng);
        pos_ok[s] = bfr.after.i_th.mean > bfr.before.i_th.mean ? 1 : 0;
        notes[s] += " bayes " + fmt(bfr.after.i_th.mean - bfr.before.i_th.mean);
    });

    int noise_pass = 0, pos_pass = 0;
    std::string all;
    for (int s = 0; s < 5; ++s) {
        noise_pass += noise_ok[s];
        pos_pass += pos_ok[s];
        all += notes[s] + "; ";
    }
    res.passed = noise_pass == 5 && pos_pass >= 4;
    res.detail = "identity within noise " + std::to_string(noise_pass) + "/5, bayes positive " +
                 std::to_string(pos_pass) + "/5: " + all;
    res.seconds = elapsed(t0);
    return res;
}

// A7: unreliable belief tracking masks the reward signal; an interaction-blind
// agent is exactly insensitive to feedback.
CriterionResult check_observations() {
    auto t0 = Clock::now();
    CriterionResult res{"A7", "observation 2/3 reproduction"};
    EnvFamily family;
    family.base_seed = splitmix64(0xA7);

    std::vector<int> obs2_ok(5, 0);
    std::vector<std::string> notes(5);
    parallel_for(5, [&](int s) {
        AgentSpec spec = AgentSpec::for_family(family);
        Rng prng = make_rng(70 + s, 0xA7);
        AgentParams params = init_deficient(spec, 0);
        params.query_weights = random_params(spec, 0.6, prng).query_weights;
        Rng rng = make_rng(70 + s, 0x0B5);
        double corr_model;
        try {
            corr_model = reward_as_correlation(params, spec, family, BtMode::Model, 400, rng);
        } catch (const NumericError&) {
            corr_model = 0.0;  // degenerate rewards, treated as no correlation
        }
        double corr_oracle = reward_as_correlation(params, spec, family, BtMode::Oracle, 400, rng);
        obs2_ok[s] = corr_oracle > corr_model ? 1 : 0;
        notes[s] = "model " + fmt(corr_model) + " oracle " + fmt(corr_oracle);
    });

    int obs2_pass = 0;
    std::string all;
    for (int s = 0; s < 5; ++s) {
        obs2_pass += obs2_ok[s];
        all += notes[s] + "; ";
    }

    AgentSpec id_spec = spec_with_ops(family, {{kOpIdentity, 0.5}});
    Rng prng = make_rng(71, 0xA7);
    AgentParams id_params = random_params(id_spec, 0.6, prng);
    Rng rng = make_rng(71, 0x0B5);
    InteractionReport rep = interaction_sensitivity(id_params, id_spec, family, 400, rng);
    bool obs3_ok = rep.reward_normal == rep.reward_nullified && rep.belief_consistency == 1.0;

    res.passed = obs2_pass >= 4 && obs3_ok;
    res.detail = "oracle>model " + std::to_string(obs2_pass) + "/5 (" + all + "), nullified " +
                 fmt(rep.reward_normal) + "==" + fmt(rep.reward_nullified) + " consistency " +
                 fmt(rep.belief_consistency);
    res.seconds = elapsed(t0);
    return res;
}

// A8: the first-order critique-accuracy effect on AS informativeness.
CriterionResult check_accuracy_curve() {
    auto t0 = Clock::now();
    CriterionResult res{"A8", "accuracy effect curve"};
    const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    const int ns = 8;
    std::vector<std::vector<double>> effects(grid.size());
    for (auto& v : effects) v.resize(ns);

    parallel_for(ns, [&](int s) {
        HypConfig cfg{4, 4, 2, 2, true, false};
        HypothesisEnv env = hyp_reset(cfg, 0xA800 + s);
        EnvFamily family;
        family.hyp = cfg;
        family.fixed_hyp = env;
        AgentSpec spec = AgentSpec::for_family(family);
        Rng prng = make_rng(80 + s, 0xA8);
        AgentParams params = random_params(spec, 0.4, prng);
        Rng rng = make_rng(80 + s, 0x0C);
        auto curve = accuracy_effect_curve(params, spec, family, grid, 0.25, 1.0, 400, rng);
        for (size_t g = 0; g < grid.size(); ++g) effects[g][s] = curve[g].effect;
    });

    std::vector<double> means(grid.size());
    std::vector<double> ses(grid.size());
    for (size_t g = 0; g < grid.size(); ++g) {
        MeanStderr ms = mean_stderr(effects[g]);
        means[g] = ms.mean;
        ses[g] = ms.stderr_;
    }
    double rho = spearman(means, grid);
    bool mono = rho == 1.0;
    bool pos1 = means.back() > 0.0;
    bool neg0 = means.front() < 0.0;
    bool half = std::abs(means[2]) <= 2.0 * std::max(ses[2], 1e-12);

    res.passed = mono && pos1 && neg0 && half;
    std::ostringstream d;
    d << "means";
    for (size_t g = 0; g < grid.size(); ++g) d << " " << fmt(means[g]) << "+-" << fmt(ses[g]);
    d << ", spearman " << fmt(rho);
    res.detail = d.str();
    res.seconds = elapsed(t0);
    return res;
}

// A9: label-noise robustness trend.
CriterionResult check_robustness() {
    auto t0 = Clock::now();
    CriterionResult res{"A9", "robustness to flipped labels"};
    ExperimentConfig c = reference_config();
    const std::vector<double> alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    const int ns = static_cast<int>(c.seeds.size());
    const int cells = static_cast<int>(alphas.size());

    std::vector<std::vector<double>> rewards(cells + 1);  // last slot: vanilla
    for (auto& v : rewards) v.resize(ns);

    parallel_for((cells + 1) * ns, [&](int job) {
        int cell = job / ns;
        int i = job % ns;
        std::uint64_t seed = c.seeds[i];
        EnvFamily family = c.family(seed);
        AgentSpec spec = c.spec();
        AgentParams init = c.initial_params(seed);
        TrainConfig tc = c.train;
        if (cell < cells) {
            tc.arew_mode = ArewMode::AsBt;
            tc.flip_alpha = alphas[cell];
        } else {
            tc.arew_mode = ArewMode::Off;
        }
        TrainingRun run = train(tc, family, spec, init, seed);
        rewards[cell][i] = tail_mean(run.series, &StepMetrics::mean_reward);
    });

    std::vector<double> cell_means(cells + 1);
    for (int cell = 0; cell <= cells; ++cell) cell_means[cell] = mean_stderr(rewards[cell]).mean;
    bool trend = cell_means[0] > cell_means[cells - 1];
    bool no_collapse = cell_means[cells - 1] >= cell_means[cells] - 0.05;

    res.passed = trend && no_collapse;
    std::ostringstream d;
    for (int cell = 0; cell < cells; ++cell)
        d << "a=" << alphas[cell] << ":" << fmt(cell_means[cell]) << " ";
    d << "vanilla:" << fmt(cell_means[cells]);
    res.detail = d.str();
    res.seconds = elapsed(t0);
    return res;
}

// A10: normalization and ratio algebra of the group-based baselines.
CriterionResult check_baseline_algebra() {
    auto t0 = Clock::now();
    CriterionResult res{"A10", "baseline algebra"};
    Rng rng = make_rng(10, 0xA10);
    bool ok = true;
    std::ostringstream why;

    for (int trial = 0; trial < 10000 && ok; ++trial) {
        int g = 2 + static_cast<int>(uniform_below(rng, 7));
        std::vector<double> rewards(g);
        bool degenerate = uniform01(rng) < 0.1;
        double v0 = normal01(rng);
        for (double& r : rewards) r = degenerate ? v0 : normal01(rng);
        std::vector<double> adv = grpo_advantages(rewards);
        double mean = 0.0, var = 0.0;
        for (double a : adv) mean += a;
        mean /= g;
        for (double a : adv) var += (a - mean) * (a - mean);
        var /= g;
        bool all_zero = true;
        for (double a : adv) all_zero &= a == 0.0;
        if (degenerate) {
            if (!all_zero) { ok = false; why << "degenerate group not zeroed; "; }
        } else if (std::abs(mean) > 1e-9 || std::abs(var - 1.0) > 1e-9) {
            ok = false;
            why << "group normalization off: mean " << mean << " var " << var << "; ";
        }
    }

    for (int trial = 0; trial < 10000 && ok; ++trial) {
        int len = 1 + static_cast<int>(uniform_below(rng, 6));
        std::vector<double> lp(len), old(len);
        for (int i = 0; i < len; ++i) {
            lp[i] = -3.0 * uniform01(rng);
            old[i] = -3.0 * uniform01(rng);
        }
        std::vector<double> lp2 = lp, old2 = old;
        lp2.insert(lp2.end(), lp.begin(), lp.end());
        old2.insert(old2.end(), old.begin(), old.end());
        double r1 = gspo_ratio(lp, old);
        double r2 = gspo_ratio(lp2, old2);
        if (std::abs(r1 - r2) > 1e-12) {
            ok = false;
            why << "duplication changed the sequence ratio; ";
        }
    }

    res.passed = ok;
    res.detail = ok ? "20000 randomized cases" : why.str();
    res.seconds = elapsed(t0);
    return res;
}

VerifyReport run_suite(const std::string& suite) {
    VerifyReport report;
    report.suite = suite;
    auto add = [&](CriterionResult (*fn)()) { report.results.push_back(fn()); };
    if (suite == "core") {
        add(check_exactness);
        add(check_gradient_oracle);
        add(check_lambda_zero);
        add(check_baseline_algebra);
    } else if (suite == "theory") {
        add(check_enumeration_oracle);
        add(check_locking_drift);
        add(check_observations);
    } else if (suite == "arew") {
        add(check_lambda_zero);
        add(check_accuracy_curve);
        add(check_robustness);
    } else if (suite == "all") {
        add(check_exactness);
        add(check_gradient_oracle);
        add(check_lambda_zero);
        add(check_enumeration_oracle);
        add(check_self_locking);
        add(check_locking_drift);
        add(check_observations);
        add(check_accuracy_curve);
        add(check_robustness);
        add(check_baseline_algebra);
    } else {
        throw UsageError("unknown suite: " + suite + " (expected core | theory | arew | all)");
    }
    return report;
}

}  // namespace selock
