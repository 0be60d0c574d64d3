#include "selock/diagnostics.hpp"

#include <cassert>
#include <functional>

namespace selock {

namespace {

// Oracle rollout through the Episode surface: queries from the agent's query
// policy conditioned on the oracle state, updates by the strong operator.
struct EpisodeOracleRun {
    double total_progress = 0.0;
    double initial_readout = 0.0;
    double final_readout = 0.0;
};

EpisodeOracleRun oracle_run(const AgentParams& params, Episode& episode, Rng& rng) {
    EpisodeOracleRun run;
    VectorXd state = episode.initial_state();
    run.initial_readout = episode.readout(state);
    const int H = episode.horizon();
    for (int t = 0; t < H; ++t) {
        VectorXd fq = query_features(episode.state_summary(state), t, H);
        QuerySample qs = select_query(params, fq, rng);
        int obs = episode.peek(qs.action);
        VectorXd next = episode.apply_operator(kOpBayesFull, 1.0, state, qs.action, obs);
        run.total_progress += episode.readout(next) - episode.readout(state);
        state = next;
    }
    run.final_readout = episode.readout(state);
    return run;
}

}  // namespace

MeanStderr estimate_I_th(const AgentParams& params, const AgentSpec& spec, const EnvFamily& family,
                         long n, Rng& rng) {
    (void)spec;
    if (n < 1) throw UsageError("estimate_I_th: n must be positive");
    std::vector<double> samples;
    samples.reserve(n);
    for (long i = 0; i < n; ++i) {
        auto ep = family.make(static_cast<std::uint64_t>(i));
        EpisodeOracleRun run = oracle_run(params, *ep, rng);
        // telescoping identity, checked per rollout
        if (std::abs(run.total_progress - (run.final_readout - run.initial_readout)) > 1e-12)
            throw NumericError("estimate_I_th: telescoping identity violated");
        samples.push_back(run.total_progress);
    }
    return mean_stderr(samples);
}

double exact_I_th(const AgentParams& params, const AgentSpec& spec, const HypothesisEnv& env) {
    if (env.config.num_states > 5 || env.config.num_queries > 4 || env.config.horizon > 4)
        throw UsageError("exact_I_th: instance too large for enumeration");
    const int H = env.config.horizon;
    std::function<double(const Belief&, int)> value = [&](const Belief& b, int t) -> double {
        if (t == H) return 0.0;
        VectorXd fq = query_features(hyp_summary(b), t, H);
        VectorXd probs = softmax(params.query_weights * fq);
        double v = 0.0;
        for (int q = 0; q < env.config.num_queries; ++q) {
            int o = env.obs_fn(env.true_state, q);
            Belief next = bayes_update(b, q, o, env.obs_fn);
            double progress = potential(next, env.true_state) - potential(b, env.true_state);
            v += probs[q] * (progress + value(next, t + 1));
        }
        return v;
    };
    return value(uniform_belief(env.config.num_states), 0);
}

MeanStderr estimate_C_BT(const AgentParams& params, const AgentSpec& spec, const EnvFamily& family,
                         long n, Rng& rng) {
    if (n < 1) throw UsageError("estimate_C_BT: n must be positive");
    std::vector<double> samples;
    samples.reserve(n);
    for (long i = 0; i < n; ++i) {
        auto ep = family.make(static_cast<std::uint64_t>(i));
        Trajectory traj = rollout(params, spec, *ep, rng);
        double absorbed = 0.0;
        for (const auto& st : traj.steps)
            absorbed += std::max(st.readout_after - st.readout_before, 0.0);
        samples.push_back(absorbed);
    }
    return mean_stderr(samples);
}

bool in_locking_regime(double i_th, double c_bt, double delta, double epsilon) {
    if (delta <= 0.0 || epsilon <= 0.0) throw UsageError("in_locking_regime: thresholds must be positive");
    return i_th <= delta && c_bt <= epsilon;
}

DriftReport projected_drift(const AgentParams& params, const AgentSpec& spec,
                            const EnvFamily& family, char channel, double eta, long n, Rng& rng) {
    if (channel != 'Q' && channel != 'U') throw UsageError("projected_drift: channel must be Q or U");
    DriftReport report;
    report.channel = channel;
    report.eta = eta;

    // common random numbers: before/after share streams so the drift of an
    // unchanged parameter vector is exactly zero
    const std::uint64_t crn = rng();
    Rng r_i = make_rng(crn, 1), r_c = make_rng(crn, 2);
    report.before.i_th = estimate_I_th(params, spec, family, n, r_i);
    report.before.c_bt = estimate_C_BT(params, spec, family, n, r_c);
    report.before.n_rollouts = n;

    // channel outcome gradient with a mean-reward baseline
    std::vector<Trajectory> trajs;
    trajs.reserve(n);
    double mean_reward = 0.0;
    for (long i = 0; i < n; ++i) {
        auto ep = family.make(static_cast<std::uint64_t>(i));
        trajs.push_back(rollout(params, spec, *ep, rng));
        mean_reward += trajs.back().reward;
    }
    mean_reward /= static_cast<double>(n);
    Gradient g = zero_gradient(spec);
    for (const auto& traj : trajs) {
        double adv = traj.reward - mean_reward;
        for (const auto& st : traj.steps) {
            if (channel == 'Q') accumulate_query_grad(params, st.fq, st.action, adv, g.query);
            else accumulate_update_grad(params, st.fu, st.op_index, adv, g.update);
        }
    }
    if (!g.query.allFinite() || !g.update.allFinite())
        throw NumericError("projected_drift: non-finite gradient");

    AgentParams moved = params;
    if (channel == 'Q') moved.query_weights += (eta / static_cast<double>(n)) * g.query;
    else moved.update_weights += (eta / static_cast<double>(n)) * g.update;

    Rng r_i2 = make_rng(crn, 1), r_c2 = make_rng(crn, 2);
    report.after.i_th = estimate_I_th(moved, spec, family, n, r_i2);
    report.after.c_bt = estimate_C_BT(moved, spec, family, n, r_c2);
    report.after.n_rollouts = n;

    report.dpos_i_th = std::max(report.after.i_th.mean - report.before.i_th.mean, 0.0);
    report.dpos_c_bt = std::max(report.after.c_bt.mean - report.before.c_bt.mean, 0.0);
    return report;
}

long escape_bound(double i_th0, const EscapeConstants& constants, double eta, double epsilon) {
    if (eta <= 0.0) throw UsageError("escape_bound: eta must be positive");
    double m = constants.m();
    if (m <= 0.0) throw UsageError("escape_bound: m must be positive");
    double num = epsilon + constants.big_c * eta;
    double den = i_th0 + constants.big_c * eta;
    if (den <= 0.0) return 0;
    double k = std::floor(std::log(num / den) / (eta * m));
    return k > 0.0 ? static_cast<long>(k) : 0;
}

InteractionReport interaction_sensitivity(const AgentParams& params, const AgentSpec& spec,
                                          const EnvFamily& family, long n, Rng& rng) {
    InteractionReport report;
    long consistent = 0;
    for (long i = 0; i < n; ++i) {
        auto ep = family.make(static_cast<std::uint64_t>(i));
        Trajectory normal = rollout(params, spec, *ep, rng);
        report.reward_normal += normal.reward;

        auto ep_null = family.make(static_cast<std::uint64_t>(i));
        ep_null->set_nullified(true);
        Trajectory nulled = rollout(params, spec, *ep_null, rng);
        report.reward_nullified += nulled.reward;
        if (belief_argmax(nulled.final_state) == belief_argmax(nulled.initial_state)) ++consistent;
    }
    report.reward_normal /= static_cast<double>(n);
    report.reward_nullified /= static_cast<double>(n);
    report.belief_consistency = static_cast<double>(consistent) / static_cast<double>(n);
    return report;
}

double replay_reward(const AgentSpec& spec, const Episode& episode, const Trajectory& traj,
                     BtMode mode) {
    VectorXd state = episode.initial_state();
    for (const auto& st : traj.steps) {
        if (mode == BtMode::Oracle) {
            state = episode.apply_operator(kOpBayesFull, 1.0, state, st.action, st.observation);
        } else {
            const UpdateOp& op = spec.ops.at(st.op_index);
            state = episode.apply_operator(op.code, op.rate, state, st.action, st.observation);
        }
    }
    return episode.reward(state);
}

double reward_as_correlation(const AgentParams& params, const AgentSpec& spec,
                             const EnvFamily& family, BtMode mode, long n, Rng& rng) {
    if (n < 10) throw UsageError("reward_as_correlation: need n >= 10");
    std::vector<double> as_totals, rewards;
    for (long i = 0; i < n; ++i) {
        auto ep = family.make(static_cast<std::uint64_t>(i));
        Trajectory traj = rollout(params, spec, *ep, rng);
        double as_total = 0.0;
        for (const auto& st : traj.steps) as_total += st.as_proxy;
        as_totals.push_back(as_total);
        rewards.push_back(replay_reward(spec, *ep, traj, mode));
    }
    return pearson(as_totals, rewards);  // throws on zero-variance sample
}

OracleAsLabels oracle_as_labels(const AgentParams& params, const AgentSpec& spec,
                                const Episode& episode, const Trajectory& traj) {
    OracleAsLabels out;
    VectorXd oracle_state = episode.initial_state();
    const int H = episode.horizon();
    for (const auto& st : traj.steps) {
        VectorXd fq = query_features(episode.state_summary(oracle_state), st.turn, H);
        VectorXd probs = softmax(params.query_weights * fq);
        double base = episode.readout(oracle_state);
        double expected = 0.0;
        std::vector<double> progress(episode.num_actions());
        for (int a = 0; a < episode.num_actions(); ++a) {
            VectorXd next =
                episode.apply_operator(kOpBayesFull, 1.0, oracle_state, a, episode.peek(a));
            progress[a] = episode.readout(next) - base;
            expected += probs[a] * progress[a];
        }
        double adv = progress[st.action] - expected;
        out.advantages.push_back(adv);
        out.labels.push_back(adv >= 0.0 ? 1 : -1);  // tie maps to +1
        oracle_state = episode.apply_operator(kOpBayesFull, 1.0, oracle_state, st.action,
                                              episode.peek(st.action));
    }
    (void)spec;
    return out;
}

std::vector<AccuracyEffect> accuracy_effect_curve(const AgentParams& params, const AgentSpec& spec,
                                                  const EnvFamily& family,
                                                  const std::vector<double>& acc_grid, double eta,
                                                  double lambda_inj, long n, Rng& rng) {
    // Outcome gradient of the query channel (shared by every grid point).
    std::vector<Trajectory> trajs;
    std::vector<std::unique_ptr<Episode>> eps;
    double mean_reward = 0.0;
    for (long i = 0; i < n; ++i) {
        eps.push_back(family.make(static_cast<std::uint64_t>(i)));
        trajs.push_back(rollout(params, spec, *eps.back(), rng));
        mean_reward += trajs.back().reward;
    }
    mean_reward /= static_cast<double>(n);
    MatrixXd g_outcome = MatrixXd::Zero(spec.num_actions, spec.fq_dim());
    for (const auto& traj : trajs) {
        double adv = traj.reward - mean_reward;
        for (const auto& st : traj.steps)
            accumulate_query_grad(params, st.fq, st.action, adv, g_outcome);
    }
    g_outcome /= static_cast<double>(n);

    auto measure = [&](const AgentParams& p) {
        if (family.fixed_hyp && family.fixed_hyp->config.num_states <= 5 &&
            family.fixed_hyp->config.num_queries <= 4 && family.fixed_hyp->config.horizon <= 4)
            return exact_I_th(p, spec, *family.fixed_hyp);
        Rng local = make_rng(0xACC0, 0);
        return estimate_I_th(p, spec, family, std::max(n, 2000L), local).mean;
    };

    AgentParams unshaped = params;
    unshaped.query_weights += eta * g_outcome;
    double i_th_unshaped = measure(unshaped);

    std::vector<AccuracyEffect> out;
    for (double target : acc_grid) {
        // margin-coefficient gradient from labels agreeing with the oracle
        // direction at the target rate
        MatrixXd g_margin = MatrixXd::Zero(spec.num_actions, spec.fq_dim());
        for (long i = 0; i < static_cast<long>(trajs.size()); ++i) {
            OracleAsLabels oracle = oracle_as_labels(params, spec, *eps[i], trajs[i]);
            std::vector<int> labels(oracle.labels.size());
            for (size_t t = 0; t < labels.size(); ++t)
                labels[t] = (uniform01(rng) < target) ? oracle.labels[t] : -oracle.labels[t];
            auto u = margin_coeffs(labels);
            for (size_t t = 0; t < u.size(); ++t)
                if (u[t] != 0.0)
                    accumulate_query_grad(params, trajs[i].steps[t].fq, trajs[i].steps[t].action,
                                          u[t], g_margin);
        }
        g_margin /= static_cast<double>(n);
        AgentParams shaped = params;
        shaped.query_weights += eta * (g_outcome + lambda_inj * g_margin);
        out.push_back({target, measure(shaped) - i_th_unshaped});
    }
    return out;
}

}  // namespace selock
