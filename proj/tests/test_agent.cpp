#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selock/agent.hpp"
#include "selock/diagnostics.hpp"

using namespace selock;

namespace {

EnvFamily tiny_family(std::uint64_t seed = 0x7117) {
    EnvFamily family;
    family.hyp = HypConfig{4, 3, 2, 4, true, false};
    family.base_seed = splitmix64(seed);
    return family;
}

}  // namespace

TEST_CASE("zero weights sample uniformly with exact logprob") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    AgentParams params = zero_params(spec);
    VectorXd fq = query_features(Eigen::Vector2d(0.25, 1.0), 0, spec.horizon);
    Rng rng = make_rng(3, 0);
    QuerySample qs = select_query(params, fq, rng);
    CHECK(qs.logprob == doctest::Approx(-std::log(spec.num_actions)).epsilon(1e-12));

    VectorXd fu = update_features(1, spec.alphabet, Eigen::Vector2d(0.25, 1.0), 0, spec.horizon);
    UpdateSample us = select_update(params, fu, rng);
    CHECK(us.logprob == doctest::Approx(-std::log(spec.num_ops())).epsilon(1e-12));
}

TEST_CASE("a dominant score saturates the softmax") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    AgentParams params = zero_params(spec);
    params.query_weights(2, 0) = 80.0;  // bias column
    VectorXd fq = query_features(Eigen::Vector2d(0.25, 1.0), 1, spec.horizon);
    Rng rng = make_rng(4, 0);
    for (int i = 0; i < 20; ++i) {
        QuerySample qs = select_query(params, fq, rng);
        CHECK(qs.action == 2);
        CHECK(qs.logprob == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(
        [&] {
            params.query_weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
            Rng r = make_rng(4, 1);
            select_query(params, fq, r);
        }(),
        NumericError);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    Rng prng = make_rng(8, 0);
    AgentParams params = random_params(spec, 0.5, prng);
    VectorXd fq = query_features(Eigen::Vector2d(0.4, 0.8), 2, spec.horizon);
    Rng r1 = make_rng(9, 1), r2 = make_rng(9, 1);
    QuerySample a = select_query(params, fq, r1);
    QuerySample b = select_query(params, fq, r2);
    CHECK(a.action == b.action);
    CHECK(a.logprob == b.logprob);
}

TEST_CASE("stored logprobs equal the recomputed sampling probabilities") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    Rng prng = make_rng(12, 0);
    AgentParams params = random_params(spec, 1.0, prng);
    Rng rng = make_rng(12, 1);
    auto episode = family.make(0);
    Trajectory traj = rollout(params, spec, *episode, rng);
    REQUIRE(traj.steps.size() == 4);
    double total = 0.0;
    for (const auto& step : traj.steps) {
        VectorXd qscores = params.query_weights * step.fq;
        VectorXd qp = softmax(qscores);
        CHECK(std::abs(std::exp(step.logprob_q) - qp[step.action]) <= 1e-10);
        VectorXd up = softmax(params.update_weights * step.fu);
        CHECK(std::abs(std::exp(step.logprob_u) - up[step.op_index]) <= 1e-10);
        total += step.logprob_q + step.logprob_u;
    }
    CHECK(traj.total_logprob() == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("rollout with a frozen update kernel keeps the prior") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    AgentParams params = zero_params(spec);
    params.update_weights(0, 0) = 100.0;  // identity operator locked in
    Rng rng = make_rng(15, 0);
    auto episode = family.make(2);
    Trajectory traj = rollout(params, spec, *episode, rng);
    CHECK((traj.final_state - traj.initial_state).cwiseAbs().maxCoeff() == 0.0);
    CHECK(traj.reward == episode->reward(traj.initial_state));
}

TEST_CASE("greedy split queries plus exact updates solve the pinned instance") {
    // seed 17 separates all four states; query 1 then query 2 identifies s*
    HypothesisEnv env = hyp_reset(HypConfig{4, 3, 2, 4, true, false}, 17);
    EnvFamily family;
    family.hyp = env.config;
    family.fixed_hyp = env;
    AgentSpec spec = AgentSpec::for_family(family);
    AgentParams params = zero_params(spec);
    // turn feature schedules query 1 at t=0 and query 2 afterwards
    params.query_weights(1, 0) = 200.0;
    params.query_weights(2, 3) = 2000.0;
    params.update_weights(1, 0) = 200.0;  // bayes_full locked in
    Rng rng = make_rng(16, 0);
    auto episode = family.make(0);
    Trajectory traj = rollout(params, spec, *episode, rng);
    CHECK(traj.reward == 1.0);
    CHECK(potential(traj.final_state, env.true_state) == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches the softmax identity and finite differences") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    AgentParams zero = zero_params(spec);
    VectorXd fq = query_features(Eigen::Vector2d(0.3, 0.9), 1, spec.horizon);

    MatrixXd g = MatrixXd::Zero(spec.num_actions, spec.fq_dim());
    accumulate_query_grad(zero, fq, 2, 1.0, g);
    for (int a = 0; a < spec.num_actions; ++a) {
        double coeff = (a == 2 ? 1.0 - 1.0 / spec.num_actions : -1.0 / spec.num_actions);
        for (int k = 0; k < spec.fq_dim(); ++k)
            CHECK(g(a, k) == doctest::Approx(coeff * fq[k]).epsilon(1e-12));
    }

    Rng prng = make_rng(21, 0);
    AgentParams params = random_params(spec, 0.7, prng);
    Rng rng = make_rng(21, 1);
    auto episode = family.make(5);
    Trajectory traj = rollout(params, spec, *episode, rng);
    Gradient grad = logprob_grad(params, spec, traj);

    auto logp = [&](const AgentParams& p) {
        double s = 0.0;
        for (const auto& st : traj.steps)
            s += query_logprob(p, st.fq, st.action) + update_logprob(p, st.fu, st.op_index);
        return s;
    };
    const double h = 1e-6;
    for (int i = 0; i < grad.query.size(); ++i) {
        AgentParams plus = params, minus = params;
        plus.query_weights.data()[i] += h;
        minus.query_weights.data()[i] -= h;
        double fd = (logp(plus) - logp(minus)) / (2 * h);
        double an = grad.query.data()[i];
        CHECK(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(an)));
    }
    for (int i = 0; i < grad.update.size(); ++i) {
        AgentParams plus = params, minus = params;
        plus.update_weights.data()[i] += h;
        minus.update_weights.data()[i] -= h;
        double fd = (logp(plus) - logp(minus)) / (2 * h);
        double an = grad.update.data()[i];
        CHECK(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("gradient blocks are channel-isolated") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    Rng prng = make_rng(22, 0);
    AgentParams params = random_params(spec, 0.5, prng);
    Rng rng = make_rng(22, 1);
    auto episode = family.make(1);
    Trajectory traj = rollout(params, spec, *episode, rng);
    Gradient grad = logprob_grad(params, spec, traj);

    // perturbing the update block does not change the query-block gradient
    AgentParams shifted = params;
    shifted.update_weights.array() += 0.3;
    Trajectory replay = traj;
    Gradient grad2 = logprob_grad(shifted, spec, replay);
    CHECK((grad.query - grad2.query).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bayes_full-only kernel reproduces the oracle belief sequence") {
    HypothesisEnv env = hyp_reset(HypConfig{5, 4, 2, 4, true, false}, 29);
    EnvFamily family;
    family.hyp = env.config;
    family.fixed_hyp = env;
    AgentSpec spec = AgentSpec::for_family(family);
    spec.ops = {{kOpBayesFull, 0.5}};
    Rng prng = make_rng(29, 0);
    AgentParams params = random_params(spec, 0.5, prng);
    Rng rng = make_rng(29, 1);
    auto episode = family.make(0);
    Trajectory traj = rollout(params, spec, *episode, rng);

    Belief b = uniform_belief(5);
    for (const auto& step : traj.steps) {
        b = bayes_update(b, step.action, step.observation, env.obs_fn);
        CHECK((step.state_after - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("deficient construction lands in the locking regime") {
    EnvFamily family;
    family.base_seed = splitmix64(0xDEF1);
    AgentSpec spec = AgentSpec::for_family(family);

    // saturated identity bias freezes the belief: zero BT index exactly
    DeficientConfig frozen;
    frozen.identity_bias = 300.0;
    AgentParams p_frozen = init_deficient(spec, 0, frozen);
    Rng rng = make_rng(31, 0);
    CHECK(estimate_C_BT(p_frozen, spec, family, 300, rng).mean == 0.0);

    // saturated null bias silences acquisition: zero AS informativeness exactly
    DeficientConfig silent;
    silent.null_query_bias = 300.0;
    AgentParams p_silent = init_deficient(spec, 0, silent);
    CHECK(estimate_I_th(p_silent, spec, family, 300, rng).mean == 0.0);

    // default strengths stay under both thresholds on the reference env
    AgentParams p_default = init_deficient(spec, 0);
    CHECK(estimate_I_th(p_default, spec, family, 3000, rng).mean <= 0.05);
    CHECK(estimate_C_BT(p_default, spec, family, 3000, rng).mean <= 0.05);
}

TEST_CASE("params serialize through the flat JSON array") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    Rng prng = make_rng(33, 0);
    AgentParams params = random_params(spec, 0.9, prng);
    AgentParams back = AgentParams::from_json(params.to_json());
    CHECK(back.query_weights == params.query_weights);
    CHECK(back.update_weights == params.update_weights);
}

TEST_CASE("operator slate names round-trip") {
    auto slate = op_slate_from_names(
        {"identity", "bayes_full", "bayes_partial", "toward_uniform", "anti_bayes"}, 0.25);
    REQUIRE(slate.size() == 5);
    CHECK(slate[1].code == kOpBayesFull);
    CHECK(slate[2].rate == 0.25);
    for (const auto& op : slate) CHECK(op_name(op.code) != "?");
    CHECK_THROWS_AS(op_slate_from_names({"nope"}, 0.5), ConfigError);
}

TEST_CASE("readout equals the truth-aligned potential along rollouts") {
    EnvFamily family = tiny_family();
    AgentSpec spec = AgentSpec::for_family(family);
    Rng prng = make_rng(35, 0);
    AgentParams params = random_params(spec, 0.8, prng);
    Rng rng = make_rng(35, 1);
    auto episode = family.make(7);
    Trajectory traj = rollout(params, spec, *episode, rng);
    for (const auto& step : traj.steps) {
        CHECK(step.readout_before == episode->readout(step.state_before));
        CHECK(step.readout_after == episode->readout(step.state_after));
    }
}
