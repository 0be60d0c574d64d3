#include "selock/agent.hpp"

#include <nlohmann/json.hpp>

namespace selock {

std::vector<UpdateOp> default_op_slate(double rho) {
    return {{kOpIdentity, 0.0},
            {kOpBayesFull, 1.0},
            {kOpBayesPartial, rho},
            {kOpTowardUniform, rho},
            {kOpAntiBayes, rho}};
}

std::string op_name(int code) {
    switch (code) {
        case kOpIdentity: return "identity";
        case kOpBayesFull: return "bayes_full";
        case kOpBayesPartial: return "bayes_partial";
        case kOpTowardUniform: return "toward_uniform";
        case kOpAntiBayes: return "anti_bayes";
    }
    throw UsageError("op_name: unknown code");
}

std::vector<UpdateOp> op_slate_from_names(const std::vector<std::string>& names, double rho) {
    std::vector<UpdateOp> out;
    for (const auto& n : names) {
        if (n == "identity") out.push_back({kOpIdentity, 0.0});
        else if (n == "bayes_full") out.push_back({kOpBayesFull, 1.0});
        else if (n == "bayes_partial") out.push_back({kOpBayesPartial, rho});
        else if (n == "toward_uniform") out.push_back({kOpTowardUniform, rho});
        else if (n == "anti_bayes") out.push_back({kOpAntiBayes, rho});
        else throw ConfigError("unknown update operator: " + n);
    }
    if (out.empty()) throw ConfigError("op slate must be nonempty");
    return out;
}

AgentSpec AgentSpec::for_family(const EnvFamily& family) {
    AgentSpec spec;
    spec.num_actions = family.num_actions();
    spec.alphabet = family.alphabet();
    spec.horizon = family.horizon();
    return spec;
}

AgentParams zero_params(const AgentSpec& spec) {
    AgentParams p;
    p.query_weights = MatrixXd::Zero(spec.num_actions, spec.fq_dim());
    p.update_weights = MatrixXd::Zero(spec.num_ops(), spec.fu_dim());
    return p;
}

AgentParams random_params(const AgentSpec& spec, double scale, Rng& rng) {
    AgentParams p = zero_params(spec);
    for (int i = 0; i < p.query_weights.rows(); ++i)
        for (int j = 0; j < p.query_weights.cols(); ++j)
            p.query_weights(i, j) = scale * normal01(rng);
    for (int i = 0; i < p.update_weights.rows(); ++i)
        for (int j = 0; j < p.update_weights.cols(); ++j)
            p.update_weights(i, j) = scale * normal01(rng);
    return p;
}

AgentParams init_deficient(const AgentSpec& spec, int null_action, const DeficientConfig& cfg) {
    AgentParams p = zero_params(spec);
    if (null_action >= 0 && null_action < spec.num_actions)
        p.query_weights(null_action, 0) = cfg.null_query_bias;
    for (int k = 0; k < spec.num_ops(); ++k) {
        if (spec.ops[k].code == kOpIdentity) p.update_weights(k, 0) = cfg.identity_bias;
        if (spec.ops[k].code == kOpTowardUniform) p.update_weights(k, 0) = cfg.toward_uniform_bias;
    }
    return p;
}

VectorXd query_features(const Eigen::Vector2d& summary, int turn, int horizon) {
    VectorXd f(4);
    f << 1.0, summary[0], summary[1],
        horizon > 0 ? static_cast<double>(turn) / static_cast<double>(horizon) : 0.0;
    return f;
}

VectorXd update_features(int obs, int alphabet, const Eigen::Vector2d& summary, int turn,
                         int horizon) {
    VectorXd f = VectorXd::Zero(alphabet + 5);
    f[0] = 1.0;
    int slot = (obs == kNullObs) ? alphabet : obs;
    if (slot < 0 || slot > alphabet) throw UsageError("update_features: observation out of range");
    f[1 + slot] = 1.0;
    f[alphabet + 2] = summary[0];
    f[alphabet + 3] = summary[1];
    f[alphabet + 4] = horizon > 0 ? static_cast<double>(turn) / static_cast<double>(horizon) : 0.0;
    return f;
}

namespace {

// log-softmax of scores, evaluated at index
double log_softmax_at(const VectorXd& scores, int index) {
    if (!scores.allFinite()) throw NumericError("log_softmax: non-finite scores");
    double m = scores.maxCoeff();
    double lse = std::log((scores.array() - m).exp().sum());
    return scores[index] - m - lse;
}

}  // namespace

double query_logprob(const AgentParams& params, const VectorXd& fq, int action) {
    return log_softmax_at(params.query_weights * fq, action);
}

double update_logprob(const AgentParams& params, const VectorXd& fu, int op_index) {
    return log_softmax_at(params.update_weights * fu, op_index);
}

QuerySample select_query(const AgentParams& params, const VectorXd& fq, Rng& rng) {
    VectorXd probs = softmax(params.query_weights * fq);
    int a = sample_categorical(probs, rng);
    return {a, log_softmax_at(params.query_weights * fq, a)};
}

UpdateSample select_update(const AgentParams& params, const VectorXd& fu, Rng& rng) {
    VectorXd probs = softmax(params.update_weights * fu);
    int k = sample_categorical(probs, rng);
    return {k, log_softmax_at(params.update_weights * fu, k)};
}

Trajectory rollout(const AgentParams& params, const AgentSpec& spec, Episode& episode, Rng& rng) {
    Trajectory traj;
    traj.initial_state = episode.initial_state();
    VectorXd state = traj.initial_state;
    const int H = episode.horizon();
    for (int t = 0; t < H; ++t) {
        TrajStep step;
        step.turn = t;
        step.state_before = state;
        Eigen::Vector2d summary = episode.state_summary(state);
        step.fq = query_features(summary, t, H);
        QuerySample qs = select_query(params, step.fq, rng);
        step.action = qs.action;
        step.logprob_q = qs.logprob;
        step.repeat = episode.was_repeat(step.action);
        step.null_action = episode.is_null_action(step.action);
        step.observation = episode.observe(step.action);
        step.as_proxy = episode.as_proxy(step.action, step.observation);

        step.fu = update_features(step.observation, episode.alphabet(), summary, t, H);
        UpdateSample us = select_update(params, step.fu, rng);
        step.op_index = us.op_index;
        step.logprob_u = us.logprob;
        const UpdateOp& op = spec.ops.at(step.op_index);
        step.state_after = episode.apply_operator(op.code, op.rate, state, step.action,
                                                  step.observation);
        step.bt_proxy = episode.bt_proxy(state, step.state_after);
        step.readout_before = episode.readout(state);
        step.readout_after = episode.readout(step.state_after);
        state = step.state_after;
        traj.steps.push_back(std::move(step));
    }
    traj.final_state = state;
    traj.reward = episode.reward(state);
    return traj;
}

double Trajectory::total_logprob() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.logprob_q + st.logprob_u;
    return s;
}

std::string Trajectory::to_json_line() const {
    nlohmann::json j;
    j["reward"] = reward;
    j["initial_state"] =
        std::vector<double>(initial_state.data(), initial_state.data() + initial_state.size());
    j["final_state"] =
        std::vector<double>(final_state.data(), final_state.data() + final_state.size());
    for (const auto& st : steps) {
        nlohmann::json s;
        s["turn"] = st.turn;
        s["action"] = st.action;
        s["observation"] = st.observation;
        s["op_index"] = st.op_index;
        s["logprob_q"] = st.logprob_q;
        s["logprob_u"] = st.logprob_u;
        s["as_proxy"] = st.as_proxy;
        s["bt_proxy"] = st.bt_proxy;
        s["readout_before"] = st.readout_before;
        s["readout_after"] = st.readout_after;
        j["steps"].push_back(s);
    }
    return j.dump();
}

Gradient zero_gradient(const AgentSpec& spec) {
    return {MatrixXd::Zero(spec.num_actions, spec.fq_dim()),
            MatrixXd::Zero(static_cast<int>(spec.ops.size()), spec.fu_dim())};
}

void accumulate_query_grad(const AgentParams& params, const VectorXd& fq, int action, double coeff,
                           MatrixXd& out) {
    VectorXd probs = softmax(params.query_weights * fq);
    VectorXd sel = -probs;
    sel[action] += 1.0;
    out.noalias() += coeff * sel * fq.transpose();
}

void accumulate_update_grad(const AgentParams& params, const VectorXd& fu, int op_index,
                            double coeff, MatrixXd& out) {
    VectorXd probs = softmax(params.update_weights * fu);
    VectorXd sel = -probs;
    sel[op_index] += 1.0;
    out.noalias() += coeff * sel * fu.transpose();
}

Gradient logprob_grad(const AgentParams& params, const AgentSpec& spec, const Trajectory& traj) {
    Gradient g = zero_gradient(spec);
    for (const auto& st : traj.steps) {
        accumulate_query_grad(params, st.fq, st.action, 1.0, g.query);
        accumulate_update_grad(params, st.fu, st.op_index, 1.0, g.update);
    }
    return g;
}

QueryPolicy oracle_query_policy(const AgentParams& params, const AgentSpec& spec) {
    MatrixXd weights = params.query_weights;  // never touches the update block
    int horizon = spec.horizon;
    return [weights, horizon](const Belief& b, int turn, Rng& rng) {
        VectorXd fq = query_features(hyp_summary(b), turn, horizon);
        return sample_categorical(softmax(weights * fq), rng);
    };
}

std::string AgentParams::to_json() const {
    nlohmann::json j;
    j["query_shape"] = {query_weights.rows(), query_weights.cols()};
    j["update_shape"] = {update_weights.rows(), update_weights.cols()};
    std::vector<double> flat;
    for (int i = 0; i < query_weights.rows(); ++i)
        for (int jj = 0; jj < query_weights.cols(); ++jj) flat.push_back(query_weights(i, jj));
    for (int i = 0; i < update_weights.rows(); ++i)
        for (int jj = 0; jj < update_weights.cols(); ++jj) flat.push_back(update_weights(i, jj));
    j["values"] = flat;
    return j.dump();
}

AgentParams AgentParams::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto qs = j.at("query_shape").get<std::vector<long>>();
    auto us = j.at("update_shape").get<std::vector<long>>();
    auto flat = j.at("values").get<std::vector<double>>();
    AgentParams p;
    p.query_weights.resize(qs[0], qs[1]);
    p.update_weights.resize(us[0], us[1]);
    size_t idx = 0;
    for (long i = 0; i < qs[0]; ++i)
        for (long jj = 0; jj < qs[1]; ++jj) p.query_weights(i, jj) = flat.at(idx++);
    for (long i = 0; i < us[0]; ++i)
        for (long jj = 0; jj < us[1]; ++jj) p.update_weights(i, jj) = flat.at(idx++);
    if (idx != flat.size()) throw UsageError("AgentParams: value count does not match shapes");
    return p;
}

}  // namespace selock
