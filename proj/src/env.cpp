#include "selock/env.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace selock {

namespace {

bool query_is_informative(const Eigen::MatrixXi& table, int q) {
    for (int s = 1; s < table.rows(); ++s)
        if (table(s, q) != table(0, q)) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hypothesis env
// ---------------------------------------------------------------------------

HypothesisEnv hyp_reset(const HypConfig& config, std::uint64_t seed) {
    if (config.num_states < 2 || config.num_queries < 1)
        throw ConfigError("hyp_reset: need num_states >= 2 and num_queries >= 1");
    if (config.alphabet < 2)
        throw ConfigError("hyp_reset: alphabet size < 2 cannot produce an informative query");
    if (config.include_identity_query && config.alphabet < config.num_states)
        throw ConfigError("hyp_reset: identity query needs alphabet >= num_states");
    int free_queries = config.num_queries - (config.include_null_query ? 1 : 0) -
                       (config.include_identity_query ? 1 : 0);
    if (free_queries < 0) throw ConfigError("hyp_reset: not enough query slots");
    if (free_queries == 0 && !config.include_identity_query)
        throw ConfigError("hyp_reset: no informative query possible");

    HypothesisEnv env;
    env.config = config;
    env.seed = seed;
    Rng rng = make_rng(seed, 0x456e76);

    Eigen::MatrixXi table(config.num_states, config.num_queries);
    const int first_free = config.include_null_query ? 1 : 0;
    const int last_free = config.num_queries - (config.include_identity_query ? 1 : 0);
    bool ok = false;
    for (int attempt = 0; attempt < 256 && !ok; ++attempt) {
        table.setZero();
        for (int q = first_free; q < last_free; ++q)
            for (int s = 0; s < config.num_states; ++s)
                table(s, q) = static_cast<int>(uniform_below(rng, config.alphabet));
        if (config.include_identity_query)
            for (int s = 0; s < config.num_states; ++s)
                table(s, config.num_queries - 1) = s;
        ok = false;
        for (int q = first_free; q < config.num_queries; ++q)
            if (query_is_informative(table, q)) { ok = true; break; }
    }
    if (!ok) throw ConfigError("hyp_reset: failed to sample an informative observation table");

    env.obs_fn.table = table;
    env.obs_fn.alphabet =
        config.include_identity_query ? std::max(config.alphabet, config.num_states) : config.alphabet;
    env.true_state = static_cast<int>(uniform_below(rng, config.num_states));
    return env;
}

int hyp_observe(const HypothesisEnv& env, int query) {
    if (query < 0 || query >= env.config.num_queries)
        throw UsageError("hyp_observe: query out of range");
    return env.obs_fn(env.true_state, query);
}

int belief_argmax(const Belief& b) {
    int best = 0;
    for (int s = 1; s < b.size(); ++s)
        if (b[s] > b[best]) best = s;  // ties keep the lowest index
    return best;
}

double hyp_reward(const HypothesisEnv& env, const Belief& final_belief) {
    return belief_argmax(final_belief) == env.true_state ? 1.0 : 0.0;
}

int hyp_as_proxy(const HypothesisEnv& env, const std::set<int>& support_before, int obs, int query) {
    if (support_before.empty()) throw UsageError("hyp_as_proxy: empty support");
    if (obs == kNullObs) return 0;
    int eliminated = 0;
    for (int s : support_before)
        if (env.obs_fn(s, query) != obs) ++eliminated;
    return eliminated;
}

double hyp_bt_proxy(const Belief& before, const Belief& after, int true_state) {
    auto margin = [&](const Belief& b) {
        double best_other = -1.0;
        for (int s = 0; s < b.size(); ++s)
            if (s != true_state) best_other = std::max(best_other, b[s]);
        return b[true_state] - best_other;
    };
    return margin(after) - margin(before);
}

std::string HypothesisEnv::to_json() const {
    nlohmann::json j;
    j["num_states"] = config.num_states;
    j["num_queries"] = config.num_queries;
    j["alphabet"] = config.alphabet;
    j["horizon"] = config.horizon;
    j["include_null_query"] = config.include_null_query;
    j["include_identity_query"] = config.include_identity_query;
    j["true_state"] = true_state;
    j["seed"] = seed;
    std::vector<std::vector<int>> rows;
    for (int s = 0; s < obs_fn.num_states(); ++s) {
        std::vector<int> row;
        for (int q = 0; q < obs_fn.num_queries(); ++q) row.push_back(obs_fn.table(s, q));
        rows.push_back(row);
    }
    j["table"] = rows;
    return j.dump();
}

HypothesisEnv HypothesisEnv::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    HypothesisEnv env;
    env.config.num_states = j.at("num_states");
    env.config.num_queries = j.at("num_queries");
    env.config.alphabet = j.at("alphabet");
    env.config.horizon = j.at("horizon");
    env.config.include_null_query = j.at("include_null_query");
    env.config.include_identity_query = j.at("include_identity_query");
    env.true_state = j.at("true_state");
    env.seed = j.at("seed");
    auto rows = j.at("table").get<std::vector<std::vector<int>>>();
    env.obs_fn.table.resize(env.config.num_states, env.config.num_queries);
    int alpha = 0;
    for (int s = 0; s < env.config.num_states; ++s)
        for (int q = 0; q < env.config.num_queries; ++q) {
            env.obs_fn.table(s, q) = rows[s][q];
            alpha = std::max(alpha, rows[s][q] + 1);
        }
    env.obs_fn.alphabet = std::max(alpha, env.config.alphabet);
    return env;
}

// ---------------------------------------------------------------------------
// Preference env
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<int>> enumerate_subsets(int d, int k, size_t cap) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        if (out.size() >= cap) break;
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == d - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int p = pos + 1; p < k; ++p) idx[p] = idx[p - 1] + 1;
    }
    return out;
}

std::vector<PrefAction> build_slate(const PrefConfig& c) {
    constexpr size_t kMaxSlate = 64;
    std::vector<PrefAction> slate;
    // slot 0: designated null action (identical items, always Equal)
    slate.push_back(PrefAction{enumerate_subsets(c.num_attrs, c.subset_size, 1)[0], 0, 0});
    auto subsets = enumerate_subsets(c.num_attrs, c.subset_size, 16);
    for (const auto& sub : subsets) {
        for (int i = 0; i < c.num_items && slate.size() < kMaxSlate; ++i)
            for (int j = 0; j < c.num_items && slate.size() < kMaxSlate; ++j) {
                if (i == j) continue;
                slate.push_back(PrefAction{sub, i, j});
            }
        if (slate.size() >= kMaxSlate) break;
    }
    return slate;
}

}  // namespace

PrefEnv pref_reset(const PrefConfig& config, std::uint64_t seed) {
    if (config.num_items < 2 || config.num_attrs < 1)
        throw ConfigError("pref_reset: need num_items >= 2 and num_attrs >= 1");
    if (config.subset_size < 1 || config.subset_size > config.num_attrs)
        throw ConfigError("pref_reset: subset_size out of range");
    PrefEnv env;
    env.config = config;
    env.seed = seed;
    Rng rng = make_rng(seed, 0x507245);
    env.items.resize(config.num_items, config.num_attrs);
    for (int i = 0; i < config.num_items; ++i)
        for (int d = 0; d < config.num_attrs; ++d) env.items(i, d) = uniform01(rng);
    env.w_star.resize(config.num_attrs);
    for (int d = 0; d < config.num_attrs; ++d) env.w_star[d] = uniform01(rng);
    env.slate = build_slate(config);
    return env;
}

PrefFeedback pref_feedback(const PrefEnv& env, const std::vector<int>& subset, int i, int j) {
    if (static_cast<int>(subset.size()) != env.config.subset_size)
        throw UsageError("pref_feedback: subset has wrong size");
    std::set<int> uniq(subset.begin(), subset.end());
    if (static_cast<int>(uniq.size()) != env.config.subset_size)
        throw UsageError("pref_feedback: subset indices not distinct");
    for (int d : subset)
        if (d < 0 || d >= env.config.num_attrs) throw UsageError("pref_feedback: attribute out of range");
    if (i == j || i < 0 || j < 0 || i >= env.config.num_items || j >= env.config.num_items)
        throw UsageError("pref_feedback: invalid item pair");
    double dot = 0.0;
    for (int d : subset) dot += env.w_star[d] * (env.items(i, d) - env.items(j, d));
    if (dot > kPrefEqTol) return PrefFeedback::Yes;
    if (dot < -kPrefEqTol) return PrefFeedback::No;
    return PrefFeedback::Equal;
}

int pref_as_indicator(const std::vector<int>& subset, const VectorXd& a_i, const VectorXd& a_j) {
    bool up = false, down = false;
    for (int d : subset) {
        if (a_i[d] > a_j[d]) up = true;
        if (a_i[d] < a_j[d]) down = true;
    }
    return (up && down) ? 1 : 0;
}

double cosine(const VectorXd& a, const VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) throw NumericError("cosine: zero vector");
    return a.dot(b) / (na * nb);
}

double pref_bt_proxy(const VectorXd& w_before, const VectorXd& w_after, const VectorXd& w_star) {
    return cosine(w_after, w_star) - cosine(w_before, w_star);
}

double pref_reward(const PrefEnv& env, const VectorXd& w_final, const VectorXd& w_init) {
    double improvement = cosine(w_final, env.w_star) - cosine(w_init, env.w_star);
    if (env.config.binary_reward) return improvement > 0.03 ? 1.0 : 0.0;
    return std::clamp(improvement, 0.0, 1.0);
}

std::string PrefEnv::to_json() const {
    nlohmann::json j;
    j["num_items"] = config.num_items;
    j["num_attrs"] = config.num_attrs;
    j["subset_size"] = config.subset_size;
    j["horizon"] = config.horizon;
    j["binary_reward"] = config.binary_reward;
    j["seed"] = seed;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < items.rows(); ++i)
        rows.emplace_back(items.row(i).begin(), items.row(i).end());
    j["items"] = rows;
    j["w_star"] = std::vector<double>(w_star.data(), w_star.data() + w_star.size());
    return j.dump();
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

HypEpisode::HypEpisode(const HypothesisEnv& env) : env_(env) {
    for (int s = 0; s < env_.config.num_states; ++s) support_.insert(s);
}

int HypEpisode::observe(int action) {
    if (action < 0 || action >= num_actions()) throw UsageError("HypEpisode: action out of range");
    asked_.insert(action);
    if (nullified_) return kNullObs;
    return hyp_observe(env_, action);
}

double HypEpisode::as_proxy(int action, int obs) {
    int novel = hyp_as_proxy(env_, support_, obs, action);
    if (obs != kNullObs) {
        for (auto it = support_.begin(); it != support_.end();)
            it = (env_.obs_fn(*it, action) != obs) ? support_.erase(it) : std::next(it);
    }
    return static_cast<double>(novel);
}

VectorXd HypEpisode::apply_operator(int op, double rate, const VectorXd& state, int action,
                                    int obs) const {
    const int n = static_cast<int>(state.size());
    switch (op) {
        case 0:  // identity
            return state;
        case 1:  // bayes_full
            return bayes_update(state, action, obs, env_.obs_fn);
        case 2: {  // bayes_partial(rate)
            Belief full = bayes_update(state, action, obs, env_.obs_fn);
            Belief out = (1.0 - rate) * state + rate * full;
            return out / out.sum();
        }
        case 3: {  // toward_uniform(rate)
            Belief out = (1.0 - rate) * state + rate * uniform_belief(n);
            return out / out.sum();
        }
        case 4: {  // anti_bayes(rate): move mass from consistent to inconsistent states
            if (obs == kNullObs) return state;
            std::vector<bool> consistent(n);
            double mass_in = 0.0, mass_out = 0.0;
            int n_out = 0;
            for (int s = 0; s < n; ++s) {
                consistent[s] = env_.obs_fn(s, action) == obs;
                if (consistent[s]) mass_in += state[s];
                else { mass_out += state[s]; ++n_out; }
            }
            if (n_out == 0) return state;
            Belief out = state;
            double moved = rate * mass_in;
            for (int s = 0; s < n; ++s) {
                if (consistent[s]) {
                    out[s] = (1.0 - rate) * state[s];
                } else if (mass_out > 0.0) {
                    out[s] = state[s] + moved * state[s] / mass_out;
                } else {
                    out[s] = state[s] + moved / static_cast<double>(n_out);
                }
            }
            return out / out.sum();
        }
        default:
            throw UsageError("HypEpisode: unknown update operator");
    }
}

Eigen::Vector2d hyp_summary(const Belief& b) {
    double ent = 0.0;
    for (int s = 0; s < b.size(); ++s)
        if (b[s] > 0.0) ent -= b[s] * std::log(b[s]);
    double norm = b.size() > 1 ? std::log(static_cast<double>(b.size())) : 1.0;
    return {b.maxCoeff(), ent / norm};
}

Eigen::Vector2d HypEpisode::state_summary(const VectorXd& state) const {
    return hyp_summary(state);
}

PrefEpisode::PrefEpisode(const PrefEnv& env) : env_(env) {}

int PrefEpisode::observe(int action) {
    if (action < 0 || action >= num_actions()) throw UsageError("PrefEpisode: action out of range");
    asked_.insert(action);
    if (nullified_) return kNullObs;
    return peek(action);
}

int PrefEpisode::peek(int action) const {
    if (action < 0 || action >= num_actions()) throw UsageError("PrefEpisode: action out of range");
    const PrefAction& a = env_.slate[action];
    if (a.item_i == a.item_j) return static_cast<int>(PrefFeedback::Equal);
    return static_cast<int>(pref_feedback(env_, a.subset, a.item_i, a.item_j));
}

double PrefEpisode::as_proxy(int action, int obs) {
    const PrefAction& a = env_.slate[action];
    bool repeat = scored_.count(action) > 0;
    scored_.insert(action);
    if (repeat || a.item_i == a.item_j || obs == kNullObs) return 0.0;
    return pref_as_indicator(a.subset, env_.items.row(a.item_i), env_.items.row(a.item_j));
}

VectorXd PrefEpisode::apply_operator(int op, double rate, const VectorXd& state, int action,
                                     int obs) const {
    const PrefAction& a = env_.slate[action];
    auto corrective = [&](double direction) {
        // step the estimate along the signed attribute difference implied by
        // the feedback, restricted to the queried subset
        VectorXd diff = VectorXd::Zero(state.size());
        for (int d : a.subset) diff[d] = env_.items(a.item_i, d) - env_.items(a.item_j, d);
        double norm = diff.norm();
        if (norm <= 0.0) return state;
        double y = 0.0;
        if (obs == static_cast<int>(PrefFeedback::Yes)) y = 1.0;
        else if (obs == static_cast<int>(PrefFeedback::No)) y = -1.0;
        VectorXd out = state + direction * 0.4 * y * diff / norm;
        return VectorXd(out.cwiseMax(0.0).cwiseMin(1.0));
    };
    switch (op) {
        case 0:
            return state;
        case 1:  // full corrective update
            return obs == kNullObs ? state : corrective(1.0);
        case 2: {  // partial corrective
            if (obs == kNullObs) return state;
            return (1.0 - rate) * state + rate * corrective(1.0);
        }
        case 3: {  // toward the default guess
            return (1.0 - rate) * state +
                   rate * VectorXd::Constant(state.size(), 0.5);
        }
        case 4:  // anti-corrective drift
            return obs == kNullObs ? state : VectorXd((1.0 - rate) * state + rate * corrective(-1.0));
        default:
            throw UsageError("PrefEpisode: unknown update operator");
    }
}

Eigen::Vector2d PrefEpisode::state_summary(const VectorXd& state) const {
    double mean = state.mean();
    double var = (state.array() - mean).square().mean();
    return {state.maxCoeff(), 2.0 * std::sqrt(var)};
}

std::unique_ptr<Episode> make_episode(const HypothesisEnv& env) {
    return std::make_unique<HypEpisode>(env);
}
std::unique_ptr<Episode> make_episode(const PrefEnv& env) {
    return std::make_unique<PrefEpisode>(env);
}

// ---------------------------------------------------------------------------
// EnvFamily
// ---------------------------------------------------------------------------

std::unique_ptr<Episode> EnvFamily::make(std::uint64_t index) const {
    switch (kind) {
        case EnvKind::Hypothesis: {
            if (fixed_hyp) return make_episode(*fixed_hyp);
            return make_episode(hyp_reset(hyp, splitmix64(base_seed) ^ index));
        }
        case EnvKind::PrefG:
        case EnvKind::PrefF: {
            PrefConfig c = pref;
            c.binary_reward = (kind == EnvKind::PrefG);
            return make_episode(pref_reset(c, splitmix64(base_seed) ^ index));
        }
    }
    throw ConfigError("EnvFamily: unknown kind");
}

int EnvFamily::horizon() const {
    return kind == EnvKind::Hypothesis ? hyp.horizon : pref.horizon;
}

int EnvFamily::num_actions() const {
    if (kind == EnvKind::Hypothesis) return hyp.num_queries;
    return static_cast<int>(build_slate(pref).size());
}

int EnvFamily::alphabet() const {
    return kind == EnvKind::Hypothesis ? hyp.alphabet : 3;
}

}  // namespace selock
