#include "selock/belief.hpp"

#include <nlohmann/json.hpp>

namespace selock {

bool is_valid_belief(const Belief& b, double tol) {
    if (b.size() == 0) return false;
    if (!b.allFinite()) return false;
    if ((b.array() < -tol).any() || (b.array() > 1.0 + tol).any()) return false;
    return std::abs(b.sum() - 1.0) <= tol;
}

double potential(const Belief& b, int true_state) {
    if (true_state < 0 || true_state >= b.size())
        throw UsageError("potential: true_state out of range");
    return b[true_state];
}

Belief bayes_update(const Belief& b, int query, int obs, const ObservationFn& obs_fn) {
    if (b.size() != obs_fn.num_states())
        throw UsageError("bayes_update: belief/observation-table size mismatch");
    if (obs == kNullObs) return b;  // consistent with every state, exact no-op
    Belief out(b.size());
    for (int s = 0; s < b.size(); ++s)
        out[s] = (obs_fn(s, query) == obs) ? b[s] : 0.0;
    double mass = out.sum();
    if (mass <= 0.0)
        throw NumericError("bayes_update: observation inconsistent with entire support");
    out /= mass;
    return out;
}

StepProgress one_step_progress(const Belief& before, const Belief& after, int true_state) {
    if (before.size() != after.size())
        throw UsageError("one_step_progress: belief size mismatch");
    StepProgress p;
    p.delta = potential(after, true_state) - potential(before, true_state);
    p.absorbed = std::max(p.delta, 0.0);
    p.destructive = std::max(-p.delta, 0.0);
    return p;
}

std::string OracleTrajectory::to_json_line() const {
    nlohmann::json j;
    for (const auto& b : beliefs)
        j["beliefs"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
    j["queries"] = queries;
    j["observations"] = observations;
    j["progress"] = progress;
    return j.dump();
}

OracleTrajectory oracle_rollout(const QueryPolicy& policy, const ObservationFn& obs_fn,
                                int true_state, const Belief& prior, int horizon, Rng& rng) {
    if (potential(prior, true_state) <= 0.0)
        throw UsageError("oracle_rollout: prior puts zero mass on the true state");
    OracleTrajectory traj;
    traj.beliefs.push_back(prior);
    Belief b = prior;
    for (int t = 0; t < horizon; ++t) {
        int q = policy(b, t, rng);
        int o = obs_fn(true_state, q);
        Belief next = bayes_update(b, q, o, obs_fn);
        traj.queries.push_back(q);
        traj.observations.push_back(o);
        traj.progress.push_back(potential(next, true_state) - potential(b, true_state));
        traj.beliefs.push_back(next);
        b = next;
    }
    return traj;
}

}  // namespace selock
