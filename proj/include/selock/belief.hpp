#pragma once

#include <functional>
#include <string>
#include <vector>

#include "selock/common.hpp"

namespace selock {

// Belief over a finite latent-state set: dense probability vector.
using Belief = VectorXd;

constexpr double kBeliefTol = 1e-9;

// Observation symbol reserved for "no information": every state is
// consistent with it, so Bayes conditioning is a no-op.
constexpr int kNullObs = -1;

bool is_valid_belief(const Belief& b, double tol = kBeliefTol);

inline Belief uniform_belief(int num_states) {
    return Belief::Constant(num_states, 1.0 / static_cast<double>(num_states));
}

// Deterministic observation model: (state, query) -> symbol.
struct ObservationFn {
    Eigen::MatrixXi table;  // num_states x num_queries
    int alphabet = 0;

    int num_states() const { return static_cast<int>(table.rows()); }
    int num_queries() const { return static_cast<int>(table.cols()); }

    int operator()(int state, int query) const {
        if (state < 0 || state >= num_states() || query < 0 || query >= num_queries())
            throw UsageError("ObservationFn: index out of range");
        return table(state, query);
    }
};

// Truth-aligned potential: belief mass on the true state.
double potential(const Belief& b, int true_state);

// Exact Bayes conditioning on deterministic feedback: zero out states
// inconsistent with o under q, renormalize. o == kNullObs keeps b unchanged.
Belief bayes_update(const Belief& b, int query, int obs, const ObservationFn& obs_fn);

struct StepProgress {
    double delta = 0.0;
    double absorbed = 0.0;     // (delta)+
    double destructive = 0.0;  // (-delta)+
};

StepProgress one_step_progress(const Belief& before, const Belief& after, int true_state);

struct OracleTrajectory {
    std::vector<Belief> beliefs;  // length H+1
    std::vector<int> queries;     // length H
    std::vector<int> observations;
    std::vector<double> progress;  // one-step oracle progress, length H

    double total_progress() const {
        double s = 0.0;
        for (double p : progress) s += p;
        return s;
    }
    std::string to_json_line() const;
};

// Samples a query given the current oracle belief and the turn index.
using QueryPolicy = std::function<int(const Belief&, int /*turn*/, Rng&)>;

// Analysis-only rollout: queries come from the agent's query policy
// conditioned on the oracle belief, beliefs evolve by exact Bayes updates.
OracleTrajectory oracle_rollout(const QueryPolicy& policy, const ObservationFn& obs_fn,
                                int true_state, const Belief& prior, int horizon, Rng& rng);

}  // namespace selock
