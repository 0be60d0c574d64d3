#pragma once

#include <vector>

#include "selock/agent.hpp"
#include "selock/critique.hpp"

namespace selock {

struct CapabilityEstimate {
    MeanStderr i_th;
    MeanStderr c_bt;
    long n_rollouts = 0;
};

// AS informativeness: expected total oracle-belief improvement under the
// agent's query policy with exact (strong) updates. Telescoping is asserted
// per rollout.
MeanStderr estimate_I_th(const AgentParams& params, const AgentSpec& spec, const EnvFamily& family,
                         long n, Rng& rng);

// Exhaustive enumeration over all query sequences of a tiny fixed instance.
double exact_I_th(const AgentParams& params, const AgentSpec& spec, const HypothesisEnv& env);

// BT index: expected sum of positive one-step potential changes on-policy.
MeanStderr estimate_C_BT(const AgentParams& params, const AgentSpec& spec, const EnvFamily& family,
                         long n, Rng& rng);

bool in_locking_regime(double i_th, double c_bt, double delta, double epsilon);

struct DriftReport {
    char channel = 'Q';
    CapabilityEstimate before;
    CapabilityEstimate after;
    double dpos_i_th = 0.0;
    double dpos_c_bt = 0.0;
    double eta = 0.0;
};

// Applies one channel's outcome-gradient update (Monte Carlo, mean-reward
// baseline) and re-measures both capability indices.
DriftReport projected_drift(const AgentParams& params, const AgentSpec& spec,
                            const EnvFamily& family, char channel, double eta, long n, Rng& rng);

struct EscapeConstants {
    double alpha = 0.0;
    double beta_i = 0.0;
    double beta_c = 0.0;
    double big_c = 0.0;  // the additive constant C

    double m() const { return std::max(alpha, beta_i + beta_c); }
};

// Closed-form escape-time lower bound, clamped at zero.
long escape_bound(double i_th0, const EscapeConstants& constants, double eta, double epsilon);

struct InteractionReport {
    double reward_normal = 0.0;
    double reward_nullified = 0.0;
    double belief_consistency = 0.0;  // on the nullified rollouts
};

InteractionReport interaction_sensitivity(const AgentParams& params, const AgentSpec& spec,
                                          const EnvFamily& family, long n, Rng& rng);

enum class BtMode { Model, Oracle };

// Replays the episode's recorded action/observation sequence under the chosen
// belief-update mechanism; returns the terminal reward.
double replay_reward(const AgentSpec& spec, const Episode& episode, const Trajectory& traj,
                     BtMode mode);

// Correlation between per-episode total AS proxy and terminal reward, with the
// action sequences fixed and only the update mechanism swapped.
double reward_as_correlation(const AgentParams& params, const AgentSpec& spec,
                             const EnvFamily& family, BtMode mode, long n, Rng& rng);

// Per-step oracle AS direction labels along a model trajectory: the sign of
// the one-step strong-update advantage of the taken action (ties map to +1).
struct OracleAsLabels {
    std::vector<int> labels;
    std::vector<double> advantages;  // the signed advantages themselves
};
OracleAsLabels oracle_as_labels(const AgentParams& params, const AgentSpec& spec,
                                const Episode& episode, const Trajectory& traj);

struct AccuracyEffect {
    double target_acc = 0.0;
    double effect = 0.0;  // I_th(shaped projected update) - I_th(unshaped)
};

std::vector<AccuracyEffect> accuracy_effect_curve(const AgentParams& params, const AgentSpec& spec,
                                                  const EnvFamily& family,
                                                  const std::vector<double>& acc_grid, double eta,
                                                  double lambda_inj, long n, Rng& rng);

}  // namespace selock
