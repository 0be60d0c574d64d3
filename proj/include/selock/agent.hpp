#pragma once

#include <string>
#include <vector>

#include "selock/env.hpp"

namespace selock {

// Update-operator slate realizing the stochastic belief-update kernel.
// Codes match Episode::apply_operator.
enum OpCode : int {
    kOpIdentity = 0,
    kOpBayesFull = 1,
    kOpBayesPartial = 2,
    kOpTowardUniform = 3,
    kOpAntiBayes = 4,
};

struct UpdateOp {
    int code = kOpIdentity;
    double rate = 0.5;  // mixing rate for partial / toward_uniform / anti ops
};

std::vector<UpdateOp> default_op_slate(double rho = 0.5);
std::vector<UpdateOp> op_slate_from_names(const std::vector<std::string>& names, double rho = 0.5);
std::string op_name(int code);

// Static shape of the agent: slate sizes and feature dimensions.
struct AgentSpec {
    int num_actions = 0;
    int alphabet = 0;
    int horizon = 1;
    std::vector<UpdateOp> ops = default_op_slate();

    int num_ops() const { return static_cast<int>(ops.size()); }
    int fq_dim() const { return 4; }                 // bias, summary x2, turn
    int fu_dim() const { return alphabet + 5; }      // bias, obs one-hot(+null), summary x2, turn

    static AgentSpec for_family(const EnvFamily& family);
};

// Two disjoint parameter blocks: query policy (AS) and update kernel (BT).
struct AgentParams {
    MatrixXd query_weights;   // num_actions x fq_dim
    MatrixXd update_weights;  // num_ops x fu_dim

    std::string to_json() const;
    static AgentParams from_json(const std::string& text);
};

AgentParams zero_params(const AgentSpec& spec);
AgentParams random_params(const AgentSpec& spec, double scale, Rng& rng);

// Default strengths land inside the locking regime (I_th and C_BT both below
// 0.05 on the reference hypothesis env), verified by the diagnostics module.
struct DeficientConfig {
    double null_query_bias = 5.0;
    double identity_bias = 5.0;
    double toward_uniform_bias = 2.0;
};

// Constructs parameters inside the locking regime: query policy biased toward
// the null query, update kernel biased toward identity / toward_uniform.
AgentParams init_deficient(const AgentSpec& spec, int null_action, const DeficientConfig& cfg = {});

// Feature maps shared by sampling, gradient, and ratio computation.
VectorXd query_features(const Eigen::Vector2d& summary, int turn, int horizon);
VectorXd update_features(int obs, int alphabet, const Eigen::Vector2d& summary, int turn,
                         int horizon);

double query_logprob(const AgentParams& params, const VectorXd& fq, int action);
double update_logprob(const AgentParams& params, const VectorXd& fu, int op_index);

struct QuerySample {
    int action = 0;
    double logprob = 0.0;
};
struct UpdateSample {
    int op_index = 0;
    double logprob = 0.0;
};

QuerySample select_query(const AgentParams& params, const VectorXd& fq, Rng& rng);
UpdateSample select_update(const AgentParams& params, const VectorXd& fu, Rng& rng);

struct TrajStep {
    int turn = 0;
    int action = 0;
    int observation = 0;
    int op_index = 0;
    bool repeat = false;       // action already asked earlier this episode
    bool null_action = false;
    double logprob_q = 0.0;
    double logprob_u = 0.0;
    VectorXd fq;
    VectorXd fu;
    double as_proxy = 0.0;
    double bt_proxy = 0.0;
    double readout_before = 0.0;
    double readout_after = 0.0;
    VectorXd state_before;
    VectorXd state_after;
};

struct Trajectory {
    std::vector<TrajStep> steps;
    VectorXd initial_state;
    VectorXd final_state;
    double reward = 0.0;

    double total_logprob() const;
    std::string to_json_line() const;
};

Trajectory rollout(const AgentParams& params, const AgentSpec& spec, Episode& episode, Rng& rng);

struct Gradient {
    MatrixXd query;
    MatrixXd update;
};

Gradient zero_gradient(const AgentSpec& spec);

// d log pi(action) / d weights for one softmax decision: (e_a - p) f^T
void accumulate_query_grad(const AgentParams& params, const VectorXd& fq, int action, double coeff,
                           MatrixXd& out);
void accumulate_update_grad(const AgentParams& params, const VectorXd& fu, int op_index,
                            double coeff, MatrixXd& out);

// Exact score-function gradient of the trajectory log-likelihood at `params`.
Gradient logprob_grad(const AgentParams& params, const AgentSpec& spec, const Trajectory& traj);

// Query policy over oracle beliefs for the analysis-only oracle MDP; uses only
// the query-weight block.
QueryPolicy oracle_query_policy(const AgentParams& params, const AgentSpec& spec);

}  // namespace selock
