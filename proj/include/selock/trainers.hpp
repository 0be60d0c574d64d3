#pragma once

#include <string>
#include <vector>

#include "selock/critique.hpp"

namespace selock {

enum class Algorithm { PPO, GRPO, GSPO };
enum class ArewMode { Off, AsOnly, AsBt };

std::string to_string(Algorithm a);
std::string to_string(ArewMode m);
Algorithm algorithm_from_string(const std::string& s);
ArewMode arew_mode_from_string(const std::string& s);

struct TrainConfig {
    Algorithm algorithm = Algorithm::PPO;
    double lr = 0.1;
    double clip = 0.2;          // PPO / GRPO
    double clip_low = 3e-4;     // GSPO
    double clip_high = 4e-4;
    double gae_lambda = 1.0;
    double gamma = 1.0;
    int group_size = 3;
    ArewMode arew_mode = ArewMode::Off;
    double lambda_inj = 0.5;
    int steps = 200;
    int batch_size = 16;
    double flip_alpha = 0.0;
    CritiqueMode critique_mode = CritiqueMode::Default;
    int diag_rollouts = 64;  // per-step capability estimates in the metrics

    void validate() const;
};

// Generalized advantage estimation; values has length rewards.size()+1 with a
// zero terminal bootstrap.
std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        double lambda, double gamma);

// Group-relative advantages: mean-centered, population-std normalized;
// degenerate groups map to all zeros.
std::vector<double> grpo_advantages(const std::vector<double>& group_rewards);

// Length-normalized sequence-level importance ratio.
double gspo_ratio(const std::vector<double>& new_logprobs, const std::vector<double>& old_logprobs);

// Additive advantage shaping A_t + lambda * u_t.
std::vector<double> arew_shape(const std::vector<double>& advantages,
                               const std::vector<double>& coeffs, double lambda_inj);

// One rollout plus everything the update step and the metrics need.
struct BatchItem {
    Trajectory traj;
    CritiqueTrack clean;
    CritiqueTrack used;  // after optional perturbation
    std::vector<int> y_q;             // oracle AS direction labels
    std::vector<double> y_adv;        // the oracle advantages behind y_q
    std::vector<double> adv;          // per-turn outcome advantage
    std::vector<double> shaped_q;     // per-turn shaped advantage, query channel
    std::vector<double> shaped_u;     // update channel
};

struct StepMetrics {
    int step = 0;
    double mean_reward = 0.0;
    double as_proxy_mean = 0.0;
    double bt_proxy_mean = 0.0;
    double i_th_est = 0.0;
    double c_bt_est = 0.0;
    double acc_q = 0.0;
    double acc_u = 0.0;
    double clip_frac = 0.0;
    double grad_norm_q = 0.0;
    double grad_norm_u = 0.0;
};

// Running per-turn mean of the return-to-go; stands in for a learned critic.
struct ValueBaseline {
    std::vector<double> values;  // length horizon+1, terminal entry pinned at 0
    long count = 0;

    explicit ValueBaseline(int horizon) : values(horizon + 1, 0.0) {}
    void update(const std::vector<double>& returns_to_go);
};

// One clipped-surrogate ascent step on the shaped advantages.
// Mutates params in place; returns gradient norms and clip fraction.
StepMetrics policy_step(AgentParams& params, const AgentSpec& spec,
                        std::vector<BatchItem>& batch, ValueBaseline& baseline,
                        const TrainConfig& config);

struct TrainingRun {
    AgentParams final_params;
    std::vector<StepMetrics> series;
};

TrainingRun train(const TrainConfig& config, const EnvFamily& family, const AgentSpec& spec,
                  const AgentParams& init, std::uint64_t seed);

// Exact MetricsRecord CSV schema.
std::string metrics_csv_header();
std::string metrics_csv_row(const StepMetrics& m, const TrainConfig& config, std::uint64_t seed);

}  // namespace selock
