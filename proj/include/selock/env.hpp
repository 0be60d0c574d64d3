#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "selock/belief.hpp"
#include "selock/common.hpp"

namespace selock {

// ---------------------------------------------------------------------------
// Hypothesis identification: finite latent state, deterministic feedback,
// terminal 0/1 reward on the argmax decision.
// ---------------------------------------------------------------------------

struct HypConfig {
    int num_states = 8;
    int num_queries = 8;
    int alphabet = 2;
    int horizon = 6;
    bool include_null_query = true;      // query 0 answers a constant symbol
    bool include_identity_query = false; // last query reveals the state (needs alphabet >= num_states)
};

struct HypothesisEnv {
    HypConfig config;
    ObservationFn obs_fn;
    int true_state = 0;
    std::uint64_t seed = 0;

    int null_query() const { return config.include_null_query ? 0 : -1; }
    std::string to_json() const;
    static HypothesisEnv from_json(const std::string& text);
};

HypothesisEnv hyp_reset(const HypConfig& config, std::uint64_t seed);

int hyp_observe(const HypothesisEnv& env, int query);

// 1 iff argmax(final_belief) == true_state, ties broken by lowest index.
double hyp_reward(const HypothesisEnv& env, const Belief& final_belief);

int belief_argmax(const Belief& b);

// Novelty count: states in the running oracle support inconsistent with o.
int hyp_as_proxy(const HypothesisEnv& env, const std::set<int>& support_before, int obs, int query);

// Change in belief margin around the ground truth.
double hyp_bt_proxy(const Belief& before, const Belief& after, int true_state);

// ---------------------------------------------------------------------------
// Preference estimation (PE-G / PE-F): latent preference vector, pairwise
// comparisons restricted to an attribute subset, cosine-improvement reward.
// ---------------------------------------------------------------------------

enum class PrefFeedback { No = 0, Equal = 1, Yes = 2 };

struct PrefConfig {
    int num_items = 5;    // N
    int num_attrs = 4;    // D
    int subset_size = 2;  // k; k == D gives PE-F
    int horizon = 6;
    bool binary_reward = true;  // PE-G; false -> PE-F continuous reward
};

struct PrefAction {
    std::vector<int> subset;  // k distinct attribute indices, sorted
    int item_i = 0;
    int item_j = 0;

    bool operator==(const PrefAction&) const = default;
};

struct PrefEnv {
    PrefConfig config;
    MatrixXd items;    // N x D attribute vectors
    VectorXd w_star;   // latent preference, entries in [0,1]
    std::uint64_t seed = 0;

    // fixed action slate enumerated at reset; slot 0 is the null action (i == j)
    std::vector<PrefAction> slate;
    std::string to_json() const;
};

PrefEnv pref_reset(const PrefConfig& config, std::uint64_t seed);

// dead-zone around zero so "Equal" is well defined
constexpr double kPrefEqTol = 1e-9;

PrefFeedback pref_feedback(const PrefEnv& env, const std::vector<int>& subset, int i, int j);

// 1 iff neither item dominates the other on the subset.
int pref_as_indicator(const std::vector<int>& subset, const VectorXd& a_i, const VectorXd& a_j);

double cosine(const VectorXd& a, const VectorXd& b);

double pref_bt_proxy(const VectorXd& w_before, const VectorXd& w_after, const VectorXd& w_star);

double pref_reward(const PrefEnv& env, const VectorXd& w_final, const VectorXd& w_init);

// ---------------------------------------------------------------------------
// Episode: the uniform surface agent rollouts run against. One instance per
// episode; keeps the repeated-query log and the oracle support for proxies.
// ---------------------------------------------------------------------------

struct StepRecord {
    int turn = 0;
    int action = 0;
    int observation = 0;
    VectorXd state_before;
    VectorXd state_after;
    double as_proxy = 0.0;
    double bt_proxy = 0.0;
};

class Episode {
  public:
    virtual ~Episode() = default;

    virtual int horizon() const = 0;
    virtual int num_actions() const = 0;
    // observation symbols are 0..alphabet-1 plus the reserved null symbol
    virtual int alphabet() const = 0;

    // deterministic feedback; records the query for repeat detection.
    // When nullified, every observation is replaced by the null symbol.
    virtual int observe(int action) = 0;

    // feedback without logging or nullification; for analysis only
    virtual int peek(int action) const = 0;

    virtual VectorXd initial_state() const = 0;
    // apply update operator `op` (see agent.hpp for the slate semantics)
    virtual VectorXd apply_operator(int op, double rate, const VectorXd& state, int action,
                                    int obs) const = 0;

    virtual double readout(const VectorXd& state) const = 0;  // truth-aligned confidence
    virtual double reward(const VectorXd& final_state) const = 0;

    virtual double as_proxy(int action, int obs) = 0;  // consumes novelty
    virtual double bt_proxy(const VectorXd& before, const VectorXd& after) const = 0;

    virtual bool was_repeat(int action) const = 0;  // true if asked earlier this episode
    virtual bool is_null_action(int action) const = 0;

    // (concentration, dispersion) summary used as policy features
    virtual Eigen::Vector2d state_summary(const VectorXd& state) const = 0;

    void set_nullified(bool v) { nullified_ = v; }
    bool nullified() const { return nullified_; }

  protected:
    bool nullified_ = false;
};

std::unique_ptr<Episode> make_episode(const HypothesisEnv& env);
std::unique_ptr<Episode> make_episode(const PrefEnv& env);

// (max prob, normalized entropy) summary for discrete beliefs
Eigen::Vector2d hyp_summary(const Belief& b);

// Hypothesis episodes expose the env for oracle-based diagnostics.
class HypEpisode : public Episode {
  public:
    explicit HypEpisode(const HypothesisEnv& env);

    int horizon() const override { return env_.config.horizon; }
    int num_actions() const override { return env_.config.num_queries; }
    int alphabet() const override { return env_.config.alphabet; }
    int observe(int action) override;
    int peek(int action) const override { return hyp_observe(env_, action); }
    VectorXd initial_state() const override { return uniform_belief(env_.config.num_states); }
    VectorXd apply_operator(int op, double rate, const VectorXd& state, int action,
                            int obs) const override;
    double readout(const VectorXd& state) const override {
        return potential(state, env_.true_state);
    }
    double reward(const VectorXd& final_state) const override {
        return hyp_reward(env_, final_state);
    }
    double as_proxy(int action, int obs) override;
    double bt_proxy(const VectorXd& before, const VectorXd& after) const override {
        return hyp_bt_proxy(before, after, env_.true_state);
    }
    bool was_repeat(int action) const override { return asked_.count(action) > 0; }
    bool is_null_action(int action) const override { return action == env_.null_query(); }
    Eigen::Vector2d state_summary(const VectorXd& state) const override;

    const HypothesisEnv& env() const { return env_; }
    const std::set<int>& oracle_support() const { return support_; }

  private:
    HypothesisEnv env_;
    std::set<int> asked_;
    std::set<int> support_;  // running consistent set under true observations
};

class PrefEpisode : public Episode {
  public:
    explicit PrefEpisode(const PrefEnv& env);

    int horizon() const override { return env_.config.horizon; }
    int num_actions() const override { return static_cast<int>(env_.slate.size()); }
    int alphabet() const override { return 3; }  // No / Equal / Yes
    int observe(int action) override;
    int peek(int action) const override;
    VectorXd initial_state() const override {
        return VectorXd::Constant(env_.config.num_attrs, 0.5);  // default guess
    }
    VectorXd apply_operator(int op, double rate, const VectorXd& state, int action,
                            int obs) const override;
    double readout(const VectorXd& state) const override { return cosine(state, env_.w_star); }
    double reward(const VectorXd& final_state) const override {
        return pref_reward(env_, final_state, initial_state());
    }
    double as_proxy(int action, int obs) override;
    double bt_proxy(const VectorXd& before, const VectorXd& after) const override {
        return pref_bt_proxy(before, after, env_.w_star);
    }
    bool was_repeat(int action) const override { return asked_.count(action) > 0; }
    bool is_null_action(int action) const override { return action == 0; }
    Eigen::Vector2d state_summary(const VectorXd& state) const override;

    const PrefEnv& env() const { return env_; }

  private:
    PrefEnv env_;
    std::set<int> asked_;
    std::set<int> scored_;  // actions whose novelty is already consumed
};

// ---------------------------------------------------------------------------
// Env family: a config plus a base seed; episode i is deterministic in i.
// ---------------------------------------------------------------------------

enum class EnvKind { Hypothesis, PrefG, PrefF };

struct EnvFamily {
    EnvKind kind = EnvKind::Hypothesis;
    HypConfig hyp;
    PrefConfig pref;
    std::uint64_t base_seed = 0;
    // when set, every episode replays this exact instance (tiny-env oracles)
    std::optional<HypothesisEnv> fixed_hyp;

    std::unique_ptr<Episode> make(std::uint64_t index) const;
    int horizon() const;
    int num_actions() const;
    int alphabet() const;
};

}  // namespace selock
