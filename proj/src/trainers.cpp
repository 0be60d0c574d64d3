#include "selock/trainers.hpp"

#include <sstream>

#include "selock/diagnostics.hpp"

namespace selock {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::PPO: return "ppo";
        case Algorithm::GRPO: return "grpo";
        case Algorithm::GSPO: return "gspo";
    }
    return "?";
}

std::string to_string(ArewMode m) {
    switch (m) {
        case ArewMode::Off: return "off";
        case ArewMode::AsOnly: return "as_only";
        case ArewMode::AsBt: return "as_bt";
    }
    return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "ppo") return Algorithm::PPO;
    if (s == "grpo") return Algorithm::GRPO;
    if (s == "gspo") return Algorithm::GSPO;
    throw ConfigError("unknown algorithm: " + s);
}

ArewMode arew_mode_from_string(const std::string& s) {
    if (s == "off") return ArewMode::Off;
    if (s == "as_only") return ArewMode::AsOnly;
    if (s == "as_bt") return ArewMode::AsBt;
    throw ConfigError("unknown arew mode: " + s);
}

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("train.lr must be positive");
    if (clip <= 0.0 || clip_low <= 0.0 || clip_high <= 0.0)
        throw ConfigError("clip ranges must be positive");
    if (lambda_inj < 0.0) throw ConfigError("train.lambda_inj must be nonnegative");
    if (steps < 0 || batch_size < 1) throw ConfigError("train.steps/batch_size out of range");
    if (flip_alpha < 0.0 || flip_alpha > 1.0) throw ConfigError("critique.flip_alpha out of [0,1]");
    if (algorithm != Algorithm::PPO) {
        if (group_size < 2) throw ConfigError("group methods need group_size >= 2");
        if (batch_size % group_size != 0)
            throw ConfigError("batch_size must be a multiple of group_size");
    }
}

std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                        double lambda, double gamma) {
    if (values.size() != rewards.size() + 1) throw UsageError("gae: values must have length turns+1");
    std::vector<double> adv(rewards.size(), 0.0);
    double acc = 0.0;
    for (long t = static_cast<long>(rewards.size()) - 1; t >= 0; --t) {
        double delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    return adv;
}

std::vector<double> grpo_advantages(const std::vector<double>& group_rewards) {
    const auto g = static_cast<double>(group_rewards.size());
    if (group_rewards.size() < 2) throw UsageError("grpo_advantages: need group size >= 2");
    // equal rewards are degenerate by definition, not by a variance tolerance
    bool all_equal = true;
    for (double r : group_rewards) all_equal &= r == group_rewards[0];
    if (all_equal) return std::vector<double>(group_rewards.size(), 0.0);
    double mean = 0.0;
    for (double r : group_rewards) mean += r;
    mean /= g;
    double var = 0.0;
    for (double r : group_rewards) var += (r - mean) * (r - mean);
    var /= g;  // population std
    std::vector<double> adv(group_rewards.size(), 0.0);
    if (var <= 0.0) return adv;
    double sd = std::sqrt(var);
    for (size_t i = 0; i < group_rewards.size(); ++i) adv[i] = (group_rewards[i] - mean) / sd;
    return adv;
}

double gspo_ratio(const std::vector<double>& new_logprobs, const std::vector<double>& old_logprobs) {
    if (new_logprobs.empty() || new_logprobs.size() != old_logprobs.size())
        throw UsageError("gspo_ratio: need aligned nonempty sequences");
    double s = 0.0;
    for (size_t i = 0; i < new_logprobs.size(); ++i) s += new_logprobs[i] - old_logprobs[i];
    return std::exp(s / static_cast<double>(new_logprobs.size()));
}

std::vector<double> arew_shape(const std::vector<double>& advantages,
                               const std::vector<double>& coeffs, double lambda_inj) {
    if (advantages.size() != coeffs.size()) throw UsageError("arew_shape: misaligned inputs");
    std::vector<double> out(advantages.size());
    for (size_t t = 0; t < out.size(); ++t) out[t] = advantages[t] + lambda_inj * coeffs[t];
    return out;
}

void ValueBaseline::update(const std::vector<double>& returns_to_go) {
    if (returns_to_go.size() + 1 != values.size())
        throw UsageError("ValueBaseline: length mismatch");
    ++count;
    for (size_t t = 0; t < returns_to_go.size(); ++t)
        values[t] += (returns_to_go[t] - values[t]) / static_cast<double>(count);
    values.back() = 0.0;  // terminal bootstrap stays zero
}

namespace {

// clipped-surrogate gradient coefficient for one decision
double clip_coeff(double ratio, double adv, double lo, double hi, long& clipped, long& total) {
    ++total;
    if ((adv > 0.0 && ratio > hi) || (adv < 0.0 && ratio < lo)) {
        ++clipped;
        return 0.0;
    }
    return ratio * adv;
}

}  // namespace

StepMetrics policy_step(AgentParams& params, const AgentSpec& spec, std::vector<BatchItem>& batch,
                        ValueBaseline& baseline, const TrainConfig& config) {
    if (batch.empty()) throw UsageError("policy_step: empty batch");
    StepMetrics metrics;
    const auto B = static_cast<double>(batch.size());

    // outcome advantages
    if (config.algorithm == Algorithm::PPO) {
        for (auto& item : batch) {
            const size_t H = item.traj.steps.size();
            std::vector<double> rewards(H, 0.0);
            if (H > 0) rewards[H - 1] = item.traj.reward;
            item.adv = gae(rewards, baseline.values, config.gae_lambda, config.gamma);
        }
        // running per-turn baseline update on the observed returns-to-go
        for (auto& item : batch) {
            const size_t H = item.traj.steps.size();
            std::vector<double> rtg(H, 0.0);
            double acc = 0.0;
            for (long t = static_cast<long>(H) - 1; t >= 0; --t) {
                acc = (t + 1 == static_cast<long>(H) ? item.traj.reward : config.gamma * acc);
                rtg[t] = acc;
            }
            baseline.update(rtg);
        }
    } else {
        for (size_t g = 0; g < batch.size(); g += config.group_size) {
            std::vector<double> rewards;
            for (int j = 0; j < config.group_size; ++j) rewards.push_back(batch[g + j].traj.reward);
            auto adv = grpo_advantages(rewards);
            for (int j = 0; j < config.group_size; ++j)
                batch[g + j].adv.assign(batch[g + j].traj.steps.size(), adv[j]);
        }
    }

    // AReW shaping per channel
    for (auto& item : batch) {
        std::vector<double> u_q(item.traj.steps.size(), 0.0), u_u(item.traj.steps.size(), 0.0);
        if (config.arew_mode != ArewMode::Off) {
            u_q = margin_coeffs(item.used.z_q);
            if (config.arew_mode == ArewMode::AsBt) u_u = margin_coeffs(item.used.z_u);
        }
        item.shaped_q = arew_shape(item.adv, u_q, config.lambda_inj);
        item.shaped_u = arew_shape(item.adv, u_u, config.lambda_inj);
    }

    // gradient of the clipped surrogate (single epoch: ratios start at 1)
    Gradient grad = zero_gradient(spec);
    long clipped = 0, total = 0;
    const double lo_p = 1.0 - config.clip, hi_p = 1.0 + config.clip;
    for (auto& item : batch) {
        if (config.algorithm == Algorithm::GSPO) {
            std::vector<double> old_lp, new_lp;
            for (const auto& st : item.traj.steps) {
                old_lp.push_back(st.logprob_q);
                old_lp.push_back(st.logprob_u);
                new_lp.push_back(query_logprob(params, st.fq, st.action));
                new_lp.push_back(update_logprob(params, st.fu, st.op_index));
            }
            if (item.traj.steps.empty()) continue;
            double ratio = gspo_ratio(new_lp, old_lp);
            double adv = item.adv.empty() ? 0.0 : item.adv[0];  // sequence-level advantage
            double coeff = clip_coeff(ratio, adv, 1.0 - config.clip_low, 1.0 + config.clip_high,
                                      clipped, total);
            const double len = 2.0 * static_cast<double>(item.traj.steps.size());
            for (const auto& st : item.traj.steps) {
                accumulate_query_grad(params, st.fq, st.action, coeff / len, grad.query);
                accumulate_update_grad(params, st.fu, st.op_index, coeff / len, grad.update);
            }
            // margin-coefficient injection enters as the auxiliary-objective
            // gradient (sequence ratios leave no per-step advantage slot)
            if (config.arew_mode != ArewMode::Off && config.lambda_inj > 0.0) {
                auto u_q = margin_coeffs(item.used.z_q);
                auto u_u = config.arew_mode == ArewMode::AsBt
                               ? margin_coeffs(item.used.z_u)
                               : std::vector<double>(item.traj.steps.size(), 0.0);
                for (size_t t = 0; t < item.traj.steps.size(); ++t) {
                    const auto& st = item.traj.steps[t];
                    if (u_q[t] != 0.0)
                        accumulate_query_grad(params, st.fq, st.action,
                                              config.lambda_inj * u_q[t], grad.query);
                    if (u_u[t] != 0.0)
                        accumulate_update_grad(params, st.fu, st.op_index,
                                               config.lambda_inj * u_u[t], grad.update);
                }
            }
        } else {
            for (size_t t = 0; t < item.traj.steps.size(); ++t) {
                const auto& st = item.traj.steps[t];
                double rq = std::exp(query_logprob(params, st.fq, st.action) - st.logprob_q);
                double ru = std::exp(update_logprob(params, st.fu, st.op_index) - st.logprob_u);
                double cq = clip_coeff(rq, item.shaped_q[t], lo_p, hi_p, clipped, total);
                double cu = clip_coeff(ru, item.shaped_u[t], lo_p, hi_p, clipped, total);
                if (cq != 0.0) accumulate_query_grad(params, st.fq, st.action, cq, grad.query);
                if (cu != 0.0) accumulate_update_grad(params, st.fu, st.op_index, cu, grad.update);
            }
        }
    }
    if (!grad.query.allFinite() || !grad.update.allFinite())
        throw NumericError("policy_step: non-finite gradient");

    grad.query /= B;
    grad.update /= B;
    params.query_weights += config.lr * grad.query;
    params.update_weights += config.lr * grad.update;

    metrics.clip_frac = total > 0 ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    metrics.grad_norm_q = grad.query.norm();
    metrics.grad_norm_u = grad.update.norm();
    long nsteps = 0;
    for (const auto& item : batch) {
        metrics.mean_reward += item.traj.reward;
        for (const auto& st : item.traj.steps) {
            metrics.as_proxy_mean += st.as_proxy;
            metrics.bt_proxy_mean += st.bt_proxy;
            ++nsteps;
        }
    }
    metrics.mean_reward /= B;
    if (nsteps > 0) {
        metrics.as_proxy_mean /= static_cast<double>(nsteps);
        metrics.bt_proxy_mean /= static_cast<double>(nsteps);
    }
    return metrics;
}

TrainingRun train(const TrainConfig& config, const EnvFamily& family, const AgentSpec& spec,
                  const AgentParams& init, std::uint64_t seed) {
    config.validate();
    TrainingRun run;
    AgentParams params = init;
    ValueBaseline baseline(family.horizon());
    Rng rollout_rng = make_rng(seed, 0x11);
    Rng flip_rng = make_rng(seed, 0x22);
    const std::uint64_t env_base = splitmix64(seed ^ 0xE57);

    for (int step = 0; step < config.steps; ++step) {
        std::vector<BatchItem> batch;
        batch.reserve(config.batch_size);
        for (int i = 0; i < config.batch_size; ++i) {
            // group methods roll the same instance group_size times
            std::uint64_t idx = env_base +
                                static_cast<std::uint64_t>(step) * config.batch_size +
                                (config.algorithm == Algorithm::PPO
                                     ? static_cast<std::uint64_t>(i)
                                     : static_cast<std::uint64_t>(i / config.group_size));
            auto episode = family.make(idx);
            BatchItem item;
            item.traj = rollout(params, spec, *episode, rollout_rng);
            item.clean = build_critiques(item.traj, config.critique_mode);
            item.used = config.flip_alpha > 0.0 ? perturb(item.clean, config.flip_alpha, flip_rng)
                                                : item.clean;
            OracleAsLabels oracle = oracle_as_labels(params, spec, *episode, item.traj);
            item.y_q = oracle.labels;
            item.y_adv = oracle.advantages;
            batch.push_back(std::move(item));
        }

        StepMetrics metrics = policy_step(params, spec, batch, baseline, config);
        metrics.step = step;

        // weighted critique accuracies against the oracle direction labels
        {
            std::vector<int> zq, yq, zu, yu;
            std::vector<double> wq, wu;
            for (const auto& item : batch) {
                auto uq = margin_coeffs(item.used.z_q);
                auto uu = margin_coeffs(item.used.z_u);
                for (size_t t = 0; t < item.traj.steps.size(); ++t) {
                    const auto& st = item.traj.steps[t];
                    VectorXd probs = softmax(params.query_weights * st.fq);
                    VectorXd sel = -probs;
                    sel[st.action] += 1.0;
                    double score_norm2 = sel.squaredNorm() * st.fq.squaredNorm();
                    zq.push_back(item.used.z_q[t]);
                    yq.push_back(item.y_q[t]);
                    wq.push_back(std::abs(uq[t]) * std::abs(item.y_adv[t]) * score_norm2);
                    zu.push_back(item.used.z_u[t]);
                    yu.push_back(item.clean.z_u[t]);
                    wu.push_back(std::abs(uu[t]) *
                                 std::abs(st.readout_after - st.readout_before));
                }
            }
            auto safe_acc = [](const std::vector<int>& z, const std::vector<int>& y,
                               const std::vector<double>& w) {
                try {
                    return weighted_accuracy(z, y, w);
                } catch (const NumericError&) {
                    return std::nan("");
                }
            };
            metrics.acc_q = safe_acc(zq, yq, wq);
            metrics.acc_u = safe_acc(zu, yu, wu);
        }

        if (config.diag_rollouts > 0) {
            Rng diag_rng = make_rng(seed, 0x33 + static_cast<std::uint64_t>(step));
            metrics.i_th_est = estimate_I_th(params, spec, family, config.diag_rollouts, diag_rng).mean;
            metrics.c_bt_est = estimate_C_BT(params, spec, family, config.diag_rollouts, diag_rng).mean;
        }
        run.series.push_back(metrics);
    }
    run.final_params = params;
    return run;
}

std::string metrics_csv_header() {
    return "step,algorithm,arew_mode,lambda_inj,flip_alpha,mean_reward,as_proxy_mean,"
           "bt_proxy_mean,I_th_est,C_BT_est,acc_q,acc_u,clip_frac,grad_norm_q,grad_norm_u,seed";
}

std::string metrics_csv_row(const StepMetrics& m, const TrainConfig& config, std::uint64_t seed) {
    std::ostringstream os;
    os.precision(17);
    os << m.step << ',' << to_string(config.algorithm) << ',' << to_string(config.arew_mode) << ','
       << config.lambda_inj << ',' << config.flip_alpha << ',' << m.mean_reward << ','
       << m.as_proxy_mean << ',' << m.bt_proxy_mean << ',' << m.i_th_est << ',' << m.c_bt_est
       << ',' << m.acc_q << ',' << m.acc_u << ',' << m.clip_frac << ',' << m.grad_norm_q << ','
       << m.grad_norm_u << ',' << seed;
    return os.str();
}

}  // namespace selock
