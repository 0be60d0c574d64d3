#include "selock/critique.hpp"

#include <nlohmann/json.hpp>

namespace selock {

int as_critique(const TrajStep& step, CritiqueMode mode) {
    if (mode == CritiqueMode::FloDial) {
        // three-way rule for binary-answer environments: Yes / No / Unknown
        if (step.null_action || step.observation == kNullObs) return -1;
        return step.observation == 1 ? 1 : 0;
    }
    if (step.repeat) return -1;
    return step.as_proxy > 0.0 ? 1 : -1;
}

int bt_critique(double readout_before, double readout_after) {
    return sign_of(readout_after - readout_before);
}

CritiqueTrack build_critiques(const Trajectory& traj, CritiqueMode mode) {
    CritiqueTrack track;
    for (const auto& step : traj.steps) {
        track.z_q.push_back(as_critique(step, mode));
        track.z_u.push_back(bt_critique(step.readout_before, step.readout_after));
    }
    return track;
}

CritiqueTrack perturb(const CritiqueTrack& track, double alpha, Rng& rng) {
    if (alpha < 0.0 || alpha > 1.0) throw UsageError("perturb: alpha must lie in [0,1]");
    if (alpha == 0.0) return track;
    CritiqueTrack out = track;
    out.flipped = true;
    auto flip = [&](std::vector<int>& zs) {
        for (int& z : zs)
            if (z != 0 && uniform01(rng) < alpha) z = -z;
    };
    flip(out.z_q);
    flip(out.z_u);
    return out;
}

std::vector<double> margin_coeffs(const std::vector<int>& labels) {
    long p = 0, n = 0;
    for (int z : labels) {
        if (z > 0) ++p;
        if (z < 0) ++n;
    }
    std::vector<double> u(labels.size(), 0.0);
    if (p == 0 || n == 0) return u;
    for (size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] > 0) u[t] = 1.0 / static_cast<double>(p);
        else if (labels[t] < 0) u[t] = -1.0 / static_cast<double>(n);
    }
    return u;
}

double margin_objective(const std::vector<double>& step_logprobs, const std::vector<int>& labels) {
    if (step_logprobs.size() != labels.size())
        throw UsageError("margin_objective: misaligned inputs");
    double val = 0.0;
    const auto u = margin_coeffs(labels);
    for (size_t t = 0; t < labels.size(); ++t) val += u[t] * step_logprobs[t];
    return val;
}

double weighted_accuracy(const std::vector<int>& labels, const std::vector<int>& oracle_labels,
                         const std::vector<double>& weights) {
    if (labels.size() != oracle_labels.size() || labels.size() != weights.size())
        throw UsageError("weighted_accuracy: misaligned inputs");
    double total = 0.0, agree = 0.0;
    for (size_t t = 0; t < labels.size(); ++t) {
        if (weights[t] < 0.0) throw UsageError("weighted_accuracy: negative weight");
        total += weights[t];
        if (labels[t] == oracle_labels[t]) agree += weights[t];
    }
    if (total <= 0.0) throw NumericError("weighted_accuracy: all-zero total weight");
    return agree / total;
}

std::string CritiqueTrack::to_json() const {
    nlohmann::json j;
    j["z_q"] = z_q;
    j["z_u"] = z_u;
    j["provenance"] = flipped ? "flipped" : "clean";
    return j.dump();
}

}  // namespace selock
