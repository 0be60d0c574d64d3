#pragma once

#include <vector>

#include "selock/agent.hpp"

namespace selock {

enum class CritiqueMode { Default, FloDial };

// Per-turn directional labels for the two channels.
struct CritiqueTrack {
    std::vector<int> z_q;  // AS channel, in {-1, 0, +1}
    std::vector<int> z_u;  // BT channel
    bool flipped = false;

    std::string to_json() const;
};

int as_critique(const TrajStep& step, CritiqueMode mode = CritiqueMode::Default);
int bt_critique(double readout_before, double readout_after);

CritiqueTrack build_critiques(const Trajectory& traj, CritiqueMode mode = CritiqueMode::Default);

// Independently negates each nonzero label with probability alpha.
CritiqueTrack perturb(const CritiqueTrack& track, double alpha, Rng& rng);

// u_t = 1/|P| on +1 steps, -1/|N| on -1 steps, 0 otherwise; all-zero when
// either class is empty (no auxiliary term for single-class trajectories).
std::vector<double> margin_coeffs(const std::vector<int>& labels);

// Intra-trajectory likelihood margin: mean logprob over P minus mean over N.
double margin_objective(const std::vector<double>& step_logprobs, const std::vector<int>& labels);

// Weight-averaged agreement with oracle direction labels.
double weighted_accuracy(const std::vector<int>& labels, const std::vector<int>& oracle_labels,
                         const std::vector<double>& weights);

}  // namespace selock
