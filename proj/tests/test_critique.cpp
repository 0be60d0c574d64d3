#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "selock/critique.hpp"

using namespace selock;

namespace {

TrajStep step_with(double as_proxy, bool repeat, bool null_action, int obs = 1) {
    TrajStep s;
    s.as_proxy = as_proxy;
    s.repeat = repeat;
    s.null_action = null_action;
    s.observation = obs;
    return s;
}

}  // namespace

TEST_CASE("as_critique marks informative, repeated, and null queries") {
    CHECK(as_critique(step_with(0.0, false, true)) == -1);   // null query
    CHECK(as_critique(step_with(2.0, false, false)) == 1);   // eliminated states
    CHECK(as_critique(step_with(2.0, true, false)) == -1);   // repeat trumps novelty
    CHECK(as_critique(step_with(0.0, false, false)) == -1);  // uninformative
}

TEST_CASE("three-way critique rule keys on the binary answer") {
    CHECK(as_critique(step_with(1.0, false, false, 1), CritiqueMode::FloDial) == 1);
    CHECK(as_critique(step_with(1.0, false, false, 0), CritiqueMode::FloDial) == 0);
    CHECK(as_critique(step_with(1.0, false, false, kNullObs), CritiqueMode::FloDial) == -1);
    CHECK(as_critique(step_with(0.0, false, true, 1), CritiqueMode::FloDial) == -1);
}

TEST_CASE("bt_critique is the sign of the readout change") {
    CHECK(bt_critique(0.4, 0.6) == 1);
    CHECK(bt_critique(0.6, 0.4) == -1);
    CHECK(bt_critique(0.5, 0.5) == 0);
}

TEST_CASE("bt_critique antisymmetry") {
    Rng rng = make_rng(1, 0);
    for (int i = 0; i < 200; ++i) {
        double a = uniform01(rng), b = uniform01(rng);
        CHECK(bt_critique(a, b) == -bt_critique(b, a));
    }
}

TEST_CASE("build_critiques aligns with the trajectory and the AS proxy") {
    Trajectory traj;
    traj.steps.push_back(step_with(1.0, false, false));
    traj.steps.push_back(step_with(0.0, false, true));
    traj.steps.back().readout_before = 0.2;
    traj.steps.back().readout_after = 0.5;
    CritiqueTrack track = build_critiques(traj);
    REQUIRE(track.z_q.size() == 2);
    REQUIRE(track.z_u.size() == 2);
    CHECK(track.z_q[0] == 1);
    CHECK(track.z_q[1] == -1);
    CHECK(track.z_u[1] == 1);
    CHECK_FALSE(track.flipped);
    for (size_t t = 0; t < traj.steps.size(); ++t)
        CHECK(track.z_q[t] == ((traj.steps[t].as_proxy > 0 && !traj.steps[t].repeat) ? 1 : -1));
}

TEST_CASE("perturb flips nonzero labels at the requested rate") {
    CritiqueTrack track;
    track.z_q.assign(100, 1);
    track.z_u.assign(100, 0);
    Rng rng = make_rng(2, 0);

    CritiqueTrack same = perturb(track, 0.0, rng);
    CHECK(same.z_q == track.z_q);
    CHECK(same.z_u == track.z_u);
    CHECK_FALSE(same.flipped);

    CritiqueTrack flipped = perturb(track, 1.0, rng);
    for (int z : flipped.z_q) CHECK(z == -1);
    for (int z : flipped.z_u) CHECK(z == 0);  // zeros untouched
    CHECK(flipped.flipped);

    // empirical flip rate at alpha = 0.5 within 3 sigma binomial
    const int n = 100000;
    CritiqueTrack big;
    big.z_q.assign(n, 1);
    big.z_u.assign(n, -1);
    CritiqueTrack half = perturb(big, 0.5, rng);
    int flips = 0;
    for (int z : half.z_q) flips += z == -1 ? 1 : 0;
    double rate = static_cast<double>(flips) / n;
    double sigma = std::sqrt(0.25 / n);
    CHECK(std::abs(rate - 0.5) <= 3 * sigma);
    for (int z : half.z_u) CHECK((z == 1 || z == -1));
}

TEST_CASE("perturb at alpha zero consumes no randomness") {
    CritiqueTrack track;
    track.z_q.assign(8, 1);
    track.z_u.assign(8, -1);
    Rng a = make_rng(3, 0), b = make_rng(3, 0);
    perturb(track, 0.0, a);
    CHECK(a() == b());
}

TEST_CASE("margin coefficients center exactly") {
    std::vector<double> u = margin_coeffs({1, 0, -1, 1, -1});
    CHECK(u == std::vector<double>{0.5, 0.0, -0.5, 0.5, -0.5});

    CHECK(margin_coeffs({1, 1}) == std::vector<double>(2, 0.0));  // no negatives
    CHECK(margin_coeffs({-1, 0}) == std::vector<double>(2, 0.0));
    CHECK(margin_coeffs({}) == std::vector<double>{});

    std::vector<double> u2 = margin_coeffs({1, 1, -1});
    CHECK(u2 == std::vector<double>{0.5, 0.5, -1.0});

    Rng rng = make_rng(4, 0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> labels(1 + uniform_below(rng, 10));
        for (int& z : labels) z = static_cast<int>(uniform_below(rng, 3)) - 1;
        std::vector<double> c = margin_coeffs(labels);
        double s = 0.0;
        for (double v : c) s += v;
        CHECK(std::abs(s) <= 1e-12);
    }
}

TEST_CASE("margin objective is a pure likelihood margin") {
    CHECK(margin_objective({-1.0, -2.0}, {0, 0}) == 0.0);
    CHECK(margin_objective({-1.0, -2.0}, {1, -1}) == doctest::Approx(1.0));
    // adding a constant to every logprob leaves the margin unchanged
    Rng rng = make_rng(5, 0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(uniform_below(rng, 6));
        std::vector<double> lp(n);
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) {
            lp[i] = -3.0 * uniform01(rng);
            labels[i] = static_cast<int>(uniform_below(rng, 3)) - 1;
        }
        double base = margin_objective(lp, labels);
        double c = normal01(rng);
        std::vector<double> shifted = lp;
        for (double& v : shifted) v += c;
        CHECK(margin_objective(shifted, labels) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("weighted accuracy averages agreement by weight") {
    std::vector<int> y = {1, -1, 1, -1};
    std::vector<double> w = {1.0, 2.0, 3.0, 4.0};
    CHECK(weighted_accuracy(y, y, w) == 1.0);
    std::vector<int> anti = {-1, 1, -1, 1};
    CHECK(weighted_accuracy(anti, y, w) == 0.0);
    std::vector<int> mixed = {1, 1, 1, -1};  // wrong on weight 2 of 10
    CHECK(weighted_accuracy(mixed, y, w) == doctest::Approx(0.8));
    CHECK_THROWS_AS(weighted_accuracy(y, y, std::vector<double>(4, 0.0)), NumericError);

    // independent flips at rate one half land at one half
    Rng rng = make_rng(6, 0);
    const int n = 10000;
    std::vector<int> labels(n), oracle(n);
    std::vector<double> weights(n);
    for (int i = 0; i < n; ++i) {
        oracle[i] = uniform01(rng) < 0.5 ? 1 : -1;
        labels[i] = uniform01(rng) < 0.5 ? oracle[i] : -oracle[i];
        weights[i] = 0.1 + uniform01(rng);
    }
    double acc = weighted_accuracy(labels, oracle, weights);
    CHECK(std::abs(acc - 0.5) <= 3.0 * std::sqrt(0.25 / n) * 1.6);  // weighted-variance slack
}
