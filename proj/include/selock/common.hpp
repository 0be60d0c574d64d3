#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace selock {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown on caller mistakes (bad indices, malformed arguments).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a numeric contract is violated (zero posterior mass,
// non-finite scores, undefined correlation, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// splitmix64; used to derive independent streams from (seed, stream-id)
// so parallel and serial execution agree.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(splitmix64(splitmix64(seed) ^ stream));
}

// uniform double in [0,1); hand-rolled so output bytes do not depend on
// the standard library's distribution internals
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// unbiased integer in [0, n) by rejection
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n == 0) throw UsageError("uniform_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

inline double normal01(Rng& rng) {
    // Box-Muller, one value per call (the sibling draw is discarded)
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// numerically stabilized softmax (max-score subtraction)
inline VectorXd softmax(const VectorXd& scores) {
    if (!scores.allFinite()) throw NumericError("softmax: non-finite scores");
    VectorXd z = (scores.array() - scores.maxCoeff()).exp();
    return z / z.sum();
}

// sample an index from a probability vector with a single uniform draw
inline int sample_categorical(const VectorXd& probs, Rng& rng) {
    double u = uniform01(rng);
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

inline int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    out.n = static_cast<long>(xs.size());
    if (out.n == 0) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(out.n);
    if (out.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.stderr_ = std::sqrt(ss / (static_cast<double>(out.n) * (static_cast<double>(out.n) - 1)));
    }
    return out;
}

// Pearson sample correlation; throws on zero variance
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("pearson: need two aligned samples");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= n; my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw NumericError("pearson: zero-variance sample");
    return sxy / std::sqrt(sxx * syy);
}

// Spearman rank correlation (average ranks for ties)
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<size_t> idx(v.size());
        for (size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        size_t i = 0;
        while (i < idx.size()) {
            size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    return pearson(ranks(x), ranks(y));
}

}  // namespace selock
