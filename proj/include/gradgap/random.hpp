#pragma once

// Seeded random streams and random instance generators.
//
// Every purpose draws from its own child generator: mt19937_64 seeded with
// splitmix64(seed ^ splitmix64(stream)). Uniforms take the top 53 bits;
// normals go through the inverse normal CDF, one uniform per draw.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "gradgap/linalg.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"

namespace gradgap {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { beta = 1, theta0 = 2, pool = 3, eval = 4, curriculum = 5, arms = 6, suite = 7 };

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed ^ splitmix64(stream))) {}
    Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal(double mean = 0.0, double sd = 1.0) {
        // midpoint of the 2^-53 cell keeps the quantile argument inside (0, 1)
        const double u = (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
        static const boost::math::normal_distribution<double> standard;
        return mean + sd * boost::math::quantile(standard, u);
    }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0)
            throw InvalidInput("Rng::below: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = bits();
        } while (x >= limit);
        return x % n;
    }

    Vec normal_vector(std::size_t n, double sd = 1.0) {
        Vec v(n);
        for (double& x : v)
            x = normal(0.0, sd);
        return v;
    }

    /// Uniform on the unit sphere scaled by a radius drawn uniformly from [0, 1].
    Vec direction(std::size_t n) {
        Vec v = normal_vector(n);
        const double r = norm2(v);
        const double radius = uniform();
        for (double& x : v)
            x *= radius / (r > 0.0 ? r : 1.0);
        return v;
    }

private:
    std::mt19937_64 engine_;
};

/// d in [1, max_d], 2..max_n responses with standard normal features, both labels present.
inline TrajectoryInstance random_trajectory_instance(Rng& rng, std::size_t max_d = 5, std::size_t max_n = 8,
                                                     double feature_scale = 1.0) {
    const std::size_t d = 1 + rng.below(max_d);
    const std::size_t n = 2 + rng.below(max_n - 1);
    const std::size_t forced_pos = rng.below(n);
    std::size_t forced_neg = rng.below(n - 1);
    if (forced_neg >= forced_pos)
        ++forced_neg;
    std::vector<Response> rs;
    for (std::size_t i = 0; i < n; ++i) {
        bool pos = rng.uniform() < 0.5;
        if (i == forced_pos)
            pos = true;
        if (i == forced_neg)
            pos = false;
        rs.push_back({"o" + std::to_string(i), rng.normal_vector(d, feature_scale), pos});
    }
    return TrajectoryInstance("random", d, std::move(rs));
}

/// Vocabulary of 2..max_v tokens, length cap 1..max_t, optional EOS, random positive sequence set.
inline TokenInstance random_token_instance(Rng& rng, int max_v = 3, int max_t = 5, std::size_t max_d = 3,
                                           double feature_scale = 1.0) {
    const std::size_t d = 1 + rng.below(max_d);
    const int v = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_v - 1)));
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_t)));
    std::optional<int> eos;
    if (rng.uniform() < 0.5)
        eos = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    std::vector<Token> tokens;
    for (int i = 0; i < v; ++i)
        tokens.push_back({"t" + std::to_string(i), rng.normal_vector(d, feature_scale)});

    const auto seqs = complete_sequences(v, t, eos);
    std::vector<Sequence> positives;
    const std::size_t forced_pos = rng.below(seqs.size());
    std::size_t forced_neg = rng.below(seqs.size() - 1);
    if (forced_neg >= forced_pos)
        ++forced_neg;
    const double rate = rng.uniform();
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        bool pos = rng.uniform() < rate;
        if (i == forced_pos)
            pos = true;
        if (i == forced_neg)
            pos = false;
        if (pos)
            positives.push_back(seqs[i]);
    }
    return TokenInstance("random", d, std::move(tokens), t, eos, SequenceSetRule{std::move(positives)});
}

}  // namespace gradgap
