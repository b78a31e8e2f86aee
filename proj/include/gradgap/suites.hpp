#pragma once

// Randomized property suites over the diagnostics checks.

#include <cstdint>
#include <string>
#include <vector>

#include "gradgap/counterexamples.hpp"
#include "gradgap/diagnostics.hpp"
#include "gradgap/parallel.hpp"
#include "gradgap/random.hpp"

namespace gradgap {

struct SuiteResult {
    std::string name;
    std::vector<BoundReport> reports;

    int failures() const {
        int n = 0;
        for (const auto& r : reports)
            n += r.satisfied ? 0 : 1;
        return n;
    }
    int skipped() const {
        int n = 0;
        for (const auto& r : reports)
            n += r.skipped ? 1 : 0;
        return n;
    }
    bool passed() const { return failures() == 0; }
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"identity", "taylor", "mgf", "difflog", "token-difflog", "gap-floor"};
    return names;
}

namespace detail {

/// Runs `cases` independent draws, each from its own child stream of `seed`.
template <typename Draw>
SuiteResult run_cases(const std::string& name, int cases, std::uint64_t seed, Draw&& draw) {
    SuiteResult res{name, std::vector<BoundReport>(static_cast<std::size_t>(cases))};
    parallel_for(res.reports.size(), [&](std::size_t i) {
        Rng rng(seed, splitmix64(static_cast<std::uint64_t>(Stream::suite)) + i);
        res.reports[i] = draw(rng, static_cast<int>(i));
    });
    return res;
}

inline Vec central_difference_gradient(const TrajectoryInstance& inst, const ParamVector& theta, double h) {
    Vec g(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
        Vec up = theta.entries(), down = theta.entries();
        up[j] += h;
        down[j] -= h;
        g[j] = (value(inst, ParamVector(up)) - value(inst, ParamVector(down))) / (2.0 * h);
    }
    return g;
}

}  // namespace detail

/// grad J from the gap identity against central differences (h = 1e-5) and
/// against the advantage-weighted sum. Two reports per instance.
inline SuiteResult identity_suite(std::uint64_t seed, int instances = 100) {
    SuiteResult fd = detail::run_cases("identity", instances, seed, [](Rng& rng, int i) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec g = policy_gradient(inst, theta);
        const Vec num = detail::central_difference_gradient(inst, theta, 1e-5);
        const double err = norm2(subtract(g, num)) / (1.0 + norm2(g));
        return detail::leq_report(err, 1e-4, "identity fd #" + std::to_string(i), 0.0);
    });
    SuiteResult paths = detail::run_cases("identity", instances, seed, [](Rng& rng, int i) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const GapReport rep = gradient_gap_report(inst, theta);
        const double err = norm2(subtract(policy_gradient(inst, theta), policy_gradient_direct(inst, theta)));
        return detail::leq_report(err, 1e-10 * (1.0 + norm2(rep.gap)), "identity paths #" + std::to_string(i), 0.0);
    });
    fd.reports.insert(fd.reports.end(), paths.reports.begin(), paths.reports.end());
    return fd;
}

/// Draws (instance, theta, w, eta) with eta uniform on [0, 1/(2 sqrt L)].
inline SuiteResult taylor_suite(std::uint64_t seed, int draws = 1000) {
    return detail::run_cases("taylor", draws, seed, [](Rng& rng, int i) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec w = rng.direction(inst.dimension());
        const double l = analytic_constants(inst).lipschitz;
        const double eta = rng.uniform() / (2.0 * std::sqrt(l));
        BoundReport r = taylor_residual_check(inst, theta, w, eta);
        r.context += " #" + std::to_string(i);
        return r;
    });
}

/// Discrete variables with 1..10 atoms, values uniform on [-3, 3].
inline SuiteResult mgf_suite(std::uint64_t seed, int draws = 1000) {
    return detail::run_cases("mgf", draws, seed, [](Rng& rng, int i) {
        const std::size_t n = 1 + rng.below(10);
        Vec x(n), p(n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = rng.uniform(-3.0, 3.0);
            p[j] = -std::log(1.0 - rng.uniform());  // exponential weights give a flat Dirichlet
            total += p[j];
        }
        for (double& v : p)
            v /= total;
        BoundReport r = mgf_bound_check(x, p);
        r.context += " #" + std::to_string(i);
        return r;
    });
}

inline SuiteResult difflog_suite(std::uint64_t seed, int pairs = 100) {
    return detail::run_cases("difflog", pairs, seed, [](Rng& rng, int i) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector a(rng.normal_vector(inst.dimension()));
        Vec b = a.entries();
        axpy(1.0, rng.normal_vector(inst.dimension()), b);
        BoundReport r = difflog_identity_check(inst, a, ParamVector(b));
        r.context += " #" + std::to_string(i);
        return r;
    });
}

/// Random token instances (V <= 3, T <= 5); eta uniform on [0, 1/sqrt(2 G^2 Tpsi1)].
inline SuiteResult token_difflog_suite(std::uint64_t seed, int instances = 500) {
    return detail::run_cases("token-difflog", instances, seed, [](Rng& rng, int i) {
        const auto inst = random_token_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec w = rng.direction(inst.dimension());
        const double g = token_analytic_constants(inst).score_bound;
        const double t_psi1 = length_stats(inst, theta).t_psi1;
        const double eta = rng.uniform() / std::sqrt(2.0 * g * g * t_psi1);
        BoundReport r = token_difflog_bound_check(inst, theta, w, eta);
        r.context += " #" + std::to_string(i);
        return r;
    });
}

/// Alignment floors along both overshoot schemes.
inline SuiteResult gap_floor_suite(int k_max = 200) {
    SuiteResult res{"gap-floor", verify_gap_floor(build_trajectory_lb(2.0, 0.1), k_max)};
    for (int t : {4, 8}) {
        const auto more = verify_gap_floor(build_token_lb(2.0, 0.05, t), k_max);
        res.reports.insert(res.reports.end(), more.begin(), more.end());
    }
    return res;
}

inline SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "identity") return identity_suite(seed);
    if (name == "taylor") return taylor_suite(seed);
    if (name == "mgf") return mgf_suite(seed);
    if (name == "difflog") return difflog_suite(seed);
    if (name == "token-difflog") return token_difflog_suite(seed);
    if (name == "gap-floor") return gap_floor_suite();
    throw InvalidInput("unknown suite '" + name + "'");
}

}  // namespace gradgap
