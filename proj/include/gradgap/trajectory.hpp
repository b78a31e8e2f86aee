#pragma once

// Trajectory-level softmax policy over a finite response space with linear
// logits <phi(o), theta>. Every expectation is an exact sum over responses.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradgap/linalg.hpp"

namespace gradgap {

struct Response {
    std::string id;
    Vec features;
    bool positive = false;
    /// Declared response length; only the GRPO length normalization reads it.
    double length = 1.0;
};

class TrajectoryInstance {
public:
    TrajectoryInstance(std::string prompt_id, std::size_t dimension, std::vector<Response> responses)
        : prompt_id_(std::move(prompt_id)), dimension_(dimension) {
        if (dimension_ == 0)
            throw InvalidInput("TrajectoryInstance: dimension must be positive");
        bool any_pos = false, any_neg = false;
        features_.reserve(responses.size() * dimension_);
        for (const auto& r : responses) {
            if (r.features.size() != dimension_)
                throw InvalidInput("TrajectoryInstance: response '" + r.id + "' has " +
                                   std::to_string(r.features.size()) + " features, expected " +
                                   std::to_string(dimension_));
            if (!all_finite(r.features))
                throw InvalidInput("TrajectoryInstance: response '" + r.id + "' has non-finite features");
            if (!(r.length >= 1.0) || !std::isfinite(r.length))
                throw InvalidInput("TrajectoryInstance: response '" + r.id + "' has invalid length");
            features_.insert(features_.end(), r.features.begin(), r.features.end());
            ids_.push_back(r.id);
            positive_.push_back(r.positive ? 1 : 0);
            lengths_.push_back(r.length);
            any_pos = any_pos || r.positive;
            any_neg = any_neg || !r.positive;
        }
        if (!any_pos || !any_neg)
            throw InvalidInput("TrajectoryInstance: need at least one positive and one negative response");
    }

    const std::string& prompt_id() const { return prompt_id_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t i) const { return ids_.at(i); }
    bool positive(std::size_t i) const { return positive_.at(i) != 0; }
    double length(std::size_t i) const { return lengths_.at(i); }
    std::span<const double> features(std::size_t i) const {
        return std::span<const double>(features_).subspan(i * dimension_, dimension_);
    }

private:
    std::string prompt_id_;
    std::size_t dimension_;
    std::vector<std::string> ids_;
    Vec features_;  // row-major, one row per response
    std::vector<char> positive_;
    std::vector<double> lengths_;
};

/// One evaluation snapshot of the gap quantities at a parameter.
struct GapReport {
    double value = 0.0;
    Vec g_plus;
    Vec g_minus;
    Vec gap;
    std::optional<double> rho;
    double score_bound = 0.0;
    double log_odds = 0.0;
};

struct AnalyticConstants {
    double score_bound = 0.0;  // G: uniform bound on score norms
    double lipschitz = 0.0;    // L: bound on the operator norm of the score Jacobian
};

namespace detail {

inline void check_dimension(const TrajectoryInstance& inst, const ParamVector& theta) {
    if (theta.size() != inst.dimension())
        throw InvalidInput("parameter dimension " + std::to_string(theta.size()) +
                           " does not match instance dimension " + std::to_string(inst.dimension()));
}

inline Vec logits(const TrajectoryInstance& inst, const ParamVector& theta) {
    check_dimension(inst, theta);
    Vec out(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) {
        out[i] = dot(inst.features(i), theta.view());
        if (!std::isfinite(out[i]))
            throw InvalidInput("non-finite logit for response '" + inst.id(i) + "'");
    }
    return out;
}

inline Vec log_probs(const TrajectoryInstance& inst, const ParamVector& theta) {
    Vec lp = logits(inst, theta);
    const double lse = log_sum_exp(lp);
    for (double& v : lp)
        v -= lse;
    return lp;
}

inline Vec mean_features(const TrajectoryInstance& inst, std::span<const double> probs) {
    Vec m(inst.dimension(), 0.0);
    for (std::size_t i = 0; i < inst.size(); ++i)
        axpy(probs[i], inst.features(i), m);
    return m;
}

/// log J - log(1 - J) from per-response log-probabilities, without forming 1 - J.
inline double log_odds_from_log_probs(const TrajectoryInstance& inst, std::span<const double> lp) {
    Vec pos, neg;
    for (std::size_t i = 0; i < inst.size(); ++i)
        (inst.positive(i) ? pos : neg).push_back(lp[i]);
    return log_sum_exp(pos) - log_sum_exp(neg);
}

}  // namespace detail

inline Vec response_probs(const TrajectoryInstance& inst, const ParamVector& theta) {
    Vec p = detail::log_probs(inst, theta);
    double s = 0.0;
    for (double& v : p) {
        v = std::exp(v);
        s += v;
    }
    for (double& v : p)
        v /= s;
    return p;
}

inline double value(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec p = response_probs(inst, theta);
    double j = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.positive(i))
            j += p[i];
    return j;
}

inline double log_odds(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec lp = detail::log_probs(inst, theta);
    return detail::log_odds_from_log_probs(inst, lp);
}

/// grad_theta log pi(o) = phi(o) - E_pi[phi].
inline Vec score(const TrajectoryInstance& inst, const ParamVector& theta, std::size_t response) {
    if (response >= inst.size())
        throw InvalidInput("score: response index " + std::to_string(response) + " out of range");
    const Vec p = response_probs(inst, theta);
    return subtract(inst.features(response), detail::mean_features(inst, p));
}

inline std::pair<Vec, Vec> conditional_score_means(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec p = response_probs(inst, theta);
    const std::size_t d = inst.dimension();
    Vec plus(d, 0.0), minus(d, 0.0);
    double mass_plus = 0.0, mass_minus = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        if (inst.positive(i)) {
            axpy(p[i], inst.features(i), plus);
            mass_plus += p[i];
        } else {
            axpy(p[i], inst.features(i), minus);
            mass_minus += p[i];
        }
    }
    const Vec mean = detail::mean_features(inst, p);
    for (std::size_t j = 0; j < d; ++j) {
        plus[j] = plus[j] / mass_plus - mean[j];
        minus[j] = minus[j] / mass_minus - mean[j];
    }
    return {std::move(plus), std::move(minus)};
}

inline GapReport gradient_gap_report(const TrajectoryInstance& inst, const ParamVector& theta,
                                     std::optional<std::span<const double>> direction = std::nullopt) {
    if (direction) {
        if (direction->size() != inst.dimension())
            throw InvalidInput("gradient_gap_report: direction dimension mismatch");
        if (norm2(*direction) > 1.0 + 1e-9)
            throw InvalidInput("gradient_gap_report: direction norm exceeds 1");
    }
    const Vec lp = detail::log_probs(inst, theta);
    Vec p(lp.size());
    double total = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i)
        total += (p[i] = std::exp(lp[i]));
    for (double& v : p)
        v /= total;
    const Vec mean = detail::mean_features(inst, p);
    const std::size_t d = inst.dimension();

    GapReport rep;
    rep.g_plus.assign(d, 0.0);
    rep.g_minus.assign(d, 0.0);
    double mass_plus = 0.0, mass_minus = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const Vec s = subtract(inst.features(i), mean);
        rep.score_bound = std::max(rep.score_bound, norm2(s));
        if (inst.positive(i)) {
            axpy(p[i], s, rep.g_plus);
            mass_plus += p[i];
        } else {
            axpy(p[i], s, rep.g_minus);
            mass_minus += p[i];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        rep.g_plus[j] /= mass_plus;
        rep.g_minus[j] /= mass_minus;
    }
    rep.gap = subtract(rep.g_plus, rep.g_minus);
    rep.value = mass_plus;
    rep.log_odds = detail::log_odds_from_log_probs(inst, lp);
    if (direction)
        rep.rho = dot(*direction, rep.gap);
    return rep;
}

/// grad J = J (1 - J) (g+ - g-).
inline Vec policy_gradient(const TrajectoryInstance& inst, const ParamVector& theta) {
    const auto [plus, minus] = conditional_score_means(inst, theta);
    const double j = value(inst, theta);
    Vec g = subtract(plus, minus);
    for (double& v : g)
        v *= j * (1.0 - j);
    return g;
}

/// sum_o pi(o) A(o) score(o): the advantage-weighted form, computed independently
/// of the conditional decomposition.
inline Vec policy_gradient_direct(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec p = response_probs(inst, theta);
    const Vec mean = detail::mean_features(inst, p);
    double j = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.positive(i))
            j += p[i];
    Vec g(inst.dimension(), 0.0);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const double adv = (inst.positive(i) ? 1.0 : 0.0) - j;
        const Vec s = subtract(inst.features(i), mean);
        axpy(p[i] * adv, s, g);
    }
    return g;
}

inline AnalyticConstants analytic_constants(const TrajectoryInstance& inst) {
    double max_norm = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i)
        max_norm = std::max(max_norm, norm2(inst.features(i)));
    return {2.0 * max_norm, 4.0 * max_norm * max_norm};
}

/// Conditional variances Var+ and Var- of <w, score(o)> at theta.
inline std::pair<double, double> conditional_score_variances(const TrajectoryInstance& inst,
                                                             const ParamVector& theta,
                                                             std::span<const double> w) {
    const Vec p = response_probs(inst, theta);
    const Vec mean = detail::mean_features(inst, p);
    double m1p = 0, m2p = 0, mp = 0, m1n = 0, m2n = 0, mn = 0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const double x = dot(w, subtract(inst.features(i), mean));
        if (inst.positive(i)) {
            mp += p[i];
            m1p += p[i] * x;
            m2p += p[i] * x * x;
        } else {
            mn += p[i];
            m1n += p[i] * x;
            m2n += p[i] * x * x;
        }
    }
    m1p /= mp;
    m1n /= mn;
    return {m2p / mp - m1p * m1p, m2n / mn - m1n * m1n};
}

}  // namespace gradgap
