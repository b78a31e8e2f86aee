#pragma once

// Update directions for the generic normalized scheme theta <- theta + eta * w.

#include <cmath>
#include <functional>
#include <string>

#include "gradgap/linalg.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"

namespace gradgap {

struct Step {
    Vec w;
    double eta = 0.0;
};

enum class RuleKind { reinforce, grpo, dr_grpo, prescribed, gap_ascent };

inline const char* to_string(RuleKind k) {
    switch (k) {
    case RuleKind::reinforce: return "reinforce";
    case RuleKind::grpo: return "grpo";
    case RuleKind::dr_grpo: return "dr_grpo";
    case RuleKind::prescribed: return "prescribed";
    case RuleKind::gap_ascent: return "gap_ascent";
    }
    return "?";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
    if (s == "reinforce") return RuleKind::reinforce;
    if (s == "grpo") return RuleKind::grpo;
    if (s == "dr_grpo") return RuleKind::dr_grpo;
    if (s == "prescribed") return RuleKind::prescribed;
    if (s == "gap_ascent") return RuleKind::gap_ascent;
    throw InvalidInput("unknown rule kind '" + s + "'");
}

/// gap_ascent steps along the Gradient Gap itself: w = gap/|gap|, eta = alpha |gap|.
struct UpdateRule {
    RuleKind kind = RuleKind::reinforce;
    double alpha = 0.0;
    std::function<Step(int)> prescribed;
    std::string prescribed_name;

    static UpdateRule make(RuleKind kind, double alpha) {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw InvalidInput("UpdateRule: alpha must be positive and finite");
        return {kind, alpha, {}, {}};
    }
    static UpdateRule make_prescribed(std::function<Step(int)> fn, std::string name) {
        if (!fn)
            throw InvalidInput("UpdateRule: empty prescribed function");
        return {RuleKind::prescribed, 0.0, std::move(fn), std::move(name)};
    }
};

inline constexpr double kZeroGradient = 1e-14;

/// (g/|g|, alpha |g|), or (0, 0) for a vanishing gradient.
inline Step effective_step(std::span<const double> gradient, double alpha) {
    if (!(alpha > 0.0))
        throw InvalidInput("effective_step: alpha must be positive");
    const double n = norm2(gradient);
    if (!(n >= kZeroGradient))
        return {Vec(gradient.size(), 0.0), 0.0};
    return {scaled(gradient, 1.0 / n), alpha * n};
}

template <typename Instance>
Step reinforce_direction(const Instance& inst, const ParamVector& theta, double alpha) {
    return effective_step(policy_gradient(inst, theta), alpha);
}

inline constexpr double kDegenerateSigma = 1e-12;

/// E[(A/sigma) (1/|o|) score(o)] with sigma = sqrt(J(1-J)); lengths are declared lengths.
inline Vec grpo_gradient(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec p = response_probs(inst, theta);
    const Vec mean = detail::mean_features(inst, p);
    double j = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.positive(i))
            j += p[i];
    const double sigma = std::sqrt(j * (1.0 - j));
    if (!(sigma >= kDegenerateSigma))
        throw InvalidInput("grpo_gradient: degenerate reward variance (J = " + std::to_string(j) + ")");
    Vec g(inst.dimension(), 0.0);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const double adv = ((inst.positive(i) ? 1.0 : 0.0) - j) / sigma;
        axpy(p[i] * adv / inst.length(i), subtract(inst.features(i), mean), g);
    }
    return g;
}

/// Same expectation over the sequence space, with the true sequence lengths.
inline Vec grpo_gradient(const TokenInstance& inst, const ParamVector& theta) {
    const Vec tlp = detail::token_log_probs(inst, theta);
    const Vec mean = detail::token_mean_features(inst, tlp);
    const double j = token_value(inst, theta);
    const double sigma = std::sqrt(j * (1.0 - j));
    if (!(sigma >= kDegenerateSigma))
        throw InvalidInput("grpo_gradient: degenerate reward variance (J = " + std::to_string(j) + ")");
    Vec g(inst.dimension(), 0.0);
    for (const auto& a : inst.atoms()) {
        const double m = a.multiplicity * std::exp(detail::counts_log_prob(a.counts, tlp));
        const double adv = ((a.positive ? 1.0 : 0.0) - j) / sigma;
        axpy(m * adv / a.length, detail::counts_score(inst, a.counts, a.length, mean), g);
    }
    return g;
}

template <typename Instance>
Vec drgrpo_gradient(const Instance& inst, const ParamVector& theta) {
    return policy_gradient(inst, theta);
}

struct EffectiveRates {
    double grpo_rate = 0.0;
    double drgrpo_rate = 0.0;
    double theory_ceiling = 0.0;
};

/// Effective learning rates of GRPO and Dr. GRPO against the simplified ceiling, constants set to 1.
inline EffectiveRates predicted_effective_rates(double j, double rho, double t_psi1) {
    if (!(j > 0.0 && j < 1.0))
        throw InvalidInput("predicted_effective_rates: j must lie in (0,1)");
    if (!(rho >= 0.0) || !(t_psi1 > 0.0))
        throw InvalidInput("predicted_effective_rates: need rho >= 0 and t_psi1 > 0");
    return {rho * std::sqrt(j * (1.0 - j)) / t_psi1, rho * j * (1.0 - j), rho * (1.0 - j) / t_psi1};
}

inline ParamVector apply_update(const ParamVector& theta, std::span<const double> w, double eta) {
    if (w.size() != theta.size())
        throw InvalidInput("apply_update: direction dimension mismatch");
    if (norm2(w) > 1.0 + 1e-9)
        throw InvalidInput("apply_update: direction norm exceeds 1");
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw InvalidInput("apply_update: step size must be finite and nonnegative");
    Vec next = theta.entries();
    axpy(eta, w, next);
    return ParamVector(std::move(next));
}

template <typename Instance>
Step compute_step(const UpdateRule& rule, const Instance& inst, const ParamVector& theta, int k) {
    switch (rule.kind) {
    case RuleKind::reinforce:
        return reinforce_direction(inst, theta, rule.alpha);
    case RuleKind::grpo:
        return effective_step(grpo_gradient(inst, theta), rule.alpha);
    case RuleKind::dr_grpo:
        return effective_step(drgrpo_gradient(inst, theta), rule.alpha);
    case RuleKind::gap_ascent:
        return effective_step(gradient_gap_report(inst, theta).gap, rule.alpha);
    case RuleKind::prescribed: {
        Step s = rule.prescribed(k);
        if (s.w.size() != theta.size())
            throw InvalidInput("prescribed rule '" + rule.prescribed_name + "': direction dimension mismatch");
        if (norm2(s.w) > 1.0 + 1e-9 || !(s.eta >= 0.0))
            throw InvalidInput("prescribed rule '" + rule.prescribed_name + "': inadmissible step");
        return s;
    }
    }
    throw InvalidInput("compute_step: unknown rule kind");
}

}  // namespace gradgap
