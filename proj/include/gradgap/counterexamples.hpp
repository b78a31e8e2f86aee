#pragma once

// Overshoot constructions: three responses (or tokens) with features of norm G/2,
// a singleton positive set, and a prescribed alternating direction whose
// alignment stays positive while the value decays to zero.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gradgap/diagnostics.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"
#include "gradgap/updates.hpp"

namespace gradgap {

/// Which curvature constant enters the admissible step band.
enum class LipschitzSource { analytic, paper_claim };

inline LipschitzSource lipschitz_source_from_string(const std::string& s) {
    if (s == "analytic") return LipschitzSource::analytic;
    if (s == "paper_claim") return LipschitzSource::paper_claim;
    throw InvalidInput("unknown lipschitz source '" + s + "' (expected analytic or paper_claim)");
}

template <typename Instance>
struct CounterexampleScheme {
    std::string name;
    Instance instance;
    ParamVector theta0;
    std::function<Step(int)> direction_fn;
    double delta = 0.0;
    double g_bound = 0.0;
    double eta = 0.0;
    int t_inf = 1;
    double lipschitz = 0.0;  // constant used in the band check
    double rho_floor = 0.0;  // per-step alignment floor
    double rho_band = 0.0;   // uniform alignment entering the band check, at most rho_floor
    double band_lo = 0.0;
    double band_hi = 0.0;

    UpdateRule rule() const { return UpdateRule::make_prescribed(direction_fn, name); }
    /// theta_k = (eta/3) (-(-1)^k, -delta k)
    ParamVector theta_at(int k) const {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return ParamVector{(eta / 3.0) * -sign, (eta / 3.0) * -delta * k};
    }
};

using TrajectoryScheme = CounterexampleScheme<TrajectoryInstance>;
using TokenScheme = CounterexampleScheme<TokenInstance>;

namespace detail {

inline std::function<Step(int)> alternating_direction(double eta, double delta) {
    return [eta, delta](int k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        return Step{{2.0 * sign / 3.0, -delta / 3.0}, eta};
    };
}

inline void check_band(const std::string& name, double eta, double lo, double hi, double delta) {
    if (!(eta > 0.0) || eta < lo * (1.0 - 1e-12) || eta > hi * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << name << ": step size " << eta << " outside admissible band [" << lo << ", " << hi << "]";
        throw InvalidInput(msg.str());
    }
    if ((4.0 + delta * delta) / 9.0 > 1.0)
        throw InvalidInput(name + ": direction norm exceeds 1");
}

}  // namespace detail

inline TrajectoryScheme build_trajectory_lb(double g, double eta,
                                            LipschitzSource source = LipschitzSource::analytic) {
    if (!(g > 0.0) || !std::isfinite(g))
        throw InvalidInput("build_trajectory_lb: g must be positive");
    const double h = g / 2.0;
    TrajectoryInstance inst("thm33", 2,
                            {{"o1", {0.0, h}, true}, {"o2", {h, 0.0}, false}, {"o3", {-h, 0.0}, false}});
    const double l = source == LipschitzSource::analytic ? analytic_constants(inst).lipschitz : 0.0;
    const double delta = eta * g / 15.0;
    const double scale = l + g * g;

    TrajectoryScheme s{"thm33", std::move(inst), ParamVector{-eta / 3.0, 0.0}, detail::alternating_direction(eta, delta)};
    s.delta = delta;
    s.g_bound = g;
    s.eta = eta;
    s.lipschitz = l;
    s.rho_floor = eta * g * g / 30.0;
    s.rho_band = std::min(s.rho_floor, eta * scale / 60.0);
    s.band_lo = 60.0 * s.rho_band / scale;
    s.band_hi = 1.0 / (2.0 * std::sqrt(scale));
    detail::check_band("build_trajectory_lb", eta, s.band_lo, s.band_hi, delta);
    return s;
}

/// With enforce_band = false the scheme is built for any eta (used by step-size sweeps).
inline TokenScheme build_token_lb(double g_p, double eta, int t_inf,
                                  LipschitzSource source = LipschitzSource::analytic, bool enforce_band = true,
                                  std::size_t enumeration_cap = kDefaultEnumerationCap) {
    if (!(g_p > 0.0) || !std::isfinite(g_p))
        throw InvalidInput("build_token_lb: g_p must be positive");
    if (t_inf < 1)
        throw InvalidInput("build_token_lb: t_inf must be at least 1");
    const double h = g_p / 2.0;
    TokenInstance inst("thm44", 2, {{"o1", {0.0, h}}, {"o2", {h, 0.0}}, {"o3", {-h, 0.0}}}, t_inf, std::nullopt,
                       AllTokensEqualRule{0}, enumeration_cap);
    const double l = source == LipschitzSource::analytic ? token_analytic_constants(inst).lipschitz : 0.0;
    const double delta = eta * g_p / 10.0;
    const double scale = (l + g_p * g_p) * t_inf;

    TokenScheme s{"thm44", std::move(inst), ParamVector{-eta / 3.0, 0.0}, detail::alternating_direction(eta, delta)};
    s.delta = delta;
    s.g_bound = g_p;
    s.eta = eta;
    s.t_inf = t_inf;
    s.lipschitz = l;
    s.rho_floor = eta * t_inf * g_p * g_p / 60.0;
    s.rho_band = std::min(s.rho_floor, eta * scale / 120.0);
    s.band_lo = 120.0 * s.rho_band / scale;
    s.band_hi = 1.0 / (2.0 * std::sqrt(scale));
    if (enforce_band)
        detail::check_band("build_token_lb", eta, s.band_lo, s.band_hi, delta);
    else if (!(eta > 0.0) || (4.0 + delta * delta) / 9.0 > 1.0)
        throw InvalidInput("build_token_lb: inadmissible step size " + std::to_string(eta));
    return s;
}

/// J(k) = 1 / (1 + (e^{x} + e^{-x}) e^{delta eta G k / 6}) with x = eta G / 6.
inline double closed_form_value(int k, double eta, double g, double delta) {
    if (k < 0)
        throw InvalidInput("closed_form_value: k must be nonnegative");
    const double x = eta * g / 6.0;
    return 1.0 / (1.0 + (std::exp(x) + std::exp(-x)) * std::exp(delta * eta * g * k / 6.0));
}

inline double closed_form_value_traj(int k, double eta, double g) {
    return closed_form_value(k, eta, g, eta * g / 15.0);
}

inline double closed_form_value_token(int k, double eta, double g_p, int t_inf) {
    return std::pow(closed_form_value(k, eta, g_p, eta * g_p / 10.0), t_inf);
}

/// rho(k) >= rho_floor for k = 0..k_max, with rho from exact gap reports along the scheme.
template <typename Instance>
std::vector<BoundReport> verify_gap_floor(const CounterexampleScheme<Instance>& scheme, int k_max) {
    std::vector<BoundReport> out;
    ParamVector theta = scheme.theta0;
    for (int k = 0; k <= k_max; ++k) {
        const Step step = scheme.direction_fn(k);
        const GapReport rep = gradient_gap_report(scheme.instance, theta, std::span<const double>(step.w));
        out.push_back(detail::geq_report(*rep.rho, scheme.rho_floor, scheme.name + " gap floor k=" + std::to_string(k),
                                         0.0));
        theta = apply_update(theta, step.w, step.eta);
    }
    return out;
}

}  // namespace gradgap
