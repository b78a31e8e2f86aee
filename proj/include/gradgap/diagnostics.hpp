#pragma once

// Optimization traces and numerical checks of the log-odds inequalities.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gradgap/format.hpp"
#include "gradgap/linalg.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"
#include "gradgap/updates.hpp"

namespace gradgap {

struct TraceRecord {
    int k = 0;
    double value = 0.0;
    double rho = 0.0;
    double eta = 0.0;
    double log_odds = 0.0;
    double gap_norm = 0.0;
    double cumulative_alignment = 0.0;  // M(k), accumulated over steps 0..k-1
    bool condition_ok = false;           // step k satisfies the convergence step-size condition
};

struct DynamicsTrace {
    std::vector<TraceRecord> records;
    ParamVector final_theta;
    std::string instance_ref;
    bool diverged = false;
};

struct BoundReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    double slack = 0.0;
    std::string context;
    bool skipped = false;
};

inline constexpr double kBoundTolerance = 1e-9;

namespace detail {

inline BoundReport leq_report(double lhs, double rhs, std::string context, double tol = kBoundTolerance) {
    return {lhs, rhs, lhs <= rhs + tol, rhs - lhs, std::move(context), false};
}

inline BoundReport geq_report(double lhs, double rhs, std::string context, double tol = kBoundTolerance) {
    return {lhs, rhs, lhs >= rhs - tol, lhs - rhs, std::move(context), false};
}

inline BoundReport skipped_report(std::string context) {
    BoundReport r;
    r.context = std::move(context);
    r.satisfied = true;
    r.skipped = true;
    return r;
}

}  // namespace detail

/// eta <= min{ rho_+ / (2 (L + 8 G^2)), 1 / (2 sqrt L) } with analytic constants.
inline bool step_condition(const TrajectoryInstance& inst, const ParamVector&, double rho, double eta) {
    const auto c = analytic_constants(inst);
    double cap = positive_part(rho) / (2.0 * (c.lipschitz + 8.0 * c.score_bound * c.score_bound));
    if (c.lipschitz > 0.0)
        cap = std::min(cap, 1.0 / (2.0 * std::sqrt(c.lipschitz)));
    return eta <= cap;
}

/// Token-level condition, evaluated with the length statistics at the current parameter.
inline bool step_condition(const TokenInstance& inst, const ParamVector& theta, double rho, double eta) {
    const auto c = token_analytic_constants(inst);
    const auto ls = length_stats(inst, theta);
    const double j = token_value(inst, theta);
    return eta <= token_step_size_ceiling(rho, c.lipschitz, c.score_bound, inst.max_length(), ls.t_psi1, j);
}

/// Called once per recorded step with the parameter, the step about to be taken and its gap report.
using StepObserver = std::function<void(int, const ParamVector&, const Step&, const GapReport&)>;

template <typename Instance>
DynamicsTrace run_dynamics(const Instance& inst, const ParamVector& theta0, const UpdateRule& rule, int horizon,
                           const StepObserver& observer = {}) {
    if (horizon < 1)
        throw InvalidInput("run_dynamics: horizon must be at least 1");
    DynamicsTrace trace;
    trace.instance_ref = inst.prompt_id();
    ParamVector theta = theta0;
    double m = 0.0;
    for (int k = 0; k <= horizon; ++k) {
        TraceRecord rec;
        rec.k = k;
        rec.cumulative_alignment = m;
        Step step;
        try {
            step = compute_step(rule, inst, theta, k);
            const GapReport rep = gradient_gap_report(inst, theta, std::span<const double>(step.w));
            rec.value = rep.value;
            rec.log_odds = rep.log_odds;
            rec.rho = *rep.rho;
            rec.gap_norm = norm2(rep.gap);
            if (observer)
                observer(k, theta, step, rep);
        } catch (const InvalidInput&) {
            trace.diverged = true;
            break;
        }
        if (!std::isfinite(rec.value) || !std::isfinite(rec.log_odds) || !std::isfinite(rec.rho)) {
            trace.diverged = true;
            break;
        }
        rec.eta = step.eta;
        rec.condition_ok = step_condition(inst, theta, rec.rho, rec.eta);
        trace.records.push_back(rec);
        if (k == horizon)
            break;
        m += positive_part(rec.rho) * rec.eta;
        try {
            theta = apply_update(theta, step.w, step.eta);
        } catch (const InvalidInput&) {
            trace.diverged = true;
            break;
        }
    }
    trace.final_theta = theta;
    return trace;
}

/// M(K) = sum_{k<K} [rho(k)]_+ eta_k over the recorded steps.
inline double cumulative_alignment(const DynamicsTrace& trace) {
    if (trace.records.empty())
        throw InvalidInput("cumulative_alignment: empty trace");
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i)
        m += positive_part(trace.records[i].rho) * trace.records[i].eta;
    return m;
}

inline double convergence_floor(double j0, double m) {
    if (!(j0 > 0.0 && j0 < 1.0) || !(m >= 0.0))
        throw InvalidInput("convergence_floor: need j0 in (0,1) and m >= 0");
    return j0 / (j0 + (1.0 - j0) * std::exp(-m / 2.0));
}

inline double stagnation_ceiling(double j0, double c0, double c0p) {
    if (!(j0 > 0.0 && j0 < 1.0) || !(c0 >= 0.0) || !(c0p >= 0.0))
        throw InvalidInput("stagnation_ceiling: need j0 in (0,1) and nonnegative constants");
    return j0 / (j0 + std::exp(-(c0 + c0p)) * (1.0 - j0));
}

/// Upper bound on 1 - J(k) under a uniform alignment rho and constant step eta.
inline double linear_rate_bound(double j0, double rho, double eta, int k) {
    if (!(j0 > 0.0 && j0 < 1.0) || !(rho > 0.0) || !(eta > 0.0) || k < 0)
        throw InvalidInput("linear_rate_bound: need j0 in (0,1), rho > 0, eta > 0, k >= 0");
    return ((1.0 - j0) / j0) * std::exp(-rho * eta * k / 2.0);
}

struct FloorCheck {
    int checked = 0;
    int skipped = 0;
    int violations = 0;
};

/// Checks J(k) >= floor(J(s), M(k) - M(s)), where s is the first step after the
/// most recent step that violated the step-size condition.
inline FloorCheck check_convergence_floor(const DynamicsTrace& trace) {
    FloorCheck fc;
    std::size_t start = 0;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        if (i > 0 && !trace.records[i - 1].condition_ok) {
            start = i;
            ++fc.skipped;
            continue;
        }
        if (i == start)
            continue;
        const auto& s = trace.records[start];
        const auto& r = trace.records[i];
        const double floor = convergence_floor(s.value, r.cumulative_alignment - s.cumulative_alignment);
        ++fc.checked;
        if (r.value < floor - kBoundTolerance)
            ++fc.violations;
    }
    return fc;
}

/// | dlogodds - rho eta | <= (L + 8 G^2) eta^2 for one step theta -> theta + eta w.
inline BoundReport taylor_residual_check(const TrajectoryInstance& inst, const ParamVector& theta,
                                         std::span<const double> w, double eta) {
    const auto c = analytic_constants(inst);
    if (c.lipschitz > 0.0 && eta > 1.0 / (2.0 * std::sqrt(c.lipschitz)))
        return detail::skipped_report("taylor: step above 1/(2 sqrt L)");
    if (norm2(w) > 1.0 + 1e-9)
        return detail::skipped_report("taylor: direction norm above 1");
    const GapReport before = gradient_gap_report(inst, theta, w);
    const ParamVector next = apply_update(theta, w, eta);
    const double delta = log_odds(inst, next) - before.log_odds;
    const double lhs = std::abs(delta - *before.rho * eta);
    const double rhs = (c.lipschitz + 8.0 * c.score_bound * c.score_bound) * eta * eta;
    return detail::leq_report(lhs, rhs, "taylor");
}

/// Curvature of the log-odds along w: d^2/deta^2 logodds(theta + eta w) = Var+ - Var-.
inline double log_odds_curvature(const TrajectoryInstance& inst, const ParamVector& theta,
                                 std::span<const double> w) {
    const auto [vp, vm] = conditional_score_variances(inst, theta, w);
    return vp - vm;
}

/// Per-element log-probabilities with labels. For token instances each element
/// is a count class and the value is its total log-mass.
inline std::pair<Vec, std::vector<char>> labelled_log_probs(const TrajectoryInstance& inst,
                                                            const ParamVector& theta) {
    std::vector<char> labels;
    for (std::size_t i = 0; i < inst.size(); ++i)
        labels.push_back(inst.positive(i) ? 1 : 0);
    return {detail::log_probs(inst, theta), std::move(labels)};
}

inline std::pair<Vec, std::vector<char>> labelled_log_probs(const TokenInstance& inst, const ParamVector& theta) {
    std::vector<char> labels;
    for (const auto& a : inst.atoms())
        labels.push_back(a.positive ? 1 : 0);
    return {detail::atom_log_masses(inst, theta), std::move(labels)};
}

/// dlogodds = log E+_old[exp(dlog pi)] - log E-_old[exp(dlog pi)]; the right side
/// is accumulated in linear space, independently of the log-sum-exp path.
template <typename Instance>
BoundReport difflog_identity_check(const Instance& inst, const ParamVector& theta_old, const ParamVector& theta_new) {
    const double lhs = log_odds(inst, theta_new) - log_odds(inst, theta_old);
    const auto [lp_old, labels] = labelled_log_probs(inst, theta_old);
    const auto lp_new = labelled_log_probs(inst, theta_new).first;
    double mass_p = 0, mass_n = 0, mgf_p = 0, mgf_n = 0;
    for (std::size_t i = 0; i < lp_old.size(); ++i) {
        const double p = std::exp(lp_old[i]);
        const double ratio = std::exp(lp_new[i] - lp_old[i]);
        if (labels[i]) {
            mass_p += p;
            mgf_p += p * ratio;
        } else {
            mass_n += p;
            mgf_n += p * ratio;
        }
    }
    const double rhs = std::log(mgf_p / mass_p) - std::log(mgf_n / mass_n);
    const double err = std::abs(lhs - rhs);
    const double tol = 1e-10 * std::max(1.0, std::abs(lhs));
    return {lhs, rhs, err <= tol, -err, "difflog", false};
}

/// |log E e^X - E X| <= 2 |X|_inf^2, together with log E e^{X - EX} >= 0.
inline BoundReport mgf_bound_check(std::span<const double> values, std::span<const double> probs) {
    if (values.size() != probs.size() || values.empty())
        throw InvalidInput("mgf_bound_check: values and probabilities must be nonempty and of equal size");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0))
            throw InvalidInput("mgf_bound_check: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InvalidInput("mgf_bound_check: probabilities do not sum to 1");
    double mean = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        mean += probs[i] * values[i];
        sup = std::max(sup, std::abs(values[i]));
    }
    Vec shifted;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (probs[i] > 0.0)
            shifted.push_back(std::log(probs[i]) + values[i] - mean);
    const double centered = log_sum_exp(shifted);  // log E e^{X - EX}
    BoundReport r = detail::leq_report(std::abs(centered), 2.0 * sup * sup, "mgf");
    if (centered < -kBoundTolerance) {
        r.satisfied = false;
        r.context = "mgf: Jensen violated";
    }
    return r;
}

/// dlogodds >= rho eta - (L_p T + G_p^2 Tpsi1 / (1 - J)) eta^2, Tpsi1 at the current parameter.
inline BoundReport token_difflog_bound_check(const TokenInstance& inst, const ParamVector& theta,
                                             std::span<const double> w, double eta) {
    const auto c = token_analytic_constants(inst);
    const auto ls = length_stats(inst, theta);
    const double g2 = c.score_bound * c.score_bound;
    if (g2 > 0.0 && eta > 1.0 / std::sqrt(2.0 * g2 * ls.t_psi1))
        return detail::skipped_report("token-difflog: step above 1/sqrt(2 G^2 Tpsi1)");
    if (norm2(w) > 1.0 + 1e-9)
        return detail::skipped_report("token-difflog: direction norm above 1");
    const GapReport before = token_gap_report(inst, theta, w);
    const ParamVector next = apply_update(theta, w, eta);
    const double lhs = token_log_odds(inst, next) - before.log_odds;
    const double t_inf = inst.max_length();
    const double rhs = *before.rho * eta - (c.lipschitz * t_inf + g2 * ls.t_psi1 / (1.0 - before.value)) * eta * eta;
    return detail::geq_report(lhs, rhs, "token-difflog");
}

inline void write_trace_csv(std::ostream& os, const DynamicsTrace& trace) {
    os << "k,J,rho,eta,log_odds,gap_norm,M\n";
    for (const auto& r : trace.records)
        os << r.k << ',' << format_double(r.value) << ',' << format_double(r.rho) << ',' << format_double(r.eta)
           << ',' << format_double(r.log_odds) << ',' << format_double(r.gap_norm) << ','
           << format_double(r.cumulative_alignment) << '\n';
}

inline void write_bound_report_jsonl(std::ostream& os, const BoundReport& r) {
    os << "{\"context\":" << json_quote(r.context) << ",\"lhs\":" << format_json_double(r.lhs)
       << ",\"rhs\":" << format_json_double(r.rhs) << ",\"satisfied\":" << (r.satisfied ? "true" : "false")
       << ",\"slack\":" << format_json_double(r.slack) << ",\"skipped\":" << (r.skipped ? "true" : "false")
       << "}\n";
}

}  // namespace gradgap
