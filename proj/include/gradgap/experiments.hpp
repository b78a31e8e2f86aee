#pragma once

// Bandit experiments with exact gradients and step-size threshold sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradgap/counterexamples.hpp"
#include "gradgap/diagnostics.hpp"
#include "gradgap/format.hpp"
#include "gradgap/parallel.hpp"
#include "gradgap/random.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"
#include "gradgap/updates.hpp"

namespace gradgap {

/// Spearman rank correlation with average ranks for ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidInput("spearman: need two equal-length samples of size >= 2");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        Vec r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
                ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t)
                r[idx[t]] = avg;
            i = j + 1;
        }
        return r;
    };
    const Vec rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

// ---------------------------------------------------------------------------
// Multi-armed bandit

/// One-hot features over n arms; arm `best` is the only positive response.
inline TrajectoryInstance mab_instance(int n_arms, int best) {
    if (n_arms < 2)
        throw InvalidInput("mab_instance: need at least 2 arms");
    if (best < 0 || best >= n_arms)
        throw InvalidInput("mab_instance: best arm out of range");
    std::vector<Response> rs;
    for (int a = 0; a < n_arms; ++a) {
        Vec f(static_cast<std::size_t>(n_arms), 0.0);
        f[static_cast<std::size_t>(a)] = 1.0;
        rs.push_back({"arm" + std::to_string(a), std::move(f), a == best});
    }
    return TrajectoryInstance("mab", static_cast<std::size_t>(n_arms), std::move(rs));
}

/// p*(1 - p*) + p* sum_{a != a*} p_a^2 / (1 - p*).
inline double mab_rho_closed_form(std::span<const double> probs, std::size_t best) {
    if (best >= probs.size())
        throw InvalidInput("mab_rho_closed_form: best arm out of range");
    const double ps = probs[best];
    if (!(ps > 0.0 && ps < 1.0))
        throw InvalidInput("mab_rho_closed_form: degenerate best-arm probability");
    double sq = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a)
        if (a != best)
            sq += probs[a] * probs[a];
    return ps * (1.0 - ps) + ps * sq / (1.0 - ps);
}

struct MabResult {
    DynamicsTrace trace;
    int best_arm = 0;
    double max_rho_error = 0.0;  // |closed form - <grad J, grad J> / (J (1 - J))| over the run
    bool nondecreasing = true;
};

/// Exact REINFORCE theta <- theta + eta grad J from uniform logits.
inline MabResult run_mab(int n_arms, int horizon, double eta, std::uint64_t seed) {
    MabResult res;
    Rng rng(seed, Stream::arms);
    res.best_arm = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_arms)));
    const TrajectoryInstance inst = mab_instance(n_arms, res.best_arm);
    const UpdateRule rule = UpdateRule::make(RuleKind::reinforce, eta);
    const StepObserver observe = [&](int, const ParamVector& theta, const Step&, const GapReport& rep) {
        const Vec p = response_probs(inst, theta);
        const Vec g = policy_gradient_direct(inst, theta);
        const double direct = dot(g, g) / (rep.value * (1.0 - rep.value));
        const double closed = mab_rho_closed_form(p, static_cast<std::size_t>(res.best_arm));
        res.max_rho_error = std::max(res.max_rho_error, std::abs(closed - direct));
    };
    res.trace = run_dynamics(inst, ParamVector(static_cast<std::size_t>(n_arms)), rule, horizon, observe);
    for (std::size_t i = 1; i < res.trace.records.size(); ++i)
        if (res.trace.records[i].value < res.trace.records[i - 1].value)
            res.nondecreasing = false;
    return res;
}

// ---------------------------------------------------------------------------
// Contextual bandit

struct ContextualConfig {
    int d = 10;
    int n_arms = 100;
    double eta = 0.1;
    int horizon = 2000;
    int pool_size = 100;
    int eval_size = 500;
    double band_lo = 0.2;
    double band_hi = 0.8;
    double theta0_scale = 0.01;
    std::uint64_t seed = 0;
    int stride = 0;  // 0: every step up to horizon 2000, else every 10th

    void validate() const {
        if (d < 1 || n_arms < 2 || horizon < 0 || pool_size < 1 || eval_size < 1)
            throw InvalidInput("ContextualConfig: sizes must be positive (n_arms >= 2, horizon >= 0)");
        if (!(eta > 0.0))
            throw InvalidInput("ContextualConfig: eta must be positive");
        if (!(0.0 <= band_lo && band_lo < band_hi && band_hi <= 1.0))
            throw InvalidInput("ContextualConfig: need 0 <= band_lo < band_hi <= 1");
        if (!(theta0_scale >= 0.0))
            throw InvalidInput("ContextualConfig: theta0_scale must be nonnegative");
        if (stride < 0)
            throw InvalidInput("ContextualConfig: stride must be nonnegative");
    }
    int effective_stride() const { return stride > 0 ? stride : (horizon <= 2000 ? 1 : 10); }
    std::string canonical() const {
        std::ostringstream os;
        os << "d=" << d << ";n_arms=" << n_arms << ";eta=" << format_double(eta) << ";horizon=" << horizon
           << ";pool_size=" << pool_size << ";eval_size=" << eval_size << ";band=" << format_double(band_lo) << ','
           << format_double(band_hi) << ";theta0_scale=" << format_double(theta0_scale) << ";seed=" << seed
           << ";stride=" << effective_stride();
        return os.str();
    }
};

struct ContextTrace {
    int context_id = 0;
    Vec value;           // J_x at each recorded step
    Vec cumulative_gap;  // sum over earlier steps of [rho_x]_+ eta
    Vec log_odds;
};

struct ContextTraces {
    std::uint64_t run_id = 0;
    std::vector<int> steps;
    std::vector<ContextTrace> contexts;
};

struct TrainingStep {
    int k = 0;
    int context = 0;  // pool index
    double value = 0.0;
    double own_alignment = 0.0;  // rho of the training context against its own update
    bool fallback = false;       // band was empty, drawn from the whole pool
};

struct TrainingLog {
    std::uint64_t run_id = 0;
    std::vector<TrainingStep> steps;
};

struct ContextualResult {
    ContextualConfig config;
    ContextTraces traces;
    TrainingLog training;
    int fallback_steps = 0;
    long floor_checked = 0;
    long floor_skipped = 0;
    long floor_violations = 0;
};

namespace detail {

/// Logits x^T theta for theta stored row-major as d x n_arms.
inline void context_logits(std::span<const double> x, const Vec& theta, int n_arms, Vec& out) {
    out.assign(static_cast<std::size_t>(n_arms), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double xj = x[j];
        const double* row = theta.data() + j * static_cast<std::size_t>(n_arms);
        for (int a = 0; a < n_arms; ++a)
            out[static_cast<std::size_t>(a)] += xj * row[a];
    }
}

struct ContextState {
    Vec probs;
    double value = 0.0;
    double log_odds = 0.0;
};

inline ContextState context_state(std::span<const double> x, const Vec& theta, int n_arms, int best) {
    ContextState st;
    Vec logits;
    context_logits(x, theta, n_arms, logits);
    const double lse = log_sum_exp(logits);
    st.probs.resize(logits.size());
    for (std::size_t a = 0; a < logits.size(); ++a)
        st.probs[a] = std::exp(logits[a] - lse);
    st.value = st.probs[static_cast<std::size_t>(best)];
    Vec others;
    others.reserve(logits.size() - 1);
    for (std::size_t a = 0; a < logits.size(); ++a)
        if (static_cast<int>(a) != best)
            others.push_back(logits[a]);
    st.log_odds = logits[static_cast<std::size_t>(best)] - log_sum_exp(others);
    return st;
}

}  // namespace detail

/// The single-context trajectory instance at x: arm a has features x (x) e_a.
inline TrajectoryInstance context_instance(std::span<const double> x, int n_arms, int best) {
    std::vector<Response> rs;
    const std::size_t d = x.size();
    for (int a = 0; a < n_arms; ++a) {
        Vec f(d * static_cast<std::size_t>(n_arms), 0.0);
        for (std::size_t j = 0; j < d; ++j)
            f[j * static_cast<std::size_t>(n_arms) + static_cast<std::size_t>(a)] = x[j];
        rs.push_back({"arm" + std::to_string(a), std::move(f), a == best});
    }
    return TrajectoryInstance("context", d * static_cast<std::size_t>(n_arms), std::move(rs));
}

struct ContextualProblem {
    Vec beta;                       // d x n_arms
    Vec theta0;                     // d x n_arms
    std::vector<Vec> pool, eval;    // contexts in [0,1]^d
    std::vector<int> pool_best, eval_best;
};

inline ContextualProblem make_contextual_problem(const ContextualConfig& cfg) {
    cfg.validate();
    ContextualProblem pb;
    const std::size_t dn = static_cast<std::size_t>(cfg.d) * static_cast<std::size_t>(cfg.n_arms);
    Rng beta_rng(cfg.seed, Stream::beta), theta_rng(cfg.seed, Stream::theta0);
    Rng pool_rng(cfg.seed, Stream::pool), eval_rng(cfg.seed, Stream::eval);
    pb.beta = beta_rng.normal_vector(dn);
    pb.theta0 = theta_rng.normal_vector(dn, cfg.theta0_scale);
    auto draw = [&](Rng& rng, int n, std::vector<Vec>& xs, std::vector<int>& best) {
        for (int i = 0; i < n; ++i) {
            Vec x(static_cast<std::size_t>(cfg.d));
            for (double& v : x)
                v = rng.uniform();
            Vec scores;
            detail::context_logits(x, pb.beta, cfg.n_arms, scores);
            best.push_back(static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin()));
            xs.push_back(std::move(x));
        }
    };
    draw(pool_rng, cfg.pool_size, pb.pool, pb.pool_best);
    draw(eval_rng, cfg.eval_size, pb.eval, pb.eval_best);
    return pb;
}

/// Alignment of context x with the update eta * x_k (x) J_k (e*_k - p_k), in the
/// unnormalized convention: <x, x_k> J_k <e*_k - p_k, e*_x - p_x> / (1 - J_x).
inline double context_alignment(std::span<const double> x, const detail::ContextState& sx, int best_x,
                                std::span<const double> xk, const Vec& logit_grad) {
    double inner = 0.0;
    for (std::size_t a = 0; a < sx.probs.size(); ++a)
        inner += logit_grad[a] * ((static_cast<int>(a) == best_x ? 1.0 : 0.0) - sx.probs[a]);
    return dot(x, xk) * inner / (1.0 - sx.value);
}

inline ContextualResult run_contextual(const ContextualConfig& cfg) {
    const ContextualProblem pb = make_contextual_problem(cfg);
    ContextualResult res;
    res.config = cfg;
    const std::uint64_t run_id = fnv1a(cfg.canonical());
    res.traces.run_id = run_id;
    res.training.run_id = run_id;
    const int stride = cfg.effective_stride();
    const int n = cfg.n_arms;
    const std::size_t ne = pb.eval.size();

    res.traces.contexts.resize(ne);
    for (std::size_t i = 0; i < ne; ++i)
        res.traces.contexts[i].context_id = static_cast<int>(i);

    Rng curriculum(cfg.seed, Stream::curriculum);
    Vec theta = pb.theta0;
    Vec cum(ne, 0.0);
    // floor segment start per eval context: (J at start, cumulative gap at start)
    std::vector<std::pair<double, double>> seg(ne);
    std::vector<char> prev_ok(ne, 0);
    std::vector<detail::ContextState> states(ne);

    for (int k = 0; k <= cfg.horizon; ++k) {
        for (std::size_t i = 0; i < ne; ++i)
            states[i] = detail::context_state(pb.eval[i], theta, n, pb.eval_best[i]);

        for (std::size_t i = 0; i < ne; ++i) {
            if (k == 0 || !prev_ok[i]) {
                if (k > 0)
                    ++res.floor_skipped;
                seg[i] = {states[i].value, cum[i]};
            } else {
                ++res.floor_checked;
                if (states[i].value < convergence_floor(seg[i].first, cum[i] - seg[i].second) - kBoundTolerance)
                    ++res.floor_violations;
            }
        }

        if (k % stride == 0 || k == cfg.horizon) {
            res.traces.steps.push_back(k);
            for (std::size_t i = 0; i < ne; ++i) {
                auto& tr = res.traces.contexts[i];
                tr.value.push_back(states[i].value);
                tr.cumulative_gap.push_back(cum[i]);
                tr.log_odds.push_back(states[i].log_odds);
            }
        }
        if (k == cfg.horizon)
            break;

        std::vector<int> band;
        std::vector<detail::ContextState> pool_states;
        for (int p = 0; p < cfg.pool_size; ++p) {
            pool_states.push_back(detail::context_state(pb.pool[static_cast<std::size_t>(p)], theta, n,
                                                        pb.pool_best[static_cast<std::size_t>(p)]));
            const double j = pool_states.back().value;
            if (j >= cfg.band_lo && j <= cfg.band_hi)
                band.push_back(p);
        }
        TrainingStep ts;
        ts.k = k;
        if (band.empty()) {
            ts.fallback = true;
            ++res.fallback_steps;
            ts.context = static_cast<int>(curriculum.below(static_cast<std::uint64_t>(cfg.pool_size)));
        } else {
            ts.context = band[curriculum.below(band.size())];
        }
        const auto& xk = pb.pool[static_cast<std::size_t>(ts.context)];
        const auto& sk = pool_states[static_cast<std::size_t>(ts.context)];
        const int bk = pb.pool_best[static_cast<std::size_t>(ts.context)];
        ts.value = sk.value;

        // d J / d logits = J (e* - p); grad_theta J = x_k (x) that.
        Vec logit_grad(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            logit_grad[static_cast<std::size_t>(a)] = sk.value * ((a == bk ? 1.0 : 0.0) - sk.probs[static_cast<std::size_t>(a)]);
        const double grad_norm = norm2(xk) * norm2(logit_grad);
        ts.own_alignment = context_alignment(xk, sk, bk, xk, logit_grad);
        res.training.steps.push_back(ts);

        // normalized step eta_k = eta |grad J|; alignment against w = grad J / |grad J|
        const double eta_k = cfg.eta * grad_norm;
        for (std::size_t i = 0; i < ne; ++i) {
            const double rho = context_alignment(pb.eval[i], states[i], pb.eval_best[i], xk, logit_grad);
            const double xnorm2 = dot(pb.eval[i], pb.eval[i]);
            const double lip = 4.0 * xnorm2, g2 = 4.0 * xnorm2;
            bool ok = grad_norm > 0.0 && eta_k <= positive_part(rho / grad_norm) / (2.0 * (lip + 8.0 * g2));
            if (lip > 0.0)
                ok = ok && eta_k <= 1.0 / (2.0 * std::sqrt(lip));
            prev_ok[i] = ok ? 1 : 0;
            cum[i] += positive_part(rho) * cfg.eta;
        }

        for (std::size_t j = 0; j < xk.size(); ++j) {
            double* row = theta.data() + j * static_cast<std::size_t>(n);
            for (int a = 0; a < n; ++a)
                row[a] += cfg.eta * xk[j] * logit_grad[static_cast<std::size_t>(a)];
        }
    }
    return res;
}

/// Per-context series sum_i ([rho_x(i)]_+ - [rho_{x_i}(i)]_+) eta at the recorded steps.
inline std::vector<Vec> relative_cumulative_gap(const ContextTraces& traces, const TrainingLog& log, double eta) {
    if (traces.run_id != log.run_id)
        throw InvalidInput("relative_cumulative_gap: traces and training log come from different runs");
    Vec train_cum(log.steps.size() + 1, 0.0);
    for (std::size_t i = 0; i < log.steps.size(); ++i)
        train_cum[i + 1] = train_cum[i] + positive_part(log.steps[i].own_alignment) * eta;
    std::vector<Vec> out;
    for (const auto& c : traces.contexts) {
        Vec series;
        for (std::size_t s = 0; s < traces.steps.size(); ++s) {
            const auto k = static_cast<std::size_t>(traces.steps[s]);
            if (k >= train_cum.size())
                throw InvalidInput("relative_cumulative_gap: recorded step beyond the training log");
            series.push_back(c.cumulative_gap[s] - train_cum[k]);
        }
        out.push_back(std::move(series));
    }
    return out;
}

struct ContextualSummary {
    double frac_above_09 = 0.0;
    double spearman_gap_logodds = 0.0;       // all eval contexts
    double spearman_gap_logodds_above_half = 0.0;
    double spearman_relgap_value = 0.0;      // |relative gap| vs final J (negative: closer to 0 converges faster)
    double median_value = 0.0;
};

inline ContextualSummary summarize(const ContextualResult& res) {
    ContextualSummary s;
    const auto rel = relative_cumulative_gap(res.traces, res.training, res.config.eta);
    Vec gap, lo, vals, absrel, gap_hi, lo_hi;
    for (std::size_t i = 0; i < res.traces.contexts.size(); ++i) {
        const auto& c = res.traces.contexts[i];
        const double j = c.value.back();
        vals.push_back(j);
        gap.push_back(c.cumulative_gap.back());
        lo.push_back(c.log_odds.back());
        absrel.push_back(std::abs(rel[i].back()));
        if (j >= 0.9)
            s.frac_above_09 += 1.0;
        if (j > 0.5) {
            gap_hi.push_back(gap.back());
            lo_hi.push_back(lo.back());
        }
    }
    s.frac_above_09 /= static_cast<double>(vals.size());
    if (vals.size() >= 2) {
        s.spearman_gap_logodds = spearman(gap, lo);
        s.spearman_relgap_value = spearman(absrel, vals);
    }
    if (gap_hi.size() >= 2)
        s.spearman_gap_logodds_above_half = spearman(gap_hi, lo_hi);
    Vec sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    s.median_value = sorted[sorted.size() / 2];
    return s;
}

inline std::string contextual_trace_csv(const ContextualResult& res) {
    const auto rel = relative_cumulative_gap(res.traces, res.training, res.config.eta);
    std::string out = "k,context,J,log_odds,cum_gap,rel_gap\n";
    for (std::size_t s = 0; s < res.traces.steps.size(); ++s)
        for (std::size_t i = 0; i < res.traces.contexts.size(); ++i) {
            const auto& c = res.traces.contexts[i];
            out += std::to_string(res.traces.steps[s]);
            out += ',';
            out += std::to_string(c.context_id);
            out += ',';
            out += format_double(c.value[s]);
            out += ',';
            out += format_double(c.log_odds[s]);
            out += ',';
            out += format_double(c.cumulative_gap[s]);
            out += ',';
            out += format_double(rel[i][s]);
            out += '\n';
        }
    return out;
}

inline std::string contextual_training_csv(const ContextualResult& res) {
    std::string out = "k,context,J,own_alignment,fallback\n";
    for (const auto& t : res.training.steps)
        out += std::to_string(t.k) + ',' + std::to_string(t.context) + ',' + format_double(t.value) + ',' +
               format_double(t.own_alignment) + ',' + (t.fallback ? "1" : "0") + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Step-size threshold sweeps

/// Builds and runs one member of a family at (eta, t_inf) for the given horizon.
using SweepFamily = std::function<DynamicsTrace(double eta, int t_inf, int horizon)>;

/// Fixed-length sequences over {o1, o-1, o-2} with scalar features 0, +G/2, -G/2;
/// the all-o1 sequence is the only positive. Updates follow the Gradient Gap,
/// theta <- theta + eta (g+ - g-).
inline TokenInstance token_lb_family_instance(double g, int t_inf) {
    return TokenInstance("token_lb", 1, {{"o1", {0.0}}, {"o-1", {g / 2.0}}, {"o-2", {-g / 2.0}}}, t_inf, std::nullopt,
                         AllTokensEqualRule{0});
}

inline SweepFamily token_lb_family(double g = 2.0, double theta0 = 0.5) {
    return [g, theta0](double eta, int t_inf, int horizon) {
        const TokenInstance inst = token_lb_family_instance(g, t_inf);
        return run_dynamics(inst, ParamVector{theta0}, UpdateRule::make(RuleKind::gap_ascent, eta), horizon);
    };
}

/// The prescribed token-level overshoot scheme, run at any eta.
inline SweepFamily thm44_family(double g_p = 2.0) {
    return [g_p](double eta, int t_inf, int horizon) {
        const TokenScheme s = build_token_lb(g_p, eta, t_inf, LipschitzSource::analytic, false);
        return run_dynamics(s.instance, s.theta0, s.rule(), horizon);
    };
}

inline SweepFamily sweep_family_by_name(const std::string& name, double g = 2.0, double theta0 = 0.5) {
    if (name == "token_lb")
        return token_lb_family(g, theta0);
    if (name == "thm44")
        return thm44_family(g);
    throw InvalidInput("unknown sweep family '" + name + "' (expected token_lb or thm44)");
}

inline constexpr double kCollapseFraction = 0.5;

enum class Outcome { improving, collapsing, flat, diverged };

inline const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::improving: return "improving";
    case Outcome::collapsing: return "collapsing";
    case Outcome::flat: return "flat";
    case Outcome::diverged: return "diverged";
    }
    return "?";
}

/// improving: J(K) > J(0); collapsing: J(K) < 0.5 J(0).
inline Outcome classify(double j0, double jk) {
    if (jk > j0)
        return Outcome::improving;
    if (jk < kCollapseFraction * j0)
        return Outcome::collapsing;
    return Outcome::flat;
}

struct SweepRow {
    int t_inf = 0;
    double eta = 0.0;
    double j0 = 0.0;
    double jk = 0.0;
    Outcome outcome = Outcome::flat;
};

struct SweepResult {
    std::string family;
    int horizon = 0;
    std::vector<SweepRow> rows;
    std::map<int, std::optional<double>> threshold;  // largest improving eta per t_inf
};

inline std::vector<double> dyadic_grid(int lo_exp, int hi_exp) {
    std::vector<double> g;
    for (int e = lo_exp; e <= hi_exp; ++e)
        g.push_back(std::ldexp(1.0, e));
    return g;
}

inline SweepResult threshold_sweep(const std::string& family_name, const SweepFamily& family,
                                   const std::vector<double>& etas, const std::vector<int>& t_infs, int horizon) {
    if (etas.empty() || t_infs.empty())
        throw InvalidInput("threshold_sweep: empty eta or t_inf grid");
    SweepResult res;
    res.family = family_name;
    res.horizon = horizon;
    res.rows.resize(etas.size() * t_infs.size());
    parallel_for(res.rows.size(), [&](std::size_t idx) {
        SweepRow& row = res.rows[idx];
        row.t_inf = t_infs[idx / etas.size()];
        row.eta = etas[idx % etas.size()];
        const DynamicsTrace tr = family(row.eta, row.t_inf, horizon);
        row.j0 = tr.records.front().value;
        row.jk = tr.records.back().value;
        row.outcome = tr.diverged ? Outcome::diverged : classify(row.j0, row.jk);
    });
    for (int t : t_infs)
        res.threshold[t] = std::nullopt;
    for (const auto& row : res.rows)
        if (row.outcome == Outcome::improving) {
            auto& th = res.threshold[row.t_inf];
            if (!th || row.eta > *th)
                th = row.eta;
        }
    return res;
}

inline std::string sweep_csv(const SweepResult& res) {
    std::ostringstream os;
    os << "# family=" << res.family << " horizon=" << res.horizon
       << " improving: J(K) > J(0); collapsing: J(K) < " << format_double(kCollapseFraction) << "*J(0)\n";
    os << "t_inf,eta,J0,JK,outcome\n";
    for (const auto& r : res.rows)
        os << r.t_inf << ',' << format_double(r.eta) << ',' << format_double(r.j0) << ',' << format_double(r.jk) << ','
           << to_string(r.outcome) << '\n';
    return os.str();
}

inline std::string threshold_csv(const SweepResult& res) {
    std::ostringstream os;
    os << "t_inf,eta_star\n";
    for (const auto& [t, th] : res.threshold)
        os << t << ',' << (th ? format_double(*th) : std::string("")) << '\n';
    return os.str();
}

}  // namespace gradgap
