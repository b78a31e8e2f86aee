#pragma once

// Autoregressive token-level softmax policy. Token features are position- and
// prefix-independent, so every generation step uses the same next-token
// distribution. Sequence probabilities and scores then depend only on the
// token-count vector of a sequence, and exact expectations are computed over
// count classes ("atoms") weighted by their multiplicities. Full explicit
// enumeration is kept for small instances and as a cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gradgap/linalg.hpp"
#include "gradgap/trajectory.hpp"

namespace gradgap {

using Sequence = std::vector<int>;

struct Token {
    std::string id;
    Vec features;
};

/// Positive iff the sequence is one of the listed sequences.
struct SequenceSetRule {
    std::vector<Sequence> sequences;
};

/// Positive iff every token of the sequence equals `token`.
struct AllTokensEqualRule {
    int token = 0;
};

/// Arbitrary total predicate; forces explicit enumeration of the sequence space.
struct PredicateRule {
    std::function<bool(std::span<const int>)> predicate;
};

using PositiveRule = std::variant<SequenceSetRule, AllTokensEqualRule, PredicateRule>;

inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 20;

/// A set of complete sequences sharing one token-count vector and one label.
struct SequenceAtom {
    std::vector<int> counts;  // per vocabulary entry
    int length = 0;
    double multiplicity = 1.0;
    bool positive = false;
};

struct LabeledSequence {
    Sequence tokens;
    bool positive = false;
};

struct LengthStats {
    int t_inf = 0;
    double t_psi1 = 0.0;
    double mean_length = 0.0;
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t limit) {
    if (a != 0 && b > limit / a)
        return limit + 1;
    return std::min(a * b, limit + 1);
}

/// Depth-first walk over complete sequences: each ends at EOS or at the length cap.
template <typename Visit>
void for_each_complete_sequence(int vocab, int max_length, std::optional<int> eos, Visit&& visit) {
    std::vector<int> seq;
    std::function<void()> rec = [&]() {
        const int n = static_cast<int>(seq.size());
        if (n > 0 && (n == max_length || (eos && seq.back() == *eos))) {
            visit(seq);
            return;
        }
        for (int t = 0; t < vocab; ++t) {
            seq.push_back(t);
            rec();
            seq.pop_back();
        }
    };
    rec();
}

}  // namespace detail

class TokenInstance {
public:
    TokenInstance(std::string prompt_id, std::size_t dimension, std::vector<Token> tokens, int max_length,
                  std::optional<int> eos_index, PositiveRule rule,
                  std::size_t enumeration_cap = kDefaultEnumerationCap)
        : prompt_id_(std::move(prompt_id)),
          dimension_(dimension),
          max_length_(max_length),
          eos_(eos_index),
          rule_(std::move(rule)),
          cap_(enumeration_cap) {
        if (dimension_ == 0)
            throw InvalidInput("TokenInstance: dimension must be positive");
        if (tokens.empty())
            throw InvalidInput("TokenInstance: empty vocabulary");
        if (max_length_ < 1)
            throw InvalidInput("TokenInstance: max_length must be at least 1");
        for (const auto& t : tokens) {
            if (t.features.size() != dimension_)
                throw InvalidInput("TokenInstance: token '" + t.id + "' has " + std::to_string(t.features.size()) +
                                   " features, expected " + std::to_string(dimension_));
            if (!all_finite(t.features))
                throw InvalidInput("TokenInstance: token '" + t.id + "' has non-finite features");
            ids_.push_back(t.id);
            features_.insert(features_.end(), t.features.begin(), t.features.end());
        }
        if (eos_ && (*eos_ < 0 || *eos_ >= vocab_size()))
            throw InvalidInput("TokenInstance: eos index out of range");
        validate_rule();
        build_atoms();
    }

    const std::string& prompt_id() const { return prompt_id_; }
    std::size_t dimension() const { return dimension_; }
    int vocab_size() const { return static_cast<int>(ids_.size()); }
    int max_length() const { return max_length_; }
    std::optional<int> eos() const { return eos_; }
    const PositiveRule& rule() const { return rule_; }
    std::size_t enumeration_cap() const { return cap_; }
    const std::string& token_id(int v) const { return ids_.at(static_cast<std::size_t>(v)); }
    std::span<const double> features(int v) const {
        return std::span<const double>(features_).subspan(static_cast<std::size_t>(v) * dimension_, dimension_);
    }
    const std::vector<SequenceAtom>& atoms() const { return atoms_; }

    bool is_complete(std::span<const int> seq) const {
        const int n = static_cast<int>(seq.size());
        if (n < 1 || n > max_length_)
            return false;
        for (int i = 0; i < n; ++i) {
            if (seq[i] < 0 || seq[i] >= vocab_size())
                return false;
            if (eos_ && seq[i] == *eos_ && i != n - 1)
                return false;
        }
        const bool ends_with_eos = eos_ && seq[n - 1] == *eos_;
        return ends_with_eos || n == max_length_;
    }

    bool is_positive(std::span<const int> seq) const {
        return std::visit(
            [&](const auto& r) -> bool {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, SequenceSetRule>) {
                    return std::any_of(r.sequences.begin(), r.sequences.end(), [&](const Sequence& s) {
                        return std::equal(s.begin(), s.end(), seq.begin(), seq.end());
                    });
                } else if constexpr (std::is_same_v<R, AllTokensEqualRule>) {
                    return std::all_of(seq.begin(), seq.end(), [&](int t) { return t == r.token; });
                } else {
                    return r.predicate(seq);
                }
            },
            rule_);
    }

    /// Number of complete sequences, saturating at cap + 1.
    std::uint64_t sequence_count() const {
        const std::uint64_t limit = cap_;
        const std::uint64_t v = static_cast<std::uint64_t>(vocab_size());
        if (!eos_) {
            std::uint64_t total = 1;
            for (int i = 0; i < max_length_; ++i)
                total = detail::checked_mul(total, v, limit);
            return total;
        }
        // EOS-terminated sequences of each length plus EOS-free sequences of length T.
        std::uint64_t total = 0, power = 1;
        for (int len = 1; len <= max_length_; ++len) {
            total = std::min(total + power, limit + 1);
            power = detail::checked_mul(power, v - 1, limit);
        }
        return std::min(total + power, limit + 1);
    }

private:
    void validate_rule() const {
        if (const auto* set = std::get_if<SequenceSetRule>(&rule_)) {
            for (const auto& s : set->sequences)
                if (!is_complete(s))
                    throw InvalidInput("TokenInstance: positive sequence set contains an incomplete sequence");
        } else if (const auto* eq = std::get_if<AllTokensEqualRule>(&rule_)) {
            if (eq->token < 0 || eq->token >= vocab_size())
                throw InvalidInput("TokenInstance: all_tokens_equal token out of range");
        } else if (!std::get<PredicateRule>(rule_).predicate) {
            throw InvalidInput("TokenInstance: empty predicate");
        }
    }

    template <typename Visit>
    void for_each_sequence(Visit&& visit) const {
        detail::for_each_complete_sequence(vocab_size(), max_length_, eos_, visit);
    }

    // Count vectors for every completion class, with the number of sequences in each.
    template <typename Visit>
    void for_each_count_class(Visit&& visit) const {
        const int v = vocab_size();
        std::vector<int> free_tokens;
        for (int t = 0; t < v; ++t)
            if (!eos_ || t != *eos_)
                free_tokens.push_back(t);
        std::vector<int> counts(static_cast<std::size_t>(v), 0);
        // distribute `remaining` tokens among free_tokens[idx..]
        std::function<void(std::size_t, int, bool, int)> rec = [&](std::size_t idx, int remaining, bool eos_end,
                                                                    int length) {
            if (idx + 1 >= free_tokens.size()) {
                if (!free_tokens.empty())
                    counts[static_cast<std::size_t>(free_tokens.back())] = remaining;
                else if (remaining != 0)
                    return;
                std::vector<int> free_counts;
                for (int t : free_tokens)
                    free_counts.push_back(counts[static_cast<std::size_t>(t)]);
                const double mult = static_cast<double>(multinomial_count(free_counts));
                visit(counts, length, mult, eos_end);
                if (!free_tokens.empty())
                    counts[static_cast<std::size_t>(free_tokens.back())] = 0;
                return;
            }
            for (int c = 0; c <= remaining; ++c) {
                counts[static_cast<std::size_t>(free_tokens[idx])] = c;
                rec(idx + 1, remaining - c, eos_end, length);
            }
            counts[static_cast<std::size_t>(free_tokens[idx])] = 0;
        };
        if (eos_) {
            for (int len = 1; len <= max_length_; ++len) {
                counts[static_cast<std::size_t>(*eos_)] = 1;
                rec(0, len - 1, true, len);
                counts[static_cast<std::size_t>(*eos_)] = 0;
            }
            rec(0, max_length_, false, max_length_);
        } else {
            rec(0, max_length_, false, max_length_);
        }
    }

    static std::uint64_t multinomial_count(std::span<const int> counts) {
        // n! / prod c_i! accumulated as a product of binomials C(prefix, c_i)
        std::uint64_t result = 1;
        int prefix = 0;
        for (int c : counts) {
            for (int k = 1; k <= c; ++k) {
                ++prefix;
                // result *= prefix / k, kept exact by dividing through gcds
                std::uint64_t num = static_cast<std::uint64_t>(prefix);
                std::uint64_t den = static_cast<std::uint64_t>(k);
                const std::uint64_t g1 = std::gcd(num, den);
                num /= g1;
                den /= g1;
                const std::uint64_t g2 = std::gcd(result, den);
                result /= g2;
                den /= g2;
                if (den != 1 || (num != 0 && result > std::numeric_limits<std::uint64_t>::max() / num))
                    throw InvalidInput("TokenInstance: sequence class too large to count exactly");
                result *= num;
            }
        }
        return result;
    }

    void build_atoms() {
        const int v = vocab_size();
        std::size_t n_pos = 0, n_neg = 0;
        auto add_atom = [&](const std::vector<int>& counts, int length, double mult, bool positive) {
            if (mult <= 0.0)
                return;
            if (atoms_.size() >= cap_)
                throw InvalidInput("TokenInstance: sequence space exceeds enumeration cap of " + std::to_string(cap_));
            atoms_.push_back({counts, length, mult, positive});
            (positive ? n_pos : n_neg) += 1;
        };

        if (std::holds_alternative<PredicateRule>(rule_)) {
            if (sequence_count() > cap_)
                throw InvalidInput("TokenInstance: sequence space exceeds enumeration cap of " + std::to_string(cap_));
            for_each_sequence([&](const Sequence& seq) {
                std::vector<int> counts(static_cast<std::size_t>(v), 0);
                for (int t : seq)
                    ++counts[static_cast<std::size_t>(t)];
                add_atom(counts, static_cast<int>(seq.size()), 1.0, is_positive(seq));
            });
        } else {
            // positive multiplicity per count class
            std::map<std::vector<int>, double> positives;
            if (const auto* set = std::get_if<SequenceSetRule>(&rule_)) {
                std::set<Sequence> unique(set->sequences.begin(), set->sequences.end());
                for (const auto& s : unique) {
                    std::vector<int> counts(static_cast<std::size_t>(v), 0);
                    for (int t : s)
                        ++counts[static_cast<std::size_t>(t)];
                    positives[counts] += 1.0;
                }
            } else {
                const int tok = std::get<AllTokensEqualRule>(rule_).token;
                std::vector<int> counts(static_cast<std::size_t>(v), 0);
                const bool is_eos = eos_ && tok == *eos_;
                counts[static_cast<std::size_t>(tok)] = is_eos ? 1 : max_length_;
                // "EOS" alone, or tok repeated to the length cap
                positives[counts] += 1.0;
            }
            for_each_count_class([&](const std::vector<int>& counts, int length, double mult, bool) {
                double pos = 0.0;
                if (auto it = positives.find(counts); it != positives.end())
                    pos = it->second;
                add_atom(counts, length, pos, true);
                add_atom(counts, length, mult - pos, false);
            });
        }
        if (n_pos == 0 || n_neg == 0)
            throw InvalidInput("TokenInstance: need at least one positive and one negative complete sequence");
    }

    std::string prompt_id_;
    std::size_t dimension_;
    std::vector<std::string> ids_;
    Vec features_;
    int max_length_;
    std::optional<int> eos_;
    PositiveRule rule_;
    std::size_t cap_;
    std::vector<SequenceAtom> atoms_;
};

namespace detail {

inline void check_dimension(const TokenInstance& inst, const ParamVector& theta) {
    if (theta.size() != inst.dimension())
        throw InvalidInput("parameter dimension " + std::to_string(theta.size()) +
                           " does not match instance dimension " + std::to_string(inst.dimension()));
}

/// Next-token log-probabilities (identical at every position).
inline Vec token_log_probs(const TokenInstance& inst, const ParamVector& theta) {
    check_dimension(inst, theta);
    Vec lp(static_cast<std::size_t>(inst.vocab_size()));
    for (int t = 0; t < inst.vocab_size(); ++t) {
        lp[static_cast<std::size_t>(t)] = dot(inst.features(t), theta.view());
        if (!std::isfinite(lp[static_cast<std::size_t>(t)]))
            throw InvalidInput("non-finite logit for token '" + inst.token_id(t) + "'");
    }
    const double lse = log_sum_exp(lp);
    for (double& v : lp)
        v -= lse;
    return lp;
}

inline Vec token_mean_features(const TokenInstance& inst, std::span<const double> token_lp) {
    Vec m(inst.dimension(), 0.0);
    for (int t = 0; t < inst.vocab_size(); ++t)
        axpy(std::exp(token_lp[static_cast<std::size_t>(t)]), inst.features(t), m);
    return m;
}

/// Log-probability of a single sequence with the given counts (multiplicity excluded).
inline double counts_log_prob(std::span<const int> counts, std::span<const double> token_lp) {
    double s = 0.0;
    for (std::size_t t = 0; t < counts.size(); ++t)
        if (counts[t] != 0)
            s += counts[t] * token_lp[t];
    return s;
}

inline Vec counts_score(const TokenInstance& inst, std::span<const int> counts, int length,
                        std::span<const double> mean) {
    Vec s(inst.dimension(), 0.0);
    for (int t = 0; t < inst.vocab_size(); ++t)
        if (counts[static_cast<std::size_t>(t)] != 0)
            axpy(counts[static_cast<std::size_t>(t)], inst.features(t), s);
    axpy(-static_cast<double>(length), mean, s);
    return s;
}

/// Per-atom total log-mass: log(multiplicity) + log pi(one member).
inline Vec atom_log_masses(const TokenInstance& inst, const ParamVector& theta) {
    const Vec tlp = token_log_probs(inst, theta);
    Vec out;
    out.reserve(inst.atoms().size());
    for (const auto& a : inst.atoms())
        out.push_back(std::log(a.multiplicity) + counts_log_prob(a.counts, tlp));
    return out;
}

inline void check_sequence(const TokenInstance& inst, std::span<const int> seq) {
    if (!inst.is_complete(seq))
        throw InvalidInput("sequence is not a complete sequence of this instance");
}

}  // namespace detail

/// Explicit list of all complete sequences with labels.
inline std::vector<LabeledSequence> enumerate_sequences(const TokenInstance& inst) {
    if (inst.sequence_count() > inst.enumeration_cap())
        throw InvalidInput("enumerate_sequences: sequence count exceeds enumeration cap of " +
                           std::to_string(inst.enumeration_cap()));
    std::vector<LabeledSequence> out;
    detail::for_each_complete_sequence(inst.vocab_size(), inst.max_length(), inst.eos(), [&](const Sequence& seq) {
        out.push_back({seq, inst.is_positive(seq)});
    });
    return out;
}

/// All complete sequences over a vocabulary of the given size, without labels.
inline std::vector<Sequence> complete_sequences(int vocab, int max_length, std::optional<int> eos) {
    std::vector<Sequence> out;
    detail::for_each_complete_sequence(vocab, max_length, eos, [&](const Sequence& seq) { out.push_back(seq); });
    return out;
}

inline double sequence_prob(const TokenInstance& inst, const ParamVector& theta, std::span<const int> seq) {
    detail::check_sequence(inst, seq);
    const Vec tlp = detail::token_log_probs(inst, theta);
    double lp = 0.0;
    for (int t : seq)
        lp += tlp[static_cast<std::size_t>(t)];
    return std::exp(lp);
}

inline double token_value(const TokenInstance& inst, const ParamVector& theta) {
    const Vec lm = detail::atom_log_masses(inst, theta);
    double j = 0.0;
    for (std::size_t i = 0; i < lm.size(); ++i)
        if (inst.atoms()[i].positive)
            j += std::exp(lm[i]);
    return j;
}

inline double token_log_odds(const TokenInstance& inst, const ParamVector& theta) {
    const Vec lm = detail::atom_log_masses(inst, theta);
    Vec pos, neg;
    for (std::size_t i = 0; i < lm.size(); ++i)
        (inst.atoms()[i].positive ? pos : neg).push_back(lm[i]);
    return log_sum_exp(pos) - log_sum_exp(neg);
}

/// Per-position scores phi(o_t) - E_t[phi]; their sum is the sequence score.
inline std::vector<Vec> token_position_scores(const TokenInstance& inst, const ParamVector& theta,
                                              std::span<const int> seq) {
    detail::check_sequence(inst, seq);
    const Vec mean = detail::token_mean_features(inst, detail::token_log_probs(inst, theta));
    std::vector<Vec> out;
    for (int t : seq)
        out.push_back(subtract(inst.features(t), mean));
    return out;
}

inline Vec token_score(const TokenInstance& inst, const ParamVector& theta, std::span<const int> seq) {
    Vec s(inst.dimension(), 0.0);
    for (const auto& v : token_position_scores(inst, theta, seq))
        axpy(1.0, v, s);
    return s;
}

inline GapReport token_gap_report(const TokenInstance& inst, const ParamVector& theta,
                                  std::optional<std::span<const double>> direction = std::nullopt) {
    if (direction) {
        if (direction->size() != inst.dimension())
            throw InvalidInput("token_gap_report: direction dimension mismatch");
        if (norm2(*direction) > 1.0 + 1e-9)
            throw InvalidInput("token_gap_report: direction norm exceeds 1");
    }
    const Vec tlp = detail::token_log_probs(inst, theta);
    const Vec mean = detail::token_mean_features(inst, tlp);
    const std::size_t d = inst.dimension();

    GapReport rep;
    rep.g_plus.assign(d, 0.0);
    rep.g_minus.assign(d, 0.0);
    Vec pos_lm, neg_lm;
    double mass_pos = 0.0, mass_neg = 0.0;
    for (const auto& a : inst.atoms()) {
        const double lm = std::log(a.multiplicity) + detail::counts_log_prob(a.counts, tlp);
        const double m = std::exp(lm);
        const Vec s = detail::counts_score(inst, a.counts, a.length, mean);
        rep.score_bound = std::max(rep.score_bound, norm2(s));
        if (a.positive) {
            axpy(m, s, rep.g_plus);
            mass_pos += m;
            pos_lm.push_back(lm);
        } else {
            axpy(m, s, rep.g_minus);
            mass_neg += m;
            neg_lm.push_back(lm);
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        rep.g_plus[j] /= mass_pos;
        rep.g_minus[j] /= mass_neg;
    }
    rep.gap = subtract(rep.g_plus, rep.g_minus);
    rep.value = mass_pos;
    rep.log_odds = log_sum_exp(pos_lm) - log_sum_exp(neg_lm);
    if (direction)
        rep.rho = dot(*direction, rep.gap);
    return rep;
}

/// J (1 - J) (g+ - g-) over the sequence space.
inline Vec token_policy_gradient(const TokenInstance& inst, const ParamVector& theta) {
    const GapReport rep = token_gap_report(inst, theta);
    return scaled(rep.gap, rep.value * (1.0 - rep.value));
}

/// sum_o pi(o) A(o) score(o) over the sequence space.
inline Vec token_policy_gradient_direct(const TokenInstance& inst, const ParamVector& theta) {
    const Vec tlp = detail::token_log_probs(inst, theta);
    const Vec mean = detail::token_mean_features(inst, tlp);
    const double j = token_value(inst, theta);
    Vec g(inst.dimension(), 0.0);
    for (const auto& a : inst.atoms()) {
        const double m = a.multiplicity * std::exp(detail::counts_log_prob(a.counts, tlp));
        const double adv = (a.positive ? 1.0 : 0.0) - j;
        axpy(m * adv, detail::counts_score(inst, a.counts, a.length, mean), g);
    }
    return g;
}

/// Per-token constants: G_p = 2 max ||phi||, L_p = 4 max ||phi||^2.
inline AnalyticConstants token_analytic_constants(const TokenInstance& inst) {
    double max_norm = 0.0;
    for (int t = 0; t < inst.vocab_size(); ++t)
        max_norm = std::max(max_norm, norm2(inst.features(t)));
    return {2.0 * max_norm, 4.0 * max_norm * max_norm};
}

/// Exact length distribution under the policy: pairs (length, probability).
inline std::vector<std::pair<int, double>> length_distribution(const TokenInstance& inst, const ParamVector& theta) {
    const Vec lm = detail::atom_log_masses(inst, theta);
    std::map<int, double> dist;
    for (std::size_t i = 0; i < lm.size(); ++i)
        dist[inst.atoms()[i].length] += std::exp(lm[i]);
    return {dist.begin(), dist.end()};
}

/// psi_1-Orlicz norm inf{a > 0 : E exp(|X| / a) <= 2} of a nonnegative discrete variable.
inline double orlicz_psi1_norm(std::span<const std::pair<int, double>> dist) {
    double mean = 0.0, max_value = 0.0;
    for (const auto& [x, p] : dist) {
        mean += p * x;
        if (p > 0.0)
            max_value = std::max(max_value, static_cast<double>(x));
    }
    auto excess = [&](double a) {
        double s = 0.0;
        for (const auto& [x, p] : dist)
            s += p * std::exp(x / a);
        return s - 2.0;
    };
    // E exp(X/mean) >= e > 2 and E exp(X ln2 / max) <= 2 bracket the root.
    double lo = mean, hi = max_value / std::numbers::ln2;
    if (excess(hi) >= 0.0)
        return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    return hi;
}

inline LengthStats length_stats(const TokenInstance& inst, const ParamVector& theta) {
    const auto dist = length_distribution(inst, theta);
    LengthStats st;
    for (const auto& [len, p] : dist) {
        st.mean_length += p * len;
        if (p > 0.0)
            st.t_inf = std::max(st.t_inf, len);
    }
    st.t_psi1 = orlicz_psi1_norm(dist);
    return st;
}

/// Largest step the token-level convergence condition admits.
inline double token_step_size_ceiling(double rho, double lipschitz, double score_bound, double t_inf, double t_psi1,
                                      double j_current) {
    const double rho_plus = positive_part(rho);
    const double cap = 8.0 * t_inf * t_inf;
    const double length_term = j_current >= 1.0 ? cap : std::min(t_psi1 / (1.0 - j_current), cap);
    const double g2 = score_bound * score_bound;
    const double alignment_branch = (rho_plus / 2.0) / (lipschitz * t_inf + g2 * length_term);
    const double curvature_branch = 1.0 / (2.0 * std::sqrt(lipschitz * t_inf + g2 * t_psi1));
    return std::min(alignment_branch, curvature_branch);
}

/// Lower end of the step band on which the token-level construction provably collapses.
inline double token_overshoot_floor(double rho, double lipschitz, double score_bound, double t_inf) {
    return 120.0 * rho / ((lipschitz + score_bound * score_bound) * t_inf);
}

// Overloads sharing the trajectory-level names, for code generic over instance kind.

inline double value(const TokenInstance& inst, const ParamVector& theta) { return token_value(inst, theta); }
inline double log_odds(const TokenInstance& inst, const ParamVector& theta) { return token_log_odds(inst, theta); }
inline GapReport gradient_gap_report(const TokenInstance& inst, const ParamVector& theta,
                                     std::optional<std::span<const double>> direction = std::nullopt) {
    return token_gap_report(inst, theta, direction);
}
inline Vec policy_gradient(const TokenInstance& inst, const ParamVector& theta) {
    return token_policy_gradient(inst, theta);
}
inline Vec policy_gradient_direct(const TokenInstance& inst, const ParamVector& theta) {
    return token_policy_gradient_direct(inst, theta);
}
inline AnalyticConstants analytic_constants(const TokenInstance& inst) { return token_analytic_constants(inst); }

}  // namespace gradgap
