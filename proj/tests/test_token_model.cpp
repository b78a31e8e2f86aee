#include <cmath>
#include <numbers>
#include <set>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "gradgap/random.hpp"
#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"

using namespace gradgap;

namespace {

// Explicit enumeration with per-sequence products; independent of the count-class atoms.
struct Brute {
    double j = 0.0;
    Vec g_plus, g_minus;
};

Brute brute_force(const TokenInstance& inst, const ParamVector& theta) {
    const auto seqs = enumerate_sequences(inst);
    const std::size_t d = inst.dimension();
    Brute b{0.0, Vec(d, 0.0), Vec(d, 0.0)};
    double mp = 0.0, mm = 0.0;
    for (const auto& s : seqs) {
        const double p = sequence_prob(inst, theta, s.tokens);
        const Vec sc = token_score(inst, theta, s.tokens);
        if (s.positive) {
            mp += p;
            axpy(p, sc, b.g_plus);
        } else {
            mm += p;
            axpy(p, sc, b.g_minus);
        }
    }
    b.j = mp;
    for (auto& v : b.g_plus)
        v /= mp;
    for (auto& v : b.g_minus)
        v /= mm;
    return b;
}

TokenInstance eos_instance(int t_inf) {
    // a, b, EOS; positive iff the sequence contains no b
    return TokenInstance("eos", 2, {{"a", {1.0, 0.0}}, {"b", {0.0, 1.0}}, {"e", {0.0, 0.0}}}, t_inf, 2,
                         PredicateRule{[](std::span<const int> s) {
                             for (int t : s)
                                 if (t == 1)
                                     return false;
                             return true;
                         }});
}

}  // namespace

TEST(Enumerate, SingletonVocabulary) {
    const auto seqs = complete_sequences(1, 3, std::nullopt);
    ASSERT_EQ(seqs.size(), 1u);
    EXPECT_EQ(seqs[0], (Sequence{0, 0, 0}));
}

TEST(Enumerate, EosSemantics) {
    const auto seqs = complete_sequences(2, 2, 1);
    std::set<Sequence> got(seqs.begin(), seqs.end());
    EXPECT_EQ(got, (std::set<Sequence>{{1}, {0, 1}, {0, 0}}));
}

TEST(Enumerate, FixedLengthCount) {
    TokenInstance inst("c", 1, {{"a", {1.0}}, {"b", {0.0}}, {"c", {-1.0}}}, 4, std::nullopt, AllTokensEqualRule{0});
    EXPECT_EQ(enumerate_sequences(inst).size(), 81u);
    EXPECT_EQ(inst.sequence_count(), 81u);
}

TEST(Enumerate, CapRejectsOversizedSpace) {
    TokenInstance inst("c", 1, {{"a", {1.0}}, {"b", {0.0}}, {"c", {-1.0}}}, 4, std::nullopt, AllTokensEqualRule{0}, 80);
    EXPECT_THROW(enumerate_sequences(inst), InvalidInput);
    EXPECT_THROW(TokenInstance("p", 1, {{"a", {1.0}}, {"b", {0.0}}}, 10, std::nullopt,
                               PredicateRule{[](std::span<const int> s) { return s[0] == 0; }}, 1000),
                 InvalidInput);
}

TEST(SequenceProb, UniformFixedLength) {
    TokenInstance inst("u", 1, {{"a", {1.0}}, {"b", {0.0}}, {"c", {-1.0}}}, 3, std::nullopt, AllTokensEqualRule{0});
    const Sequence s{2, 0, 1};
    EXPECT_NEAR(sequence_prob(inst, ParamVector{0.0}, s), 1.0 / 27.0, 1e-16);
}

TEST(SequenceProb, NormalizesWithEos) {
    const auto inst = eos_instance(5);
    const ParamVector theta{0.4, -0.9};
    double total = 0.0;
    for (const auto& s : enumerate_sequences(inst))
        total += sequence_prob(inst, theta, s.tokens);
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(SequenceProb, RejectsIncompleteSequence) {
    const auto inst = eos_instance(3);
    const Sequence early_eos{2, 0};
    EXPECT_THROW(sequence_prob(inst, ParamVector{0.0, 0.0}, early_eos), InvalidInput);
}

TEST(TokenValue, SymmetricLengthOne) {
    TokenInstance inst("s", 1, {{"a", {1.0}}, {"b", {-1.0}}}, 1, std::nullopt, AllTokensEqualRule{0});
    EXPECT_DOUBLE_EQ(token_value(inst, ParamVector{0.0}), 0.5);
}

TEST(TokenValue, AtomsMatchBruteForce) {
    Rng rng(31);
    for (int t = 0; t < 40; ++t) {
        const auto inst = random_token_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Brute b = brute_force(inst, theta);
        const GapReport rep = token_gap_report(inst, theta);
        EXPECT_NEAR(rep.value, b.j, 1e-12);
        for (std::size_t j = 0; j < inst.dimension(); ++j) {
            EXPECT_NEAR(rep.g_plus[j], b.g_plus[j], 1e-10);
            EXPECT_NEAR(rep.g_minus[j], b.g_minus[j], 1e-10);
        }
    }
}

TEST(TokenValue, PredicateRuleMatchesSequenceSet) {
    const auto pred = eos_instance(4);
    std::vector<Sequence> pos;
    for (const auto& s : enumerate_sequences(pred))
        if (s.positive)
            pos.push_back(s.tokens);
    TokenInstance set("eos", 2, {{"a", {1.0, 0.0}}, {"b", {0.0, 1.0}}, {"e", {0.0, 0.0}}}, 4, 2, SequenceSetRule{pos});
    const ParamVector theta{0.3, 0.8};
    EXPECT_NEAR(token_value(pred, theta), token_value(set, theta), 1e-14);
    EXPECT_NEAR(token_log_odds(pred, theta), token_log_odds(set, theta), 1e-12);
}

TEST(TokenScore, IdenticalTokenFeaturesGiveZero) {
    TokenInstance inst("one", 1, {{"a", {2.0}}, {"e", {2.0}}}, 3, 1, SequenceSetRule{{{1}}});
    const Sequence s{0, 0, 0};
    EXPECT_NEAR(norm2(token_score(inst, ParamVector{0.7}, s)), 0.0, 1e-15);
}

TEST(TokenScore, SumOfPositionScoresAndFiniteDifference) {
    const auto inst = eos_instance(4);
    const ParamVector theta{0.2, -0.5};
    const Sequence s{0, 1, 0, 2};
    const auto pos = token_position_scores(inst, theta, s);
    ASSERT_EQ(pos.size(), 4u);
    Vec sum(2, 0.0);
    for (const auto& v : pos)
        axpy(1.0, v, sum);
    const Vec sc = token_score(inst, theta, s);
    const double h = 1e-6;
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(sc[j], sum[j], 1e-15);
        Vec up = theta.entries(), down = theta.entries();
        up[j] += h;
        down[j] -= h;
        const double fd =
            (std::log(sequence_prob(inst, ParamVector(up), s)) - std::log(sequence_prob(inst, ParamVector(down), s))) /
            (2 * h);
        EXPECT_NEAR(sc[j], fd, 1e-6);
    }
}

TEST(Reduction, LengthOneMatchesTrajectoryModel) {
    Rng rng(41);
    for (int t = 0; t < 30; ++t) {
        const std::size_t d = 1 + rng.below(3);
        const int v = 2 + static_cast<int>(rng.below(4));
        std::vector<Token> toks;
        std::vector<Response> rs;
        std::vector<Sequence> pos{{0}};
        for (int i = 0; i < v; ++i) {
            const Vec f = rng.normal_vector(d);
            toks.push_back({"t" + std::to_string(i), f});
            const bool positive = i == 0 || (i < v - 1 && rng.uniform() < 0.4);
            if (positive && i > 0)
                pos.push_back({i});
            rs.push_back({"t" + std::to_string(i), f, positive});
        }
        const TokenInstance tok("r", d, toks, 1, std::nullopt, SequenceSetRule{pos});
        const TrajectoryInstance traj("r", d, rs);
        const ParamVector theta(rng.normal_vector(d));
        const Vec w = rng.direction(d);
        const auto a = token_gap_report(tok, theta, std::span<const double>(w));
        const auto b = gradient_gap_report(traj, theta, std::span<const double>(w));
        EXPECT_NEAR(a.value, b.value, 1e-12);
        EXPECT_NEAR(a.log_odds, b.log_odds, 1e-12);
        EXPECT_NEAR(*a.rho, *b.rho, 1e-12);
        for (std::size_t j = 0; j < d; ++j)
            EXPECT_NEAR(a.gap[j], b.gap[j], 1e-12);
        for (int i = 0; i < v; ++i) {
            const Sequence s{i};
            const Vec ts = token_score(tok, theta, s), rsc = score(traj, theta, static_cast<std::size_t>(i));
            for (std::size_t j = 0; j < d; ++j)
                EXPECT_NEAR(ts[j], rsc[j], 1e-12);
        }
    }
}

TEST(TokenGap, SelfAlignmentIsGapNorm) {
    const auto inst = eos_instance(4);
    const ParamVector theta{0.1, 0.2};
    const auto rep = token_gap_report(inst, theta);
    const Vec w = scaled(rep.gap, 1.0 / norm2(rep.gap));
    EXPECT_NEAR(*token_gap_report(inst, theta, std::span<const double>(w)).rho, norm2(rep.gap), 1e-12);
}

TEST(TokenGradient, IdentityMatchesFiniteDifferences) {
    Rng rng(43);
    for (int t = 0; t < 20; ++t) {
        const auto inst = random_token_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec g = token_policy_gradient(inst, theta);
        const Vec gd = token_policy_gradient_direct(inst, theta);
        const double h = 1e-5;
        for (std::size_t j = 0; j < inst.dimension(); ++j) {
            Vec up = theta.entries(), down = theta.entries();
            up[j] += h;
            down[j] -= h;
            const double fd = (brute_force(inst, ParamVector(up)).j - brute_force(inst, ParamVector(down)).j) / (2 * h);
            EXPECT_NEAR(g[j], fd, 1e-7);
            EXPECT_NEAR(g[j], gd[j], 1e-12);
        }
    }
}

TEST(TokenInstance, RejectsSingleClassAndBadEos) {
    EXPECT_THROW(TokenInstance("x", 1, {{"a", {1.0}}, {"b", {0.0}}}, 2, std::nullopt, SequenceSetRule{}), InvalidInput);
    EXPECT_THROW(TokenInstance("x", 1, {{"a", {1.0}}, {"b", {0.0}}}, 2, 5, SequenceSetRule{{{0, 0}}}), InvalidInput);
    EXPECT_THROW(TokenInstance("x", 1, {{"a", {1.0}}, {"b", {0.0}}}, 2, 1, SequenceSetRule{{{1, 0}}}), InvalidInput);
}

TEST(LengthStats, DeterministicLength) {
    TokenInstance inst("fix", 1, {{"a", {1.0}}, {"b", {0.0}}}, 6, std::nullopt, AllTokensEqualRule{0});
    const auto st = length_stats(inst, ParamVector{0.3});
    EXPECT_EQ(st.t_inf, 6);
    EXPECT_NEAR(st.mean_length, 6.0, 1e-12);
    EXPECT_NEAR(st.t_psi1, 6.0 / std::numbers::ln2, 1e-9);
}

TEST(LengthStats, GeometricStopMatchesRootSolve) {
    // Two tokens with equal logits, one of them EOS: stop probability 1/2 per step.
    TokenInstance inst("geo", 1, {{"a", {1.0}}, {"e", {1.0}}}, 10, 1, SequenceSetRule{{{1}}});
    const auto dist = length_distribution(inst, ParamVector{0.0});
    double total = 0.0;
    for (const auto& [len, p] : dist) {
        const double expected = len < 10 ? std::ldexp(1.0, -len) : std::ldexp(1.0, -9);
        EXPECT_NEAR(p, expected, 1e-15);
        total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
    auto f = [&](double a) {
        double s = 0.0;
        for (const auto& [len, p] : dist)
            s += p * std::exp(len / a);
        return s - 2.0;
    };
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(f, 1.5, 20.0, boost::math::tools::eps_tolerance<double>(50), iters);
    const double oracle = 0.5 * (root.first + root.second);
    const auto st = length_stats(inst, ParamVector{0.0});
    EXPECT_NEAR(st.t_psi1, oracle, 1e-6);
    EXPECT_EQ(st.t_inf, 10);
}

TEST(LengthStats, ChainInequality) {
    Rng rng(47);
    for (int t = 0; t < 50; ++t) {
        const auto inst = random_token_instance(rng);
        const auto st = length_stats(inst, ParamVector(rng.normal_vector(inst.dimension())));
        EXPECT_LE(st.mean_length, st.t_psi1 + 1e-12);
        EXPECT_LE(st.t_psi1, st.t_inf / std::numbers::ln2 + 1e-9);
        EXPECT_LE(st.t_inf, inst.max_length());
    }
}

TEST(StepCeiling, NonPositiveAlignmentGivesZero) {
    EXPECT_EQ(token_step_size_ceiling(0.0, 1.0, 1.0, 4.0, 3.0, 0.3), 0.0);
    EXPECT_EQ(token_step_size_ceiling(-0.5, 1.0, 1.0, 4.0, 3.0, 0.3), 0.0);
}

TEST(StepCeiling, FirstBranchAtZeroValue) {
    const double rho = 1e-3, l = 5.0, g = 1.0, t = 4.0, tp = 3.0;
    EXPECT_DOUBLE_EQ(token_step_size_ceiling(rho, l, g, t, tp, 0.0), rho / (2.0 * (l * t + g * g * std::min(tp, 8 * t * t))));
}

TEST(StepCeiling, RegressionConstant) {
    // (0.1/2) / (8/ln2 / 0.5) = ln2 / 320, below the curvature branch 1/(2 sqrt(8/ln2)).
    EXPECT_NEAR(token_step_size_ceiling(0.1, 0.0, 1.0, 8.0, 8.0 / std::numbers::ln2, 0.5), 0.0021660849392498290,
                1e-17);
}

TEST(StepCeiling, SaturatedValueUsesLengthCap) {
    const double c = token_step_size_ceiling(1.0, 0.0, 1.0, 2.0, 2.0, 1.0);
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_DOUBLE_EQ(c, 0.5 / 32.0);
}

TEST(StepCeiling, MonotoneInAlignment) {
    double prev = 0.0;
    for (double rho = 0.0; rho <= 2.0; rho += 0.05) {
        const double c = token_step_size_ceiling(rho, 1.0, 2.0, 4.0, 5.0, 0.4);
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(OvershootFloor, Arithmetic) {
    EXPECT_EQ(token_overshoot_floor(0.0, 1.0, 1.0, 4.0), 0.0);
    EXPECT_NEAR(token_overshoot_floor(0.01, 0.0, 1.0, 10.0), 0.12, 1e-15);
    EXPECT_DOUBLE_EQ(token_overshoot_floor(0.3, 2.0, 1.0, 8.0), 0.5 * token_overshoot_floor(0.3, 2.0, 1.0, 4.0));
    EXPECT_DOUBLE_EQ(token_overshoot_floor(0.6, 2.0, 1.0, 8.0), 2.0 * token_overshoot_floor(0.3, 2.0, 1.0, 8.0));
}
