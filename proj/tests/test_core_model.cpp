#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gradgap/random.hpp"
#include "gradgap/trajectory.hpp"

using namespace gradgap;

namespace {

TrajectoryInstance three_line() {
    return TrajectoryInstance("line", 1, {{"a", {1.0}, true}, {"b", {0.0}, false}, {"c", {-1.0}, false}});
}

// Plain exp/normalize, no log-space tricks.
Vec naive_probs(const TrajectoryInstance& inst, const ParamVector& theta) {
    Vec p(inst.size());
    double z = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        p[i] = std::exp(dot(inst.features(i), theta.view()));
        z += p[i];
    }
    for (double& v : p)
        v /= z;
    return p;
}

double naive_value(const TrajectoryInstance& inst, const ParamVector& theta) {
    const Vec p = naive_probs(inst, theta);
    double j = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i)
        if (inst.positive(i))
            j += p[i];
    return j;
}

}  // namespace

TEST(ResponseProbs, EqualFeaturesGiveUniform) {
    TrajectoryInstance inst("eq", 2, {{"a", {0.3, -1.0}, true}, {"b", {0.3, -1.0}, false}});
    const Vec p = response_probs(inst, ParamVector{2.0, 5.0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(ResponseProbs, ZeroParameterIsUniform) {
    TrajectoryInstance inst("pm", 1, {{"a", {1.0}, true}, {"b", {-1.0}, false}});
    const Vec p = response_probs(inst, ParamVector{0.0});
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(ResponseProbs, HandComputedThreeResponses) {
    const Vec p = response_probs(three_line(), ParamVector{std::numbers::ln2});
    EXPECT_NEAR(p[0], 4.0 / 7.0, 1e-15);
    EXPECT_NEAR(p[1], 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(p[2], 1.0 / 7.0, 1e-15);
}

TEST(ResponseProbs, MatchesNaiveOracleAndNormalizes) {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec p = response_probs(inst, theta);
        const Vec q = naive_probs(inst, theta);
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(p[i], q[i], 1e-13);
            s += p[i];
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(ResponseProbs, LargeLogitsStayFinite) {
    TrajectoryInstance inst("big", 1, {{"a", {1.0}, true}, {"b", {-1.0}, false}});
    const Vec p = response_probs(inst, ParamVector{800.0});
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_NEAR(log_odds(inst, ParamVector{800.0}), 1600.0, 1e-9);
}

TEST(Value, SymmetricPairIsHalf) {
    TrajectoryInstance inst("pm", 1, {{"a", {1.0}, true}, {"b", {-1.0}, false}});
    EXPECT_DOUBLE_EQ(value(inst, ParamVector{0.0}), 0.5);
}

TEST(Value, LogOddsInvertsValue) {
    const auto inst = three_line();
    const ParamVector theta{0.7};
    const double j = value(inst, theta);
    EXPECT_NEAR(log_odds(inst, theta), std::log(j / (1.0 - j)), 1e-13);
}

TEST(Score, EqualFeaturesGiveZero) {
    TrajectoryInstance inst("eq", 2, {{"a", {0.3, -1.0}, true}, {"b", {0.3, -1.0}, false}});
    const Vec s = score(inst, ParamVector{1.0, 1.0}, 0);
    EXPECT_NEAR(norm2(s), 0.0, 1e-15);
}

TEST(Score, SymmetricMeanIsZero) {
    TrajectoryInstance inst("sym", 2, {{"a", {1.0, 0.0}, true}, {"b", {-1.0, 0.0}, false}});
    const Vec s = score(inst, ParamVector{0.0, 0.0}, 0);
    EXPECT_DOUBLE_EQ(s[0], 1.0);
    EXPECT_DOUBLE_EQ(s[1], 0.0);
}

TEST(Score, MatchesFiniteDifferenceOfLogProb) {
    Rng rng(3);
    const auto inst = random_trajectory_instance(rng);
    const ParamVector theta(rng.normal_vector(inst.dimension()));
    const double h = 1e-6;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const Vec s = score(inst, theta, i);
        for (std::size_t j = 0; j < inst.dimension(); ++j) {
            Vec up = theta.entries(), down = theta.entries();
            up[j] += h;
            down[j] -= h;
            const double fd = (std::log(naive_probs(inst, ParamVector(up))[i]) -
                               std::log(naive_probs(inst, ParamVector(down))[i])) /
                              (2.0 * h);
            EXPECT_NEAR(s[j], fd, 1e-6);
        }
    }
}

TEST(ConditionalMeans, SingletonPositiveEqualsItsScore) {
    const auto inst = three_line();
    const ParamVector theta{0.4};
    const auto [gp, gm] = conditional_score_means(inst, theta);
    EXPECT_NEAR(gp[0], score(inst, theta, 0)[0], 1e-15);
}

TEST(ConditionalMeans, LabelSwapSymmetry) {
    TrajectoryInstance inst("sym", 2,
                            {{"a", {1.0, 0.5}, true}, {"b", {0.2, -1.0}, true},
                             {"c", {-1.0, -0.5}, false}, {"d", {-0.2, 1.0}, false}});
    const auto [gp, gm] = conditional_score_means(inst, ParamVector{0.0, 0.0});
    EXPECT_NEAR(gp[0], -gm[0], 1e-15);
    EXPECT_NEAR(gp[1], -gm[1], 1e-15);
}

TEST(GapReport, OrthogonalDirectionHasZeroAlignment) {
    TrajectoryInstance inst("x", 2, {{"a", {1.0, 0.0}, true}, {"b", {-1.0, 0.0}, false}});
    const Vec w{0.0, 1.0};
    const auto rep = gradient_gap_report(inst, ParamVector{0.3, -0.2}, std::span<const double>(w));
    EXPECT_NEAR(*rep.rho, 0.0, 1e-15);
}

TEST(GapReport, SelfAlignmentIsGapNorm) {
    Rng rng(5);
    const auto inst = random_trajectory_instance(rng);
    const ParamVector theta(rng.normal_vector(inst.dimension()));
    const auto rep = gradient_gap_report(inst, theta);
    EXPECT_FALSE(rep.rho.has_value());
    const Vec w = scaled(rep.gap, 1.0 / norm2(rep.gap));
    const auto aligned = gradient_gap_report(inst, theta, std::span<const double>(w));
    EXPECT_NEAR(*aligned.rho, norm2(rep.gap), 1e-12);
}

TEST(GapReport, AgreesWithConditionalMeans) {
    const auto inst = three_line();
    const ParamVector theta{-0.3};
    const auto rep = gradient_gap_report(inst, theta);
    const auto [gp, gm] = conditional_score_means(inst, theta);
    EXPECT_NEAR(rep.gap[0], gp[0] - gm[0], 1e-14);
    EXPECT_NEAR(rep.value, value(inst, theta), 1e-15);
}

TEST(GapReport, RejectsOverlongDirection) {
    const auto inst = three_line();
    const Vec w{1.5};
    EXPECT_THROW(gradient_gap_report(inst, ParamVector{0.0}, std::span<const double>(w)), InvalidInput);
}

TEST(PolicyGradient, MatchesCentralDifferences) {
    Rng rng(21);
    for (int t = 0; t < 30; ++t) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec g = policy_gradient(inst, theta);
        const double h = 1e-5;
        for (std::size_t j = 0; j < inst.dimension(); ++j) {
            Vec up = theta.entries(), down = theta.entries();
            up[j] += h;
            down[j] -= h;
            const double fd = (naive_value(inst, ParamVector(up)) - naive_value(inst, ParamVector(down))) / (2 * h);
            EXPECT_NEAR(g[j], fd, 1e-8);
        }
    }
}

TEST(PolicyGradient, TwoPathsAgree) {
    Rng rng(22);
    for (int t = 0; t < 30; ++t) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension()));
        const Vec a = policy_gradient(inst, theta), b = policy_gradient_direct(inst, theta);
        EXPECT_LE(norm2(subtract(a, b)), 1e-12);
    }
}

TEST(PolicyGradient, VanishesAsValueSaturates) {
    TrajectoryInstance inst("pm", 1, {{"a", {1.0}, true}, {"b", {-1.0}, false}});
    EXPECT_LT(norm2(policy_gradient(inst, ParamVector{40.0})), 1e-30);
}

TEST(AnalyticConstants, ZeroFeatures) {
    TrajectoryInstance inst("z", 2, {{"a", {0.0, 0.0}, true}, {"b", {0.0, 0.0}, false}});
    const auto c = analytic_constants(inst);
    EXPECT_EQ(c.score_bound, 0.0);
    EXPECT_EQ(c.lipschitz, 0.0);
}

TEST(AnalyticConstants, UnitScalarFeatures) {
    TrajectoryInstance inst("pm", 1, {{"a", {1.0}, true}, {"b", {-1.0}, false}});
    const auto c = analytic_constants(inst);
    EXPECT_DOUBLE_EQ(c.score_bound, 2.0);
    EXPECT_DOUBLE_EQ(c.lipschitz, 4.0);
}

TEST(AnalyticConstants, ScoreBoundHoldsOnRandomDraws) {
    Rng rng(9);
    for (int t = 0; t < 40; ++t) {
        const auto inst = random_trajectory_instance(rng);
        const ParamVector theta(rng.normal_vector(inst.dimension(), 3.0));
        const double g = analytic_constants(inst).score_bound;
        for (std::size_t i = 0; i < inst.size(); ++i)
            EXPECT_LE(norm2(score(inst, theta, i)), g + 1e-12);
    }
}

TEST(TrajectoryInstance, RejectsSingleLabelClass) {
    EXPECT_THROW(TrajectoryInstance("p", 1, {{"a", {1.0}, true}, {"b", {0.0}, true}}), InvalidInput);
    EXPECT_THROW(TrajectoryInstance("n", 1, {{"a", {1.0}, false}}), InvalidInput);
}

TEST(TrajectoryInstance, RejectsBadFeatures) {
    EXPECT_THROW(TrajectoryInstance("d", 2, {{"a", {1.0}, true}, {"b", {0.0, 1.0}, false}}), InvalidInput);
    EXPECT_THROW(TrajectoryInstance("nan", 1, {{"a", {NAN}, true}, {"b", {0.0}, false}}), InvalidInput);
}

TEST(TrajectoryInstance, DuplicateResponsesAreDistinctAtoms) {
    TrajectoryInstance inst("dup", 1, {{"a", {1.0}, true}, {"a2", {1.0}, true}, {"b", {0.0}, false}});
    EXPECT_NEAR(value(inst, ParamVector{0.0}), 2.0 / 3.0, 1e-15);
}

TEST(ParamVector, DimensionMismatchThrows) {
    EXPECT_THROW(value(three_line(), ParamVector{0.0, 1.0}), InvalidInput);
}
