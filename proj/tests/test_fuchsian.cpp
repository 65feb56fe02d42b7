#include <gtest/gtest.h>

#include <random>

#include "hgm/fuchsian.hpp"

using namespace hgm;

namespace {

const SurfaceGroup& G() {
    static GroupPtr g = octagon_group();
    return *g;
}

Moebiusd random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    return d_(4 * M_PI * U(rng)) * a_(3 * U(rng)) * d_(4 * M_PI * U(rng));
}

GroupWord random_word(std::mt19937_64& rng, int len) {
    GroupWord w;
    for (int i = 0; i < len; ++i) w.letters.push_back(static_cast<Letter>(rng() % kNumLetters));
    return w;
}

} // namespace

TEST(Octagon, BoostAndGenerators) {
    const double r2 = std::sqrt(2.0);
    EXPECT_NEAR((1 + r2) * (1 + r2) - (2 + 2 * r2), 1.0, 1e-14);
    for (int l = 0; l < kNumLetters; ++l) {
        EXPECT_NEAR(G().gen(l).trace(), 2 * (1 + r2), 1e-12);
        EXPECT_EQ(classify(G().gen(l)), ElementClass::hyperbolic);
        EXPECT_NEAR(translation_length(G().gen(l).trace()), 2 * std::acosh(1 + r2), 1e-12);
    }
}

TEST(Octagon, RelatorAndRotations) {
    EXPECT_EQ(to_string(G().relator), "aBcDAbCd");
    EXPECT_LT(G().relator_residual, 1e-9);
    for (std::size_t k = 0; k < G().relator.size(); ++k) {
        EXPECT_LT(evaluate_word(G(), rotate(G().relator, k)).max_abs_diff(Moebiusd{}), 1e-9);
        EXPECT_LT(evaluate_word(G(), rotate(inverse(G().relator), k)).max_abs_diff(Moebiusd{}), 1e-9);
    }
}

TEST(Words, EvaluateBasics) {
    EXPECT_LT(evaluate_word(G(), GroupWord{}).max_abs_diff(Moebiusd{}), 1e-15);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        GroupWord w = random_word(rng, 1 + static_cast<int>(rng() % 4));
        EXPECT_LT(evaluate_word(G(), w * inverse(w)).max_abs_diff(Moebiusd{}), 1e-10);
    }
}

TEST(Words, ParseAndPrint) {
    GroupWord w = parse_word("aBcD");
    EXPECT_EQ(to_signed(w), (std::vector<int>{1, -2, 3, -4}));
    EXPECT_EQ(parse_word("1,-2,3,-4"), w);
    EXPECT_EQ(to_string(from_signed({-1, 2})), "Ab");
    EXPECT_THROW(parse_word("axe"), Error);
    EXPECT_THROW(parse_word("5"), Error);
}

TEST(Words, ReduceWord) {
    EXPECT_EQ(reduce_word(G(), parse_word("aAb")), parse_word("b"));
    EXPECT_TRUE(reduce_word(G(), G().relator).empty());
    GroupWord prefix(std::vector<Letter>(G().relator.letters.begin(), G().relator.letters.begin() + 5));
    GroupWord suffix(std::vector<Letter>(G().relator.letters.begin() + 5, G().relator.letters.end()));
    GroupWord r = reduce_word(G(), prefix);
    EXPECT_EQ(r, inverse(suffix));
    EXPECT_LT(evaluate_word(G(), r).max_abs_diff(evaluate_word(G(), prefix)), 1e-10);
    // reductions never change the element
    std::mt19937_64 rng(4);
    for (int i = 0; i < 500; ++i) {
        GroupWord w = random_word(rng, 8);
        auto x = evaluate_word<long double>(G(), w);
        auto y = evaluate_word<long double>(G(), reduce_word(G(), w));
        EXPECT_LT(static_cast<double>(x.max_abs_diff(y) / std::max(1.0L, x.frob())), 1e-9);
    }
}

TEST(Octagon, Sigma0) {
    const double s8 = G().sigma0;
    EXPECT_GT(s8, 0.1);
    EXPECT_NEAR(s8, 1.9455634652892975, 1e-9); // regression pin
    double prev = std::numeric_limits<double>::infinity();
    for (int L = 4; L <= 8; ++L) {
        double s = sigma0_estimate(G(), L);
        EXPECT_LE(s, prev);
        prev = s;
    }
    // at g = e the displacement of gamma_0 is at least its axis displacement T/sqrt(2)
    double T0 = translation_length(G().gen(0).trace());
    EXPECT_GE(group_distance(G().gen(0), Moebiusd{}), T0 / std::sqrt(2.0) - 1e-12);
    EXPECT_GE(T0 / std::sqrt(2.0), s8);
}

TEST(Octagon, Sigma0LowerBoundsCachedDisplacements) {
    std::mt19937_64 rng(2);
    std::vector<Moebiusd> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(random_point(rng));
    const double bound = G().sigma0 * (1 - 1e-6);
    for (std::size_t k = 1; k < G().ball.size(); ++k) {
        for (const auto& g : pts) ASSERT_GT(group_distance(G().ball[k].m * g, g), bound);
    }
}

TEST(Octagon, RingIsComplete) {
    GroupOptions opt;
    opt.ball_radius = 10;
    auto big = octagon_group(opt);
    EXPECT_EQ(big->ring_size, G().ring_size);
    EXPECT_GT(G().ring_size, 200u);
}

TEST(Identify, Examples) {
    Moebiusd g = c_(0.2) * a_(0.5) * d_(1.0);
    auto w0 = identify(G(), g, g, 1e-6);
    ASSERT_TRUE(w0.has_value());
    EXPECT_TRUE(w0->empty());
    auto w2 = identify(G(), G().gen(letter(2, false)) * g, g, 1e-6);
    ASSERT_TRUE(w2.has_value());
    EXPECT_EQ(to_string(*w2), "c");
    EXPECT_FALSE(identify(G(), g * a_(1.0), g, 0.1).has_value());
    EXPECT_THROW(identify(G(), g * a_(0.15), g, 0.1), Error);
}

TEST(Identify, RoundTripOverBall) {
    std::mt19937_64 rng(3);
    std::vector<Moebiusd> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(random_point(rng));
    for (std::size_t k = 0; k < G().ball.size(); ++k) {
        const auto& e = G().ball[k];
        for (const auto& g : pts) {
            auto w = identify(G(), e.m * g, g, 1e-6);
            ASSERT_TRUE(w.has_value());
            auto m = evaluate_word<long double>(G(), *w).cast<double>();
            ASSERT_LT(m.max_abs_diff(e.m), 1e-8 * std::max(1.0, e.m.frob()));
        }
    }
}

TEST(Identify, PerturbedElement) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        const auto& e = G().ball[rng() % G().ball.size()];
        Moebiusd g = random_point(rng);
        auto w = identify(G(), e.m * g * a_(1e-13), g, 1e-6);
        ASSERT_TRUE(w.has_value());
        EXPECT_LT(evaluate_word<long double>(G(), *w).cast<double>().max_abs_diff(e.m), 1e-8 * e.m.frob());
    }
}

TEST(QuotientDistance, Basics) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        Moebiusd g = random_point(rng), h = random_point(rng);
        EXPECT_LT(quotient_distance(G(), g, g), 1e-12);
        const auto& e = G().ball[rng() % G().ball.size()];
        EXPECT_LT(quotient_distance(G(), g, e.m * g), 1e-7);
        EXPECT_NEAR(quotient_distance(G(), g, h), quotient_distance(G(), h, g), 1e-9);
        EXPECT_LE(quotient_distance(G(), g, h), group_distance(g, h) + 1e-12);
    }
    auto q = quotient_distance_ex(G(), Moebiusd{}, a_(0.5));
    EXPECT_TRUE(q.exact);
    EXPECT_NEAR(q.value, 0.5 / std::sqrt(2.0), 1e-12);
}
