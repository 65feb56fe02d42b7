#include <gtest/gtest.h>

#include <random>

#include "hgm/flow.hpp"

using namespace hgm;

namespace {

const GroupPtr& G() {
    static GroupPtr g = octagon_group();
    return g;
}

QuotientPoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    Moebiusd m = d_(4 * M_PI * U(rng)) * a_(3 * U(rng)) * d_(4 * M_PI * U(rng));
    return make_point(G(), m.cast<Real80>());
}

PeriodicOrbit orbit(const char* w) { return orbit_from_class(G(), canonical_class(*G(), parse_word(w))); }

} // namespace

TEST(Flow, ZeroAndReversalInvolution) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        QuotientPoint x = random_point(rng);
        EXPECT_LT(quotient_distance(flow(x, 0), x), 1e-12);
        EXPECT_LT(quotient_distance(time_reverse(time_reverse(x)), x), 1e-12);
    }
}

TEST(Flow, Additivity) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 1000; ++i) {
        QuotientPoint x = random_point(rng);
        double S = 40 * U(rng), f = U(rng);
        double t = S * f * (U(rng) < 0.5 ? 1 : -1), u = S * (1 - f) * (U(rng) < 0.5 ? 1 : -1);
        double err = quotient_distance(flow(flow(x, t), u), flow(x, t + u));
        // rounding noise is amplified by e^{|t|+|u|} along the unstable direction
        double tol = S <= 20 ? 1e-10 : 1e-18 * std::exp(S);
        ASSERT_LT(err, tol) << "t=" << t << " u=" << u;
    }
}

TEST(Flow, TimeReversalIntertwinesFlow) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-5, 5);
    for (int i = 0; i < 100; ++i) {
        QuotientPoint x = random_point(rng);
        for (double t : {0.7, U(rng)}) {
            EXPECT_LT(quotient_distance(flow(time_reverse(x), t), time_reverse(flow(x, -t))), 1e-9);
        }
    }
}

TEST(Section, Examples) {
    std::mt19937_64 rng(4);
    QuotientPoint x = random_point(rng);
    auto z0 = section_coords(x, x, SectionVariant::P, 0.05);
    ASSERT_TRUE(z0.has_value());
    EXPECT_NEAR(z0->u, 0, 1e-12);
    EXPECT_NEAR(z0->s, 0, 1e-12);
    QuotientPoint z = right_mul(x, c_<Real80>(0.01L) * b_<Real80>(0.02L));
    auto sc = section_coords(x, z, SectionVariant::P, 0.05);
    ASSERT_TRUE(sc.has_value());
    EXPECT_NEAR(sc->u, 0.01, 1e-12);
    EXPECT_NEAR(sc->s, 0.02, 1e-12);
    EXPECT_LT(quotient_distance(section_point(x, SectionVariant::P, sc->u, sc->s), z), 1e-9);
    // P' variant
    QuotientPoint zp = right_mul(x, b_<Real80>(-0.03L) * c_<Real80>(0.04L));
    auto sp = section_coords(x, zp, SectionVariant::Pprime, 0.05);
    ASSERT_TRUE(sp.has_value());
    EXPECT_NEAR(sp->u, 0.04, 1e-12);
    EXPECT_NEAR(sp->s, -0.03, 1e-12);
    // out of radius, off section, radius guard
    EXPECT_FALSE(section_coords(x, z, SectionVariant::P, 0.015).has_value());
    EXPECT_FALSE(section_coords(x, flow(z, 0.01), SectionVariant::P, 0.05).has_value());
    auto probe = section_probe(x, flow(z, 0.01), SectionVariant::P);
    EXPECT_NEAR(probe.residual_time, 0.01, 1e-12);
    EXPECT_THROW(section_coords(x, z, SectionVariant::P, G()->sigma0 / 4), Error);
}

TEST(Section, LiftIndependence) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        QuotientPoint x = random_point(rng);
        QuotientPoint z = right_mul(x, c_<Real80>(0.03L) * b_<Real80>(-0.02L));
        const auto& e = G()->ball[rng() % G()->ball.size()];
        QuotientPoint z2{e.m.cast<Real80>() * z.rep, G()};
        auto a = section_coords(x, z, SectionVariant::P, 0.1);
        auto b = section_coords(x, z2, SectionVariant::P, 0.1);
        ASSERT_TRUE(a && b);
        EXPECT_NEAR(a->u, b->u, 1e-9);
        EXPECT_NEAR(a->s, b->s, 1e-9);
    }
}

TEST(Section, UniqueAdmissibleLift) {
    std::mt19937_64 rng(6);
    const double r = 0.4; // below sigma0 / 4
    for (int i = 0; i < 20; ++i) {
        QuotientPoint x = random_point(rng);
        QuotientPoint z = right_mul(x, c_<Real80>(0.3L) * b_<Real80>(-0.35L));
        int admissible = 0;
        for (const auto& e : G()->ball) {
            Moebiusx m = x.rep.inverse() * e.m.cast<Real80>() * z.rep;
            if (std::abs(m.a) < 1e-3) continue;
            auto d = decompose_cub(m);
            if (std::abs(d.u) < r && std::abs(d.s) < r && std::abs(d.t) < 1e-9) ++admissible;
        }
        EXPECT_EQ(admissible, 1);
    }
}

TEST(Orbit, ShortestClass) {
    PeriodicOrbit o = orbit("a");
    EXPECT_NEAR(o.period, 2 * std::acosh(1 + std::sqrt(2.0)), 1e-12);
    EXPECT_LT(quotient_distance(flow(o.base, o.period), o.base), 1e-9);
    EXPECT_GT(quotient_distance(flow(o.base, o.period / 2), o.base), 0.1);
    EXPECT_THROW(orbit("abab"), Error);
}

TEST(Orbit, PeriodAndReturnOverWords) {
    std::mt19937_64 rng(7);
    int tested = 0;
    while (tested < 300) {
        GroupWord w;
        int len = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < len; ++k) w.letters.push_back(static_cast<Letter>(rng() % kNumLetters));
        if (cyclic_reduce_word(*G(), w).empty()) continue;
        ConjClass c = canonical_class(*G(), w);
        if (!is_primitive(c)) continue;
        ++tested;
        PeriodicOrbit o = orbit_from_class(G(), c);
        ASSERT_NEAR(o.period, 2 * std::acosh(c.trace / 2), 1e-10);
        ASSERT_LT(quotient_distance(flow(o.base, o.period), o.base), 1e-9);
        // the stored word generates the return of the base point
        auto m = evaluate_word<Real80>(*G(), o.word);
        ASSERT_LT(static_cast<double>(group_distance(m * o.conjugator, o.conjugator * a_<Real80>(o.period_ext))), 1e-9);
    }
}

TEST(Orbit, ConjugateWordsGiveSameOrbit) {
    PeriodicOrbit o1 = orbit_from_word(G(), parse_word("abAc"));
    PeriodicOrbit o2 = orbit_from_word(G(), parse_word("dbAcaD"));
    EXPECT_EQ(o1.cls, o2.cls);
    EXPECT_NEAR(o1.period, o2.period, 1e-12);
    auto t = locate_on_orbit(o1, o2.base);
    ASSERT_TRUE(t.has_value());
    for (double s = 0; s < o1.period; s += 0.1) EXPECT_LT(quotient_distance(o1.at(*t + s), o2.at(s)), 1e-9);
}

TEST(Orbit, InverseClassAndReversal) {
    PeriodicOrbit o = orbit("abAcd");
    PeriodicOrbit r = orbit_from_class(G(), inverse_class(*G(), o.cls));
    EXPECT_NEAR(o.period, r.period, 1e-12);
    PeriodicOrbit rv = reversed(o);
    EXPECT_EQ(rv.cls, r.cls);
    for (double s = 0; s < o.period; s += 0.37) {
        // points of the reversed orbit lie on the orbit of the inverse class
        ASSERT_TRUE(locate_on_orbit(r, time_reverse(o.at(s))).has_value());
        EXPECT_LT(quotient_distance(rv.at(s), time_reverse(o.at(-s))), 1e-9);
    }
}

TEST(Orbit, ShiftKeepsOrbit) {
    PeriodicOrbit o = orbit("abcD");
    PeriodicOrbit s = shift(o, 1.25L);
    EXPECT_LT(quotient_distance(s.base, o.at(1.25L)), 1e-9);
    EXPECT_LT(quotient_distance(flow(s.base, s.period), s.base), 1e-9);
    auto m = evaluate_word<Real80>(*G(), s.word);
    EXPECT_LT(static_cast<double>(group_distance(m * s.conjugator, s.conjugator * a_<Real80>(s.period_ext))), 1e-9);
}

TEST(Crossings, SimpleGeodesicHasNone) {
    EXPECT_TRUE(detect_self_crossings(orbit("a")).empty());
    EXPECT_THROW(detect_self_crossings(orbit("a"), 0.1), Error);
}

TEST(Crossings, AngleBoundAndRelation) {
    int total = 0;
    for (const char* w : {"abAc", "abcDAbdC", "aBcdAbCD", "abacbdcDA", "aabAAc"}) {
        PeriodicOrbit o = orbit(w);
        for (const auto& c : detect_self_crossings(o)) {
            ++total;
            double cc = std::cos(c.theta / 2);
            EXPECT_LT(std::exp(-c.L), cc * cc);
            EXPECT_GT(c.theta, 0);
            EXPECT_LT(c.theta, M_PI);
            QuotientPoint lhs = o.at(c.tau + c.L);
            QuotientPoint rhs = right_mul(o.at(c.tau), d_<Real80>(c.sign * static_cast<Real80>(c.theta)));
            EXPECT_LT(quotient_distance(lhs, rhs), 1e-8);
        }
    }
    EXPECT_GT(total, 10);
}

TEST(Crossings, TimeReversalSymmetry) {
    for (const char* w : {"abAc", "abcDAbdC", "abacbdcDA"}) {
        PeriodicOrbit o = orbit(w);
        PeriodicOrbit r = reversed(o);
        auto a = detect_self_crossings(o);
        auto b = detect_self_crossings(r);
        ASSERT_EQ(a.size(), b.size()) << w;
        for (const auto& c : a) {
            double tau = std::fmod(2 * o.period - c.tau - c.L, o.period);
            bool found = false;
            for (const auto& d : b)
                if (circ_gap(d.tau, tau, o.period) < 1e-6 && std::abs(d.L - c.L) < 1e-6 && std::abs(d.theta - c.theta) < 1e-6)
                    found = true;
            EXPECT_TRUE(found) << w << " tau=" << c.tau;
        }
    }
}

TEST(Encounters, NoneBelowScale) {
    EXPECT_TRUE(detect_encounters(orbit("aabAAc"), 5e-3).empty());
    EXPECT_THROW(detect_encounters(orbit("a"), G()->sigma0 / 8), Error);
}

TEST(Encounters, AntiparallelInReversedSegments) {
    PeriodicOrbit o = orbit("aabAAc");
    auto es = detect_encounters(o, 0.24);
    int anti = 0;
    for (const auto& e : es) {
        ASSERT_EQ(e.entries.size(), 2u);
        EXPECT_LT(e.t1(), e.t2());
        EXPECT_LT(std::abs(e.u()), 0.24);
        EXPECT_LT(std::abs(e.s()), 0.24);
        EXPECT_NEAR(std::abs(e.u()), std::abs(e.s()), 1e-9);
        QuotientPoint x = o.at(e.t1()), y = o.at(e.t2());
        QuotientPoint z = e.kind == EncounterKind::parallel ? y : time_reverse(y);
        auto sc = section_coords(x, z, SectionVariant::P, 0.24);
        ASSERT_TRUE(sc.has_value());
        EXPECT_NEAR(sc->u, e.u(), 1e-9);
        if (e.kind == EncounterKind::antiparallel) ++anti;
    }
    EXPECT_GE(anti, 1);
}
