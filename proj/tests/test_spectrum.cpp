#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hgm/io.hpp"
#include "hgm/spectrum.hpp"

using namespace hgm;

namespace {

const GroupPtr& G() {
    static GroupPtr g = octagon_group();
    return g;
}

std::set<GroupWord> words_of(const std::vector<SpectrumEntry>& es) {
    std::set<GroupWord> s;
    for (const auto& e : es) s.insert(e.cls.word);
    return s;
}

} // namespace

TEST(Enumerate, GeneratorsOnly) {
    auto es = enumerate_classes(*G(), 1);
    ASSERT_EQ(es.size(), 8u);
    const double T0 = 2 * std::acosh(1 + std::sqrt(2.0));
    for (const auto& e : es) {
        EXPECT_NEAR(e.period, T0, 1e-12);
        EXPECT_EQ(e.multiplicity, 8);
        EXPECT_TRUE(e.primitive);
    }
}

TEST(Enumerate, CountsUpToThree) {
    EXPECT_EQ(enumerate_classes(*G(), 2).size(), 32u);
    EXPECT_EQ(enumerate_classes(*G(), 3).size(), 136u);
}

TEST(Enumerate, NoDuplicatesAndSorted) {
    auto es = enumerate_classes(*G(), 5);
    EXPECT_EQ(words_of(es).size(), es.size());
    for (std::size_t i = 1; i < es.size(); ++i) EXPECT_LE(es[i - 1].period, es[i].period);
}

TEST(Enumerate, PrefixSuperset) {
    for (int k = 2; k <= 5; ++k) {
        auto lo = words_of(enumerate_classes(*G(), k - 1)), hi = words_of(enumerate_classes(*G(), k));
        for (const auto& w : lo) EXPECT_TRUE(hi.count(w)) << to_string(w);
        EXPECT_GT(hi.size(), lo.size());
    }
}

TEST(Enumerate, InverseClassesPresentAndMultiplicityEven) {
    auto es = enumerate_classes(*G(), 4);
    auto ws = words_of(es);
    for (const auto& e : es) {
        EXPECT_TRUE(ws.count(inverse_class(*G(), e.cls).word)) << to_string(e.cls.word);
        EXPECT_EQ(e.multiplicity % 2, 0);
    }
}

TEST(Enumerate, PeriodMatchesTrace) {
    for (const auto& e : enumerate_classes(*G(), 6)) {
        long double tr = std::fabs(evaluate_word<long double>(*G(), e.cls.word).trace());
        EXPECT_NEAR(e.period, static_cast<double>(2 * std::acosh(tr / 2)), 1e-10);
    }
}

TEST(Enumerate, PowersOnRequest) {
    auto with = enumerate_classes(*G(), 4, true), without = enumerate_classes(*G(), 4);
    EXPECT_GT(with.size(), without.size());
    EXPECT_TRUE(words_of(with).count(parse_word("aa")));
    EXPECT_FALSE(words_of(without).count(parse_word("aa")));
}

TEST(Enumerate, RejectsBadLength) {
    EXPECT_THROW(enumerate_classes(*G(), 0), Error);
    EXPECT_THROW(enumerate_classes(*G(), 13), Error);
}

TEST(Oracle, MatchesEnumerationUpToThree) {
    for (int k = 1; k <= 3; ++k) EXPECT_EQ(oracle_classes(*G(), k), words_of(enumerate_classes(*G(), k))) << "max_len " << k;
}

TEST(LengthSpectrum, GroupsEqualPeriods) {
    auto es = enumerate_classes(*G(), 4);
    auto ls = length_spectrum(es);
    int total = 0;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        total += ls[i].second;
        if (i) {
            EXPECT_GT(ls[i].first - ls[i - 1].first, 1e-8);
        }
    }
    EXPECT_EQ(total, static_cast<int>(es.size()));
    EXPECT_EQ(ls.front().second, 24); // systole
}

TEST(FormFactor, EmptySpectrumIsZero) {
    auto K = form_factor_diagonal({}, {0, 0.5, 1}, FormFactorWeight::unit);
    ASSERT_EQ(K.size(), 2u);
    for (const auto& [tau, v] : K) EXPECT_EQ(v, 0);
}

TEST(FormFactor, UnitWeightCountsAndRebins) {
    auto es = enumerate_classes(*G(), 4);
    const double T_H = es.back().period * (1 + 1e-9);
    std::vector<double> fine, coarse;
    for (int k = 0; k <= 20; ++k) fine.push_back(k / 20.0 * 1.0000001);
    for (int k = 0; k <= 20; k += 4) coarse.push_back(fine[static_cast<std::size_t>(k)]);
    auto Kf = form_factor_diagonal(es, fine, FormFactorWeight::unit, T_H);
    auto Kc = form_factor_diagonal(es, coarse, FormFactorWeight::unit, T_H);
    double total = 0;
    for (const auto& [tau, v] : Kf) total += v;
    EXPECT_EQ(total, static_cast<double>(es.size()));
    for (std::size_t c = 0; c < Kc.size(); ++c) {
        double sum = 0;
        for (std::size_t f = 4 * c; f < 4 * c + 4; ++f) sum += Kf[f].second;
        EXPECT_DOUBLE_EQ(Kc[c].second, sum);
    }
}

TEST(FormFactor, SinhWeightMonotoneInSpectrum) {
    // adding classes never lowers a bin
    std::vector<double> edges;
    for (int k = 0; k <= 10; ++k) edges.push_back(k * 2.0);
    auto K4 = form_factor_diagonal(enumerate_classes(*G(), 4), edges, FormFactorWeight::sinh);
    auto K5 = form_factor_diagonal(enumerate_classes(*G(), 5), edges, FormFactorWeight::sinh);
    for (std::size_t k = 0; k < K4.size(); ++k) {
        EXPECT_GE(K5[k].second, K4[k].second);
        EXPECT_GE(K4[k].second, 0);
    }
    EXPECT_GT(K4[1].second, 0);
}

TEST(FormFactor, BadEdgesRejected) {
    EXPECT_THROW(form_factor_diagonal({}, {1, 0}, FormFactorWeight::unit), Error);
    EXPECT_THROW(form_factor_diagonal({}, {0}, FormFactorWeight::unit), Error);
}

TEST(Catalog, ShortWordsHaveNoPairs) { EXPECT_TRUE(pair_catalog(G(), 4).empty()); }

TEST(Catalog, FixtureClassesBoundsAndSymmetry) {
    auto fs = load_fixtures(std::string(HGM_FIXTURE_DIR) + "/partners.json");
    std::vector<ConjClass> cs;
    int single = 0, other = 0;
    for (const auto& f : fs) {
        if (f.topology == Topology::single_antiparallel && single < 6) ++single, cs.push_back(f.cls);
        if (f.topology == Topology::ppi && other < 3) ++other, cs.push_back(f.cls);
    }
    auto cat = pair_catalog(G(), cs);
    ASSERT_FALSE(cat.empty());
    std::set<ConjClass> expected_a(cs.begin(), cs.end());
    for (const auto& e : cat) {
        EXPECT_TRUE(e.bound_report.ok());
        EXPECT_TRUE(expected_a.count(e.class_a));
        EXPECT_NE(e.class_a, e.class_b);
    }
    // Running the catalog from the partner leads back to the original or to
    // its time reversal, unless the conditions refuse the back construction.
    int resolved = 0;
    for (const auto& e : cat) {
        auto back = pair_catalog(G(), std::vector<ConjClass>{e.class_b});
        bool found = false;
        for (const auto& b : back) {
            if (b.topology != e.topology) continue;
            if (b.class_b == e.class_a || b.class_b == inverse_class(*G(), e.class_a)) found = true;
        }
        resolved += found;
        if (e.topology == Topology::single_antiparallel) {
            EXPECT_TRUE(found) << to_string(e.class_a.word);
        }
    }
    EXPECT_GE(resolved, static_cast<int>(cat.size()) * 7 / 10);
}

TEST(Catalog, ThreadCountDoesNotChangeOutput) {
    auto fs = load_fixtures(std::string(HGM_FIXTURE_DIR) + "/partners.json");
    std::vector<ConjClass> cs;
    for (std::size_t k = 0; k < 4; ++k) cs.push_back(fs[k].cls);
    CatalogOptions one, three;
    three.jobs = 3;
    auto a = pair_catalog(G(), cs, one), b = pair_catalog(G(), cs, three);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].class_a, b[k].class_a);
        EXPECT_EQ(a[k].class_b, b[k].class_b);
        EXPECT_EQ(a[k].action_diff, b[k].action_diff);
    }
}
