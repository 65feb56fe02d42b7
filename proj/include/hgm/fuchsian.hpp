#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "hgm/moebius.hpp"
#include "hgm/word.hpp"

namespace hgm {

struct BallEntry {
    Moebiusd m;
    GroupWord word;
    double disp{0}; // hyperbolic displacement of i
};

// Cocompact Fuchsian group given by side pairings of a Dirichlet domain
// centered at i. Immutable after construction.
struct SurfaceGroup {
    std::array<Moebiusd, kNumLetters> gens;
    std::array<Moebius<long double>, kNumLetters> gens_ext;
    GroupWord relator;
    double relator_residual{0};
    double sigma0{0};
    int sigma0_len{8};
    int ball_radius{8};
    double ring_radius{7.0};
    double circumradius{0};
    std::vector<BallEntry> ball; // sorted by displacement, ball[0] = e
    std::vector<Moebius<long double>> ring_ext; // ring elements in extended precision
    std::size_t ring_size{0};    // ball[0..ring_size) have disp <= ring_radius

    const Moebiusd& gen(Letter l) const { return gens[static_cast<std::size_t>(l)]; }
};

using GroupPtr = std::shared_ptr<const SurfaceGroup>;

template <class Real>
const Moebius<Real>& gen_as(const SurfaceGroup& grp, Letter l) {
    if constexpr (std::is_same_v<Real, double>) return grp.gens[static_cast<std::size_t>(l)];
    else return grp.gens_ext[static_cast<std::size_t>(l)];
}

template <class Real>
const Moebius<Real>& ring_as(const SurfaceGroup& grp, std::size_t k) {
    if constexpr (std::is_same_v<Real, double>) return grp.ball[k].m;
    else return grp.ring_ext[k];
}

template <class Real = double>
Moebius<Real> evaluate_word(const SurfaceGroup& grp, const GroupWord& w) {
    Moebius<Real> m;
    for (Letter l : w.letters) {
        if constexpr (std::is_same_v<Real, double> || std::is_same_v<Real, long double>) m = m * gen_as<Real>(grp, l);
        else m = m * grp.gens_ext[static_cast<std::size_t>(l)].template cast<Real>();
    }
    return m;
}

namespace detail {

inline std::vector<GroupWord> relator_rotations(const GroupWord& rel) {
    std::vector<GroupWord> out;
    GroupWord inv = inverse(rel);
    for (std::size_t k = 0; k < rel.size(); ++k) {
        out.push_back(rotate(rel, k));
        out.push_back(rotate(inv, k));
    }
    return out;
}

inline double cosh_dist_i(const Moebiusd& m) { return m.frob2() / 2; }

} // namespace detail

// Free reduction plus Dehn reduction with relator pieces longer than half.
inline GroupWord reduce_word(const SurfaceGroup& grp, const GroupWord& w) {
    const auto rots = detail::relator_rotations(grp.relator);
    const std::size_t n = grp.relator.size();
    const std::size_t half = n / 2;
    GroupWord cur = free_reduce(w);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < cur.size() && !changed; ++i) {
            std::size_t best_len = 0;
            const GroupWord* best = nullptr;
            for (const auto& r : rots) {
                std::size_t m = 0;
                while (m < n && i + m < cur.size() && cur.letters[i + m] == r.letters[m]) ++m;
                if (m > half && m > best_len) { best_len = m; best = &r; }
            }
            if (best) {
                GroupWord rest(std::vector<Letter>(best->letters.begin() + static_cast<long>(best_len), best->letters.end()));
                GroupWord rep = inverse(rest);
                GroupWord next;
                next.letters.assign(cur.letters.begin(), cur.letters.begin() + static_cast<long>(i));
                next.letters.insert(next.letters.end(), rep.letters.begin(), rep.letters.end());
                next.letters.insert(next.letters.end(), cur.letters.begin() + static_cast<long>(i + best_len), cur.letters.end());
                cur = free_reduce(next);
                changed = true;
            }
        }
    }
    return cur;
}

template <class Real = double>
struct Reduction {
    Moebius<Real> rep;           // = (product of applied letters) * input
    std::vector<Letter> applied; // in application order
};

// Greedy Dirichlet reduction: left-multiply by generators while the image of
// i gets closer to i. Ends with rep * i in the closed Dirichlet domain.
template <class Real = double>
Reduction<Real> reduce_point(const SurfaceGroup& grp, const Moebius<Real>& g, bool track = true) {
    Reduction<Real> r{g, {}};
    for (int iter = 0; iter < 100000; ++iter) {
        Real cur = r.rep.frob2();
        Real best = cur * (1 - Real(1e-13));
        int bl = -1;
        for (int l = 0; l < kNumLetters; ++l) {
            Real f = (gen_as<Real>(grp, l) * r.rep).frob2();
            if (f < best) { best = f; bl = l; }
        }
        if (bl < 0) break;
        r.rep = gen_as<Real>(grp, bl) * r.rep;
        if (track) r.applied.push_back(bl);
    }
    return r;
}

// Word w with (product w) * rep = input, from the letters applied.
inline GroupWord undo_word(const std::vector<Letter>& applied) {
    GroupWord w;
    w.letters.reserve(applied.size());
    for (Letter l : applied) w.letters.push_back(inv_letter(l));
    return w;
}

template <class Real>
const Moebius<Real>& ring_as(const SurfaceGroup& grp, std::size_t k);

template <class Real = double>
struct LiftMatch {
    Moebius<Real> gred, hred; // reduced representatives
    std::vector<Letter> g_applied, h_applied;
    std::size_t ring_index{0}; // delta = ball[ring_index]
    Real dist{0};              // d_G(gred, delta * hred) = d_G(g, gamma h)
    bool exact{true};

    Moebius<Real> delta(const SurfaceGroup& grp) const { return ring_as<Real>(grp, ring_index); }
};

// Nearest lift of h to g in the quotient: minimizes d_G(g, gamma h).
template <class Real = double>
LiftMatch<Real> nearest_lift(const SurfaceGroup& grp, const Moebius<Real>& g, const Moebius<Real>& h, bool track = true) {
    LiftMatch<Real> lm;
    auto rg = reduce_point<Real>(grp, g, track);
    auto rh = reduce_point<Real>(grp, h, track);
    lm.gred = rg.rep;
    lm.hred = rh.rep;
    lm.g_applied = std::move(rg.applied);
    lm.h_applied = std::move(rh.applied);
    auto [px, py] = lm.gred.act_i();
    auto [qx, qy] = lm.hred.act_i();
    lm.dist = group_distance(lm.gred, lm.hred);
    lm.ring_index = 0;
    Real cut = std::cosh(2 * lm.dist);
    for (std::size_t k = 1; k < grp.ring_size; ++k) {
        const auto& dm = grp.ball[k].m;
        auto [x, y] = dm.act(static_cast<double>(qx), static_cast<double>(qy));
        double ch = 1 + ((px - x) * (px - x) + (py - y) * (py - y)) / (2 * py * y);
        // d_G >= d_H / 2, with slack for the double-precision prefilter
        if (ch > cut * (1 + 1e-9) + 1e-9) continue;
        Real dd = group_distance(lm.gred, ring_as<Real>(grp, k) * lm.hred);
        if (dd < lm.dist) {
            lm.dist = dd;
            lm.ring_index = k;
            cut = std::cosh(2 * lm.dist);
        }
    }
    lm.exact = 2 * static_cast<double>(lm.dist) + 2 * grp.circumradius <= grp.ring_radius;
    return lm;
}

struct QuotientDistance {
    double value{0};
    bool exact{true};
};

template <class Real = double>
QuotientDistance quotient_distance_ex(const SurfaceGroup& grp, const Moebius<Real>& g, const Moebius<Real>& h) {
    auto lm = nearest_lift<Real>(grp, g, h, false);
    return {static_cast<double>(lm.dist), lm.exact};
}

template <class Real = double>
double quotient_distance(const SurfaceGroup& grp, const Moebius<Real>& g, const Moebius<Real>& h) {
    return static_cast<double>(nearest_lift<Real>(grp, g, h, false).dist);
}

// gamma with gamma * h close to g, as a reduced word.
template <class Real>
GroupWord lift_word(const SurfaceGroup& grp, const LiftMatch<Real>& lm) {
    // g = Wg^{-1} gred, h = Wh^{-1} hred, gamma = Wg^{-1} delta Wh
    GroupWord w = undo_word(lm.g_applied);
    w = concat(w, grp.ball[lm.ring_index].word);
    GroupWord wh;
    wh.letters.assign(lm.h_applied.rbegin(), lm.h_applied.rend());
    w = concat(w, wh);
    return reduce_word(grp, w);
}

template <class Real = double>
std::optional<GroupWord> identify(const SurfaceGroup& grp, const Moebius<Real>& g, const Moebius<Real>& h, double tol) {
    if (!(tol < grp.sigma0 / 2)) fail(ErrorKind::Config, "identify tolerance must be below sigma0/2");
    auto lm = nearest_lift<Real>(grp, g, h);
    if (lm.dist < tol) return lift_word(grp, lm);
    if (lm.dist < 2 * tol) fail(ErrorKind::BallTooSmall, "nearest lift within [tol, 2 tol)");
    return std::nullopt;
}

// Word of a group element given numerically (identify(gamma, e)).
template <class Real = double>
GroupWord element_word(const SurfaceGroup& grp, const Moebius<Real>& gamma, double tol = 1e-6) {
    auto w = identify<Real>(grp, gamma, Moebius<Real>{}, tol);
    if (!w) fail(ErrorKind::IdentifyFailed, "matrix is not a group element within tolerance");
    return *w;
}

namespace detail {

inline std::vector<Moebiusd> sigma0_sample() {
    std::mt19937_64 rng(20260101);
    std::uniform_real_distribution<double> ang(0.0, 4 * M_PI);
    std::uniform_real_distribution<double> rad(0.0, 2.5);
    std::vector<Moebiusd> pts;
    pts.reserve(100);
    for (int i = 0; i < 100; ++i) {
        double t1 = ang(rng), r = rad(rng), t2 = ang(rng);
        pts.push_back(d_(t1) * a_(r) * d_(t2));
    }
    return pts;
}

} // namespace detail

// 0.9 times the least displacement d_G(gamma g, g) over nontrivial words of
// length <= max_len and a fixed sample of g.
inline double sigma0_estimate(const SurfaceGroup& grp, int max_len) {
    if (max_len < 1) fail(ErrorKind::Config, "max_len must be positive");
    const auto pts = detail::sigma0_sample();
    double best = std::numeric_limits<double>::infinity();
    std::vector<Moebiusd> stack(static_cast<std::size_t>(max_len) + 1);
    std::vector<Letter> word(static_cast<std::size_t>(max_len));
    // depth-first over freely reduced words
    auto visit = [&](auto&& self, int depth) -> void {
        if (depth == max_len) return;
        for (int l = 0; l < kNumLetters; ++l) {
            if (depth > 0 && word[static_cast<std::size_t>(depth - 1)] == inv_letter(l)) continue;
            word[static_cast<std::size_t>(depth)] = l;
            const Moebiusd& m = stack[static_cast<std::size_t>(depth + 1)] = stack[static_cast<std::size_t>(depth)] * grp.gens[static_cast<std::size_t>(l)];
            double tr = m.trace();
            // min_g d(gamma g, g) >= T/sqrt(2); identity elements have tr = 2
            double lower = tr > 2 ? translation_length(tr) / std::sqrt(2.0) : 0.0;
            if (lower < best) {
                for (const auto& g : pts) {
                    double dd = log_norm(g.inverse() * m * g);
                    if (dd > 1e-8 && dd < best) best = dd;
                }
            }
            self(self, depth + 1);
        }
    };
    stack[0] = Moebiusd{};
    visit(visit, 0);
    return 0.9 * best;
}

namespace detail {

inline std::array<std::int64_t, 4> matrix_key(const Moebiusd& m) {
    auto q = [](double x) { return static_cast<std::int64_t>(std::llround(x * 1e7)); };
    return {q(m.a), q(m.b), q(m.c), q(m.d)};
}

inline void build_ball(SurfaceGroup& grp) {
    const double cap = grp.ring_radius + grp.circumradius + 1.0;
    std::map<std::array<std::int64_t, 4>, std::size_t> seen;
    std::vector<BallEntry> all;
    all.push_back({Moebiusd{}, GroupWord{}, 0.0});
    seen[matrix_key(Moebiusd{})] = 0;
    std::size_t lo = 0;
    for (int len = 0; len < grp.ball_radius; ++len) {
        std::size_t hi = all.size();
        for (std::size_t k = lo; k < hi; ++k) {
            for (int l = 0; l < kNumLetters; ++l) {
                const auto& e = all[k];
                if (!e.word.empty() && e.word.letters.back() == inv_letter(l)) continue;
                Moebiusd m = e.m * grp.gens[static_cast<std::size_t>(l)];
                double disp = std::acosh(std::max(1.0, cosh_dist_i(m)));
                if (disp > cap) continue;
                auto key = matrix_key(m);
                if (seen.count(key)) continue;
                GroupWord w = e.word;
                w.letters.push_back(l);
                seen[key] = all.size();
                all.push_back({m, w, disp});
            }
        }
        lo = hi;
    }
    std::stable_sort(all.begin() + 1, all.end(), [](const BallEntry& x, const BallEntry& y) {
        if (x.disp != y.disp) return x.disp < y.disp;
        return x.word < y.word;
    });
    grp.ball = std::move(all);
    grp.ring_size = 0;
    while (grp.ring_size < grp.ball.size() && grp.ball[grp.ring_size].disp <= grp.ring_radius) ++grp.ring_size;
    grp.ring_ext.clear();
    for (std::size_t k = 0; k < grp.ring_size; ++k) grp.ring_ext.push_back(evaluate_word<long double>(grp, grp.ball[k].word));
}

} // namespace detail

struct GroupOptions {
    int ball_radius{8};
    double ring_radius{7.0};
    int sigma0_len{8};
};

// Finishes a group from its generators gamma_0..gamma_3 and relator.
inline GroupPtr finish_group(const std::array<Moebiusd, kNumGens>& g4, const GroupWord& relator, const GroupOptions& opt,
                             std::optional<double> sigma0 = std::nullopt) {
    auto grp = std::make_shared<SurfaceGroup>();
    for (int k = 0; k < kNumGens; ++k) {
        grp->gens[static_cast<std::size_t>(letter(k, false))] = g4[static_cast<std::size_t>(k)];
        grp->gens[static_cast<std::size_t>(letter(k, true))] = g4[static_cast<std::size_t>(k)].inverse();
    }
    for (int l = 0; l < kNumLetters; ++l) {
        if (classify(grp->gens[static_cast<std::size_t>(l)]) != ElementClass::hyperbolic)
            fail(ErrorKind::ConstructionFailed, "generator is not hyperbolic");
    }
    grp->relator = relator;
    grp->relator_residual = evaluate_word(*grp, relator).max_abs_diff(Moebiusd{});
    if (grp->relator_residual > 1e-9) fail(ErrorKind::ConstructionFailed, "relator residual too large");
    grp->ball_radius = opt.ball_radius;
    grp->ring_radius = opt.ring_radius;
    grp->sigma0_len = opt.sigma0_len;
    for (int l = 0; l < kNumLetters; ++l)
        grp->gens_ext[static_cast<std::size_t>(l)] = grp->gens[static_cast<std::size_t>(l)].cast<long double>();
    // regular octagon with angles pi/4: cosh R = cosh(inradius) * cot(pi/8)
    double in = 0.5 * translation_length(grp->gens[0].trace());
    grp->circumradius = std::acosh(std::cosh(in) / std::tan(M_PI / kNumLetters));
    detail::build_ball(*grp);
    grp->sigma0 = sigma0 ? *sigma0 : sigma0_estimate(*grp, opt.sigma0_len);
    return grp;
}

inline GroupPtr octagon_group(const GroupOptions& opt = {}) {
    const double r2 = std::sqrt(2.0);
    Moebiusd beta;
    beta.a = 1 + r2;
    beta.b = std::sqrt(2 + 2 * r2);
    beta.c = beta.b;
    beta.d = 1 + r2;
    beta.normalize();
    std::array<Moebiusd, kNumGens> g4;
    for (int k = 0; k < kNumGens; ++k) {
        Moebiusd r = d_(k * M_PI / 4);
        g4[static_cast<std::size_t>(k)] = r * beta * r.inverse();
    }
    GroupWord rel = parse_word("aBcDAbCd");
    auto grp = finish_group(g4, rel, opt);
    auto* mut = const_cast<SurfaceGroup*>(grp.get());
    for (int l = 0; l < kNumLetters; ++l) {
        // extended-precision copies built from the closed form
        long double R2 = std::sqrt(2.0L);
        Moebius<long double> B = Moebius<long double>::from(1 + R2, std::sqrt(2 + 2 * R2), std::sqrt(2 + 2 * R2), 1 + R2);
        Moebius<long double> r = d_<long double>(gen_of(l) * 3.14159265358979323846264338327950288L / 4);
        Moebius<long double> g = r * B * r.inverse();
        mut->gens_ext[static_cast<std::size_t>(l)] = is_inv(l) ? g.inverse() : g;
    }
    return grp;
}

inline bool mutually_inverse_words(const GroupWord& x, const GroupWord& y) {
    return least_rotation(cyclic_reduce(inverse(x))) == least_rotation(cyclic_reduce(y));
}

} // namespace hgm
