#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "hgm/fuchsian.hpp"

namespace hgm {

// Conjugacy class of a hyperbolic element, stored as its canonical cyclic
// word. A class and its inverse are distinct.
struct ConjClass {
    GroupWord word;
    double trace{0};
    double period{0};

    friend bool operator==(const ConjClass& x, const ConjClass& y) { return x.word == y.word; }
    friend auto operator<=>(const ConjClass& x, const ConjClass& y) { return x.word <=> y.word; }
};

namespace detail {

struct Crossing1 {
    long double pos;
    Letter l; // forward letter: tile delta -> delta * gen(l)
};

// Marches along the ray of angle alpha in the frame of p (axis = imaginary
// axis) from the tile containing the frame origin. dir = +1 forward, -1
// backward; stops once |pos| exceeds limit.
inline std::vector<Crossing1> march(const SurfaceGroup& grp, const Moebius<long double>& p, long double alpha, int dir,
                                    long double limit) {
    using R = long double;
    const R ca = std::cos(alpha), sa = std::sin(alpha);
    Moebius<R> m;
    m.a = std::sqrt(sa);
    m.b = ca / std::sqrt(sa);
    m.c = 0;
    m.d = 1 / std::sqrt(sa);
    auto red = reduce_point<R>(grp, p * m, false);
    Moebius<R> Q = m * red.rep.inverse(); // p^{-1} delta, in the moving frame
    std::vector<Crossing1> out;
    R pos = 0;
    for (int step = 0; step < 200000; ++step) {
        auto [x, y] = Q.act_i();
        R best = dir > 0 ? std::numeric_limits<R>::infinity() : R(0);
        int bl = -1;
        for (int l = 0; l < kNumLetters; ++l) {
            Moebius<R> Qn = Q * gen_as<R>(grp, l);
            auto [xn, yn] = Qn.act_i();
            // g(E) = a2 E^2 - 2 a1 E + a0 > 0 iff the curve point at E is
            // closer to the neighbouring tile center
            R a2 = 1 / y - 1 / yn;
            R a1 = ca * (x / y - xn / yn);
            R a0 = (x * x + y * y) / y - (xn * xn + yn * yn) / yn;
            R roots[2];
            int nr = 0;
            if (std::abs(a2) < R(1e-300)) {
                if (a1 != 0) roots[nr++] = a0 / (2 * a1);
            } else {
                R disc = a1 * a1 - a2 * a0;
                if (disc < 0) continue;
                R sq = std::sqrt(disc);
                R q = a1 + (a1 >= 0 ? sq : -sq);
                if (q != 0) {
                    roots[nr++] = q / a2;
                    roots[nr++] = a0 / q;
                } else {
                    roots[nr++] = a1 / a2;
                }
            }
            for (int k = 0; k < nr; ++k) {
                R E = roots[k];
                R slope = a2 * E - a1;
                if (dir > 0) {
                    if (!(E > 1 + R(1e-15)) || slope <= 0) continue;
                    if (E < best) { best = E; bl = l; }
                } else {
                    if (!(E > 0 && E < 1 - R(1e-15)) || slope >= 0) continue;
                    if (E > best) { best = E; bl = l; }
                }
            }
        }
        if (bl < 0) fail(ErrorKind::ConstructionFailed, "cutting sequence: no exit found");
        R shift = std::log(best);
        pos += shift;
        out.push_back({pos, dir > 0 ? bl : inv_letter(bl)});
        Q = a_<R>(-shift) * (Q * gen_as<R>(grp, bl));
        if (std::abs(pos) > limit) break;
    }
    return out;
}

// Tile sequence crossed by an equidistant curve of the axis over one period.
// The curve is invariant under gamma, so the sequence is a cyclic word
// conjugate to gamma that depends only on the closed geodesic and the side
// (+1 left of the oriented axis, -1 right). Marching runs half a period in
// each direction from the base point to keep the unstable error growth at
// e^{T/2}.
inline GroupWord cutting_word(const SurfaceGroup& grp, const AxisNormalForm<long double>& nf, int side) {
    const long double eta = 1e-6L;
    const long double alpha = 3.14159265358979323846264338327950288L / 2 + side * eta;
    const long double T = nf.T;
    const long double gap = 1e-4L;
    auto fw = march(grp, nf.p, alpha, +1, T / 2 + 8);
    auto bw = march(grp, nf.p, alpha, -1, T / 2 + 1);
    std::vector<Crossing1> all(bw.rbegin(), bw.rend());
    all.insert(all.end(), fw.begin(), fw.end());
    // start right after a gap below -T/2, so the period cut cannot split a
    // vertex pass (a cluster of crossings at nearly equal positions)
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (all[i].pos >= -T / 2 && all[i].pos - all[i - 1].pos > gap) { i0 = i; break; }
    }
    if (i0 == 0) fail(ErrorKind::ConstructionFailed, "cutting sequence: no gap between crossings");
    const long double start = all[i0].pos;
    GroupWord w;
    std::size_t k = i0;
    for (; k < all.size() && all[k].pos < start + T - gap / 3; ++k) w.letters.push_back(all[k].l);
    if (k >= all.size() || std::abs(all[k].pos - start - T) > gap / 3 || all[k].l != all[i0].l)
        fail(ErrorKind::ConstructionFailed, "cutting sequence is not periodic");
    return w;
}

} // namespace detail

// Canonical class of a hyperbolic group element given as a matrix.
template <class Real>
ConjClass class_of_element(const SurfaceGroup& grp, const Moebius<Real>& gamma) {
    if (classify(gamma) != ElementClass::hyperbolic) fail(ErrorKind::NotHyperbolic, "element is not hyperbolic");
    auto nf = axis_normal_form(gamma.template cast<long double>());
    GroupWord best;
    for (int side : {+1, -1}) {
        GroupWord w = least_rotation(detail::cutting_word(grp, nf, side));
        if (best.empty() || w < best) best = std::move(w);
    }
    ConjClass c;
    c.word = best;
    c.trace = evaluate_word(grp, best).trace();
    c.period = translation_length(c.trace);
    return c;
}

// Free, cyclic and Dehn reduction, including relator pieces across the seam.
inline GroupWord cyclic_reduce_word(const SurfaceGroup& grp, const GroupWord& w) {
    GroupWord r = cyclic_reduce(reduce_word(grp, w));
    for (int pass = 0; pass < 64 && r.size() > 1; ++pass) {
        GroupWord n = cyclic_reduce(reduce_word(grp, rotate(r, r.size() / 2)));
        if (n.size() >= r.size()) break;
        r = std::move(n);
    }
    return r;
}

inline ConjClass canonical_class(const SurfaceGroup& grp, const GroupWord& w) {
    // conjugation does not change the class; shorter words evaluate more accurately
    GroupWord r = cyclic_reduce_word(grp, w);
    if (r.empty()) fail(ErrorKind::TrivialWord, "word reduces to the identity");
    return class_of_element(grp, evaluate_word<long double>(grp, r));
}

inline bool is_primitive(const ConjClass& c) { return cyclic_period(c.word) == c.word.size(); }

inline ConjClass inverse_class(const SurfaceGroup& grp, const ConjClass& c) {
    return canonical_class(grp, inverse(c.word));
}

inline bool mutually_inverse(const SurfaceGroup& grp, const ConjClass& x, const ConjClass& y) {
    return inverse_class(grp, x) == y;
}

// Period in extended precision from the canonical word.
inline long double class_period_ext(const SurfaceGroup& grp, const ConjClass& c) {
    auto m = evaluate_word<long double>(grp, c.word);
    return translation_length<long double>(m.trace());
}

} // namespace hgm
