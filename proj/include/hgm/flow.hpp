#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hgm/conjugacy.hpp"

namespace hgm {

using Real80 = long double;
using Moebiusx = Moebius<Real80>;

inline constexpr Real80 kPi = 3.14159265358979323846264338327950288L;

enum class Precision { double_, extended };

// Storage precision of quotient representatives. Arithmetic always runs in
// 80-bit; in double mode every stored representative is rounded to 64-bit.
inline Precision& precision_mode() {
    static Precision p = Precision::extended;
    return p;
}

inline Moebiusx store(const Moebiusx& m) {
    if (precision_mode() == Precision::double_) return m.cast<double>().cast<Real80>();
    return m;
}

// ---------------------------------------------------------------------------
// quotient points

struct QuotientPoint {
    Moebiusx rep;
    GroupPtr grp;
};

inline Moebiusx reduce_rep(const SurfaceGroup& grp, const Moebiusx& m) { return reduce_point<Real80>(grp, m, false).rep; }

inline QuotientPoint make_point(const GroupPtr& grp, const Moebiusx& m) { return {store(reduce_rep(*grp, m)), grp}; }

inline QuotientPoint flow(const QuotientPoint& x, double t) {
    Moebiusx r = x.rep;
    Real80 left = t;
    const Real80 step = 2;
    while (left != 0) {
        Real80 h = std::clamp(left, -step, step);
        r = r * a_<Real80>(h);
        left -= h;
        if (r.frob() > 10) r = reduce_rep(*x.grp, r);
    }
    if (r.frob() > 10) r = reduce_rep(*x.grp, r);
    return {store(r), x.grp};
}

inline QuotientPoint time_reverse(const QuotientPoint& x) { return {store(x.rep * d_pi<Real80>()), x.grp}; }

// Right action by an arbitrary element, x -> x h.
inline QuotientPoint right_mul(const QuotientPoint& x, const Moebiusx& h) { return make_point(x.grp, x.rep * h); }

inline double quotient_distance(const QuotientPoint& x, const QuotientPoint& y) {
    return quotient_distance<Real80>(*x.grp, x.rep, y.rep);
}

inline bool same_point(const QuotientPoint& x, const QuotientPoint& y, double tol = 1e-9) {
    return quotient_distance(x, y) < tol;
}

// ---------------------------------------------------------------------------
// Poincare sections

enum class SectionVariant { P, Pprime };

inline const char* to_string(SectionVariant v) { return v == SectionVariant::P ? "P" : "Pprime"; }

struct SectionCoords {
    SectionVariant variant{SectionVariant::P};
    double u{0}, s{0};
    double residual_time{0};
    QuotientPoint base;
    Moebiusx disp; // base.rep^{-1} * (lift of z), = c_u b_s a_t or b_s c_u a_t
    GroupWord lift; // gamma with gamma * z.rep near base.rep * disp
};

inline CubDecomposition<Real80> split_disp(const Moebiusx& m, SectionVariant v) {
    return v == SectionVariant::P ? decompose_cub(m) : decompose_bcu(m);
}

// Coordinates of the nearest lift of z relative to base, without radius checks.
inline SectionCoords section_probe(const QuotientPoint& base, const QuotientPoint& z, SectionVariant v) {
    const auto& grp = *base.grp;
    auto lm = nearest_lift<Real80>(grp, base.rep, z.rep);
    SectionCoords sc;
    sc.variant = v;
    sc.base = base;
    // base.rep = Wg^{-1} gred, so base.rep^{-1} gamma z.rep = gred^{-1} delta hred
    sc.disp = lm.gred.inverse() * lm.delta(grp) * lm.hred;
    auto d = split_disp(sc.disp, v);
    sc.u = static_cast<double>(d.u);
    sc.s = static_cast<double>(d.s);
    sc.residual_time = static_cast<double>(d.t);
    sc.lift = lift_word(grp, lm);
    return sc;
}

inline std::optional<SectionCoords> section_coords(const QuotientPoint& base, const QuotientPoint& z, SectionVariant v,
                                                   double radius) {
    if (!(radius > 0 && radius < base.grp->sigma0 / 4)) fail(ErrorKind::Config, "section radius must lie in (0, sigma0/4)");
    SectionCoords sc = section_probe(base, z, v);
    if (std::abs(sc.u) < radius && std::abs(sc.s) < radius && std::abs(sc.residual_time) < 1e-9) return sc;
    return std::nullopt;
}

// Point of the section with the given coordinates.
inline QuotientPoint section_point(const QuotientPoint& base, SectionVariant v, double u, double s) {
    Moebiusx m = v == SectionVariant::P ? c_<Real80>(u) * b_<Real80>(s) : b_<Real80>(s) * c_<Real80>(u);
    return right_mul(base, m);
}

// ---------------------------------------------------------------------------
// periodic orbits

// evaluate(word) = conjugator a_T conjugator^{-1}; base = Gamma conjugator.
struct PeriodicOrbit {
    ConjClass cls;
    GroupWord word;
    Moebiusx conjugator;
    double period{0};
    Real80 period_ext{0};
    QuotientPoint base;

    const SurfaceGroup& group() const { return *base.grp; }

    // lift of the orbit point at time t, reduced
    Moebiusx rep_at(Real80 t) const {
        Real80 tt = std::fmod(t, period_ext);
        if (tt < -period_ext / 2) tt += period_ext;
        if (tt >= period_ext / 2) tt -= period_ext;
        return reduce_rep(group(), conjugator * a_<Real80>(tt));
    }
    QuotientPoint at(Real80 t) const { return {store(rep_at(t)), base.grp}; }

    // unreduced lift conjugator * a_t, continuous in t
    Moebiusx lift_at(Real80 t) const { return conjugator * a_<Real80>(t); }
};

// Word of Wg * w * Wg^{-1} where gred = Wg g.
inline GroupWord conj_by_applied(const SurfaceGroup& grp, const std::vector<Letter>& applied, const GroupWord& w) {
    GroupWord inv = undo_word(applied); // Wg^{-1}
    return reduce_word(grp, concat(concat(inverse(inv), w), inv));
}

// Orbit on the axis of the given element word; base point reduced.
inline PeriodicOrbit orbit_from_word(const GroupPtr& grp, const GroupWord& w, std::optional<ConjClass> cls = std::nullopt) {
    GroupWord r = reduce_word(*grp, w);
    if (r.empty()) fail(ErrorKind::TrivialWord, "word reduces to the identity");
    auto m = evaluate_word<Real80>(*grp, r);
    if (classify(m) != ElementClass::hyperbolic) fail(ErrorKind::NotHyperbolic, "orbit word is not hyperbolic");
    auto nf = axis_normal_form(m);
    auto red = reduce_point<Real80>(*grp, nf.p, true);
    PeriodicOrbit o;
    o.cls = cls ? *cls : canonical_class(*grp, r);
    o.word = conj_by_applied(*grp, red.applied, r);
    o.conjugator = red.rep;
    o.period_ext = nf.T;
    o.period = static_cast<double>(nf.T);
    o.base = {store(red.rep), grp};
    return o;
}

inline PeriodicOrbit orbit_from_class(const GroupPtr& grp, const ConjClass& c) {
    if (!is_primitive(c)) fail(ErrorKind::NotPrimitive, "class is not primitive");
    return orbit_from_word(grp, c.word, c);
}

// Orbit through an exact axis point p of the element with word w.
inline PeriodicOrbit orbit_from_axis_point(const GroupPtr& grp, const GroupWord& w, const Moebiusx& p, const ConjClass& cls) {
    auto red = reduce_point<Real80>(*grp, p, true);
    PeriodicOrbit o;
    o.cls = cls;
    o.word = conj_by_applied(*grp, red.applied, w);
    o.conjugator = red.rep;
    o.period_ext = translation_length<Real80>(evaluate_word<Real80>(*grp, o.word).trace());
    o.period = static_cast<double>(o.period_ext);
    o.base = {store(red.rep), grp};
    return o;
}

// Same orbit, base point moved to time tau.
inline PeriodicOrbit shift(const PeriodicOrbit& o, Real80 tau) {
    Real80 tt = std::fmod(tau, o.period_ext);
    if (tt < -o.period_ext / 2) tt += o.period_ext;
    if (tt >= o.period_ext / 2) tt -= o.period_ext;
    auto red = reduce_point<Real80>(o.group(), o.conjugator * a_<Real80>(tt), true);
    PeriodicOrbit r = o;
    r.word = conj_by_applied(o.group(), red.applied, o.word);
    // snap onto the exact axis of the conjugated word; otherwise the rounding of
    // conjugator * a_tau is amplified again by every later flow
    auto nf = axis_normal_form(evaluate_word<Real80>(o.group(), r.word));
    auto d = split_disp(nf.p.inverse() * red.rep, SectionVariant::P);
    r.conjugator = nf.p * a_<Real80>(d.t);
    r.base = {store(r.conjugator), o.base.grp};
    return r;
}

// The reversed orbit; its class is the inverse class.
inline PeriodicOrbit reversed(const PeriodicOrbit& o) {
    PeriodicOrbit r = o;
    r.conjugator = o.conjugator * d_pi<Real80>();
    r.word = inverse(o.word);
    r.cls = inverse_class(o.group(), o.cls);
    r.base = {store(r.conjugator), o.base.grp};
    return r;
}

// Uniform grid of N >= T/dt points over [0, T).
inline std::vector<Real80> time_grid(const PeriodicOrbit& o, double dt) {
    std::size_t n = static_cast<std::size_t>(std::ceil(o.period / dt));
    n = std::max<std::size_t>(n, 1);
    std::vector<Real80> ts(n);
    for (std::size_t k = 0; k < n; ++k) ts[k] = o.period_ext * static_cast<Real80>(k) / static_cast<Real80>(n);
    return ts;
}

inline Real80 wrap_time(Real80 t, Real80 T) {
    Real80 r = std::fmod(t, T);
    if (r < 0) r += T;
    if (r >= T) r -= T;
    return r;
}

inline Real80 circ_gap(Real80 a, Real80 b, Real80 T) {
    Real80 d = std::abs(wrap_time(a, T) - wrap_time(b, T));
    return std::min(d, T - d);
}

// Time t with o.at(t) = x, found by a grid scan and exact a_t correction.
inline std::optional<Real80> locate_on_orbit(const PeriodicOrbit& o, const QuotientPoint& x, double tol = 1e-9) {
    using R = Real80;
    const auto& grp = o.group();
    auto ts = time_grid(o, 0.05);
    R best_t = 0;
    R best = std::numeric_limits<R>::infinity();
    for (R t : ts) {
        Moebiusx r = o.rep_at(t);
        R q = nearest_lift<R>(grp, r, x.rep, false).dist;
        if (q < best) { best = q; best_t = t; }
    }
    R t = best_t;
    for (int it = 0; it < 6; ++it) {
        auto lm = nearest_lift<R>(grp, o.rep_at(t), x.rep, false);
        Moebiusx M = lm.gred.inverse() * lm.delta(grp) * lm.hred;
        // off-orbit displacement shows up in u, s; the a_t part moves along it
        CubDecomposition<R> d;
        try { d = decompose_cub(M); } catch (const Error&) { return std::nullopt; }
        t = wrap_time(t + d.t, o.period_ext);
        if (std::abs(d.t) < R(1e-15)) break;
    }
    if (quotient_distance<R>(grp, o.rep_at(t), x.rep) < tol) return t;
    return std::nullopt;
}

namespace detail {

// Candidate pairs (i, k, ring index) of grid points whose base points come
// within D in the hyperbolic plane, with i < k.
struct PairCandidate {
    std::size_t i, k, ring;
};

inline std::vector<PairCandidate> close_pairs(const SurfaceGroup& grp, const std::vector<Moebiusx>& reps, double D) {
    using R = Real80;
    const double keep = std::tanh((grp.circumradius + D + 0.5) / 2);
    const double h = std::max(D / 2, 1e-6);
    auto disk = [](R x, R y) {
        // (z - i) / (z + i)
        R den = x * x + (y + 1) * (y + 1);
        return std::pair<double, double>{static_cast<double>(2 * x / den), static_cast<double>((x * x + y * y - 1) / den)};
    };
    struct Img {
        std::size_t k, ring;
        double wx, wy;
    };
    std::vector<Img> imgs;
    std::unordered_map<long long, std::vector<std::size_t>> cells;
    auto key = [](long long cx, long long cy) { return cx * 1000003LL + cy; };
    for (std::size_t k = 0; k < reps.size(); ++k) {
        auto [x, y] = reps[k].act_i();
        for (std::size_t r = 0; r < grp.ring_size; ++r) {
            auto [ix, iy] = grp.ball[r].m.act(static_cast<double>(x), static_cast<double>(y));
            auto [wx, wy] = disk(ix, iy);
            if (wx * wx + wy * wy > keep * keep) continue;
            cells[key(static_cast<long long>(std::floor(wx / h)), static_cast<long long>(std::floor(wy / h)))].push_back(imgs.size());
            imgs.push_back({k, r, wx, wy});
        }
    }
    std::vector<PairCandidate> out;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        auto [x, y] = reps[i].act_i();
        auto [wx, wy] = disk(x, y);
        long long cx = static_cast<long long>(std::floor(wx / h)), cy = static_cast<long long>(std::floor(wy / h));
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                auto it = cells.find(key(cx + dx, cy + dy));
                if (it == cells.end()) continue;
                for (std::size_t id : it->second) {
                    const Img& im = imgs[id];
                    if (im.k <= i) continue;
                    double ex = im.wx - wx, ey = im.wy - wy;
                    if (ex * ex + ey * ey > h * h) continue;
                    out.push_back({i, im.k, im.ring});
                }
            }
    }
    std::sort(out.begin(), out.end(), [](const PairCandidate& a, const PairCandidate& b) {
        return std::tie(a.i, a.k, a.ring) < std::tie(b.i, b.k, b.ring);
    });
    return out;
}

inline std::vector<Moebiusx> sample_reps(const PeriodicOrbit& o, const std::vector<Real80>& ts) {
    std::vector<Moebiusx> reps(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) reps[k] = o.rep_at(ts[k]);
    return reps;
}

} // namespace detail

// ---------------------------------------------------------------------------
// self-crossings

// Gamma g a_{tau+L} = Gamma g a_tau d_{sign*theta}.
struct Crossing {
    double tau{0}, L{0}, theta{0};
    int sign{1};
};

inline std::vector<Crossing> detect_self_crossings(const PeriodicOrbit& o, double dt = 0.02) {
    using R = Real80;
    if (!(dt > 0 && dt <= 0.05)) fail(ErrorKind::Config, "crossing scan step must lie in (0, 0.05]");
    const auto& grp = o.group();
    auto ts = time_grid(o, dt);
    auto reps = detail::sample_reps(o, ts);
    const R T = o.period_ext;
    const R step = T / static_cast<R>(ts.size());
    auto cands = detail::close_pairs(grp, reps, 1.5 * static_cast<double>(step) + 1e-9);
    std::vector<Crossing> out;
    std::vector<std::pair<R, R>> seen;
    for (const auto& pc : cands) {
        const Moebiusx N = reps[pc.i].inverse() * ring_as<R>(grp, pc.ring) * reps[pc.k];
        // geodesic N a_t i against the imaginary axis
        if (std::abs(N.c) < R(1e-30) || std::abs(N.d) < R(1e-30)) continue;
        R xf = N.a / N.c, xb = N.b / N.d;
        if (!(xf * xb < 0)) continue;
        R y = std::sqrt(-xf * xb);
        R s1 = std::log(y);
        auto [wx, wy] = N.inverse().act(0, y);
        (void)wx;
        R s2 = std::log(wy);
        if (std::abs(s1) > step || std::abs(s2) > step) continue;
        Moebiusx E = a_<R>(-s1) * N * a_<R>(s2);
        R phi = 2 * std::atan2(E.c, E.a);
        if (phi > kPi) phi -= 2 * kPi;
        R theta = std::abs(phi);
        if (theta < R(1e-7) || theta > kPi - R(1e-7)) continue;
        R tau = ts[pc.i] + s1, tau2 = ts[pc.k] + s2;
        R L = tau2 - tau;
        if (L < R(0.1) || L > T - R(0.1)) continue;
        tau = wrap_time(tau, T);
        bool dup = false;
        for (const auto& [t0, L0] : seen)
            if (circ_gap(t0, tau, T) < 1e-7 && std::abs(L0 - L) < 1e-7) dup = true;
        if (dup) continue;
        // the defining relation, checked on the lifts
        Moebiusx lhs = ring_as<R>(grp, pc.ring) * reps[pc.k] * a_<R>(s2);
        Moebiusx rhs = reps[pc.i] * a_<R>(s1) * d_<R>(phi);
        if (group_distance(lhs, rhs) > R(1e-8)) continue;
        seen.push_back({tau, L});
        Crossing c;
        c.tau = static_cast<double>(tau);
        c.L = static_cast<double>(L);
        c.theta = static_cast<double>(theta);
        c.sign = phi > 0 ? 1 : -1;
        R cc = std::cos(theta / 2);
        if (!(std::exp(-L) < cc * cc))
            fail(ErrorKind::BoundViolated, "crossing violates exp(-L) < cos^2(theta/2)");
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) { return std::tie(a.tau, a.L) < std::tie(b.tau, b.L); });
    return out;
}

// ---------------------------------------------------------------------------
// encounters

enum class EncounterKind { parallel, antiparallel };

inline const char* to_string(EncounterKind k) { return k == EncounterKind::parallel ? "parallel" : "antiparallel"; }

struct EncounterEntry {
    double t{0};
    SectionCoords coords;
};

// A 2-encounter: entries[0] is the section base at t1 (coordinates zero),
// entries[1] the piercing at t2 > t1, of phi_{t2} (parallel) or of its time
// reversal (antiparallel). Coordinates are balanced so that |u| = |s|.
struct Encounter {
    EncounterKind kind{EncounterKind::parallel};
    std::vector<EncounterEntry> entries;
    double radius{0};

    double t1() const { return entries.at(0).t; }
    double t2() const { return entries.at(1).t; }
    double u() const { return entries.at(1).coords.u; }
    double s() const { return entries.at(1).coords.s; }
};

namespace detail {

// Exact piercing data for the pair (t1, t2) of an encounter.
inline std::optional<Encounter> make_encounter(const PeriodicOrbit& o, EncounterKind kind, Real80 t1, Real80 t2, double eps) {
    using R = Real80;
    const R T = o.period_ext;
    t1 = wrap_time(t1, T);
    t2 = wrap_time(t2, T);
    if (t2 < t1) std::swap(t1, t2);
    const auto& grp = o.group();
    // lifts along the axis so that the displacement is computed exactly
    for (int pass = 0; pass < 3; ++pass) {
        Moebiusx g = o.rep_at(t1);
        Moebiusx h = o.rep_at(t2);
        if (kind == EncounterKind::antiparallel) h = h * d_pi<R>();
        auto lm = nearest_lift<R>(grp, g, h);
        Moebiusx M = lm.gred.inverse() * lm.delta(grp) * lm.hred;
        CubDecomposition<R> d;
        try {
            d = decompose_cub(M);
        } catch (const Error&) {
            return std::nullopt;
        }
        R tau = 0;
        if (d.u != 0 && d.s != 0) tau = std::log(std::abs(d.s) / std::abs(d.u)) / 2;
        R nt1 = t1 + tau;
        R nt2 = kind == EncounterKind::parallel ? t2 - d.t + tau : t2 + d.t - tau;
        bool done = std::abs(d.t) < R(1e-13) && std::abs(tau) < R(1e-13);
        t1 = wrap_time(nt1, T);
        t2 = wrap_time(nt2, T);
        if (t2 < t1) std::swap(t1, t2);
        if (done) break;
    }
    QuotientPoint x1 = o.at(t1), x2 = o.at(t2);
    QuotientPoint z = kind == EncounterKind::parallel ? x2 : time_reverse(x2);
    SectionCoords sc = section_probe(x1, z, SectionVariant::P);
    if (!(std::abs(sc.u) < eps && std::abs(sc.s) < eps && std::abs(sc.residual_time) < 1e-9)) return std::nullopt;
    Encounter e;
    e.kind = kind;
    e.radius = eps;
    SectionCoords zero;
    zero.variant = SectionVariant::P;
    zero.base = x1;
    zero.disp = Moebiusx{};
    e.entries.push_back({static_cast<double>(t1), zero});
    e.entries.push_back({static_cast<double>(t2), sc});
    return e;
}

} // namespace detail

// Encounter rebuilt from two approximate times (e.g. stored in a fixture).
inline Encounter encounter_at(const PeriodicOrbit& o, EncounterKind kind, double t1, double t2, double eps) {
    auto e = detail::make_encounter(o, kind, t1, t2, eps);
    if (!e) fail(ErrorKind::NotInSection, "no encounter of the given kind near these times");
    return *e;
}

inline std::vector<Encounter> detect_encounters(const PeriodicOrbit& o, double eps, double dt = 0) {
    using R = Real80;
    const auto& grp = o.group();
    if (!(eps > 0 && eps < grp.sigma0 / 8)) fail(ErrorKind::Config, "encounter radius must lie in (0, sigma0/8)");
    if (dt <= 0) dt = eps / 4;
    if (dt > eps / 4 * (1 + 1e-12)) fail(ErrorKind::Config, "encounter scan step must not exceed eps/4");
    auto ts = time_grid(o, dt);
    auto reps = detail::sample_reps(o, ts);
    const R T = o.period_ext;
    const R step = T / static_cast<R>(ts.size());
    const double D = 4 * eps + 2 * static_cast<double>(step) + 1e-9;
    auto cands = detail::close_pairs(grp, reps, D);
    std::vector<Encounter> out;
    auto known = [&](EncounterKind kind, R t1, R t2) {
        for (const auto& e : out)
            if (e.kind == kind && circ_gap(e.t1(), t1, T) < 2 * eps && circ_gap(e.t2(), t2, T) < 2 * eps) return true;
        return false;
    };
    for (const auto& pc : cands) {
        const Moebiusx N = reps[pc.i].inverse() * ring_as<R>(grp, pc.ring) * reps[pc.k];
        for (EncounterKind kind : {EncounterKind::parallel, EncounterKind::antiparallel}) {
            Moebiusx M = kind == EncounterKind::parallel ? N : N * d_pi<R>();
            if (log_norm(M) > R(D)) continue;
            if (std::abs(M.a) < R(0.5)) continue;
            auto d = decompose_cub(M);
            if (std::abs(d.u) >= 2 * eps || std::abs(d.s) >= 2 * eps || std::abs(d.t) > step) continue;
            // balance |u| = |s| and remove the time residual
            R tau = (d.u != 0 && d.s != 0) ? std::log(std::abs(d.s) / std::abs(d.u)) / 2 : R(0);
            if (std::sqrt(std::abs(d.u * d.s)) >= eps) continue;
            R t1 = ts[pc.i] + tau;
            R t2 = kind == EncounterKind::parallel ? ts[pc.k] - d.t + tau : ts[pc.k] + d.t - tau;
            R w1 = wrap_time(t1, T), w2 = wrap_time(t2, T);
            R lo = std::min(w1, w2), hi = std::max(w1, w2);
            if (hi - lo <= 4 * eps || T - (hi - lo) <= 4 * eps) continue;
            if (known(kind, lo, hi)) continue;
            auto e = detail::make_encounter(o, kind, lo, hi, eps);
            if (!e) continue;
            R l2 = e->t2() - e->t1();
            if (l2 <= 4 * eps || T - l2 <= 4 * eps) continue;
            if (known(kind, e->t1(), e->t2())) continue;
            out.push_back(std::move(*e));
        }
    }
    std::sort(out.begin(), out.end(), [](const Encounter& a, const Encounter& b) {
        return std::make_tuple(a.t1(), a.t2(), a.kind) < std::make_tuple(b.t1(), b.t2(), b.kind);
    });
    return out;
}

} // namespace hgm
