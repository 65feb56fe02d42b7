#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hgm/closing.hpp"

namespace hgm {

enum class Topology { single_antiparallel, aas, ppi, api, two_crossings };

inline const char* to_string(Topology t) {
    switch (t) {
    case Topology::single_antiparallel: return "single_antiparallel";
    case Topology::aas: return "aas";
    case Topology::ppi: return "ppi";
    case Topology::api: return "api";
    case Topology::two_crossings: return "two_crossings";
    }
    return "?";
}

// Leg j of the original runs over [t[j], t[j+1]] (t[L] = t[0] + T) and sits in
// slot perm[j] of the partner, whose slots are [tp[m], tp[m+1]] (tp[L] = tp[0] + T').
// A direct leg is anchored at its slot start, a reversed one at its slot end.
struct PartnershipCertificate {
    int L{0};
    std::vector<double> t, tp;
    std::vector<int> perm;
    std::vector<bool> reversed;
    std::vector<double> leg_closeness;
    double closeness{0};
};

struct PartnerOptions {
    double eps{0};             // <= 0: smallest radius containing all piercing coordinates
    double metric_factor{1.0};
    double grid{0.1};
    bool throw_on_violation{true};
    bool check_radius{true};   // admissible range eps < sigma0/k
};

struct PartnerResult {
    PeriodicOrbit original, partner;
    ConjClass predicted_class, chained_class;
    Topology topology{Topology::single_antiparallel};
    double action_diff{0};
    double target{0};
    double T_chain{0};          // partner period from the chained closing constructions
    double eps{0};
    std::vector<double> times;  // split times on the original, t[0] = x
    std::vector<double> legs;   // T_1 .. T_L
    std::vector<double> u, s;   // piercing coordinates per encounter
    std::vector<GroupWord> gammas;
    BoundReport bound_report;
    double closeness{0};
    std::optional<PartnershipCertificate> certificate;
    bool distinctness{false};
};

// The word rewrites of the symbolic dynamics.
inline GroupWord partner_word(Topology t, const std::vector<GroupWord>& g) {
    switch (t) {
    case Topology::single_antiparallel:
        if (g.size() != 2) break;
        return inverse(g[0]) * g[1];
    case Topology::aas:
    case Topology::two_crossings:
        if (g.size() != 4) break;
        return inverse(g[0]) * g[3] * inverse(g[2]) * g[1];
    case Topology::ppi:
        if (g.size() != 4) break;
        return g[1] * g[0] * g[3] * g[2];
    case Topology::api:
        if (g.size() != 4) break;
        return inverse(g[0]) * inverse(g[1]) * g[3] * g[2];
    }
    fail(ErrorKind::WordSplitFailed, "wrong number of word pieces for the topology");
}

namespace detail {

// Exact piercing of the point at time `to` (or its reversal) through the P
// section of the point at time `tb`; `to` is moved to kill the residual time.
struct Piercing {
    Real80 t_other{0};
    Moebiusx disp;  // relative displacement, c_u b_s up to rounding
    double u{0}, s{0};
};

inline Piercing pierce(const PeriodicOrbit& o, EncounterKind kind, Real80 tb, Real80 to) {
    QuotientPoint xb = o.at(tb);
    Piercing p;
    for (int it = 0; it < 6; ++it) {
        QuotientPoint z = o.at(to);
        if (kind == EncounterKind::antiparallel) z = time_reverse(z);
        SectionCoords sc = section_probe(xb, z, SectionVariant::P);
        auto d = decompose_cub(sc.disp);
        p.disp = sc.disp;
        p.u = static_cast<double>(d.u);
        p.s = static_cast<double>(d.s);
        p.t_other = to;
        if (std::abs(d.t) < Real80(1e-16)) break;
        to = kind == EncounterKind::parallel ? to - d.t : to + d.t;
    }
    return p;
}

// Times on o2 and coordinates such that o2.at(t2) lies in the P section of o1.at(t1).
inline Piercing pierce_pair(const PeriodicOrbit& o1, Real80 t1, const PeriodicOrbit& o2, Real80 t2) {
    QuotientPoint xb = o1.at(t1);
    Piercing p;
    for (int it = 0; it < 6; ++it) {
        SectionCoords sc = section_probe(xb, o2.at(t2), SectionVariant::P);
        auto d = decompose_cub(sc.disp);
        p.disp = sc.disp;
        p.u = static_cast<double>(d.u);
        p.s = static_cast<double>(d.s);
        p.t_other = t2;
        if (std::abs(d.t) < Real80(1e-16)) break;
        t2 -= d.t;
    }
    return p;
}

// Time on o near which o passes closest to the point q (0.05 grid, local refinement).
inline Real80 nearest_time(const PeriodicOrbit& o, const QuotientPoint& q, Real80 guess, Real80 window) {
    Real80 best_t = guess;
    double best = std::numeric_limits<double>::infinity();
    for (Real80 dt = -window; dt <= window; dt += Real80(0.05)) {
        double d = quotient_distance(o.at(guess + dt), q);
        if (d < best) { best = d; best_t = guess + dt; }
    }
    return best_t;
}

// Anti 2-encounter reconnection in the orbit q: base at time tb, the reversed
// point at to pierces its section. Returns the closing-lemma result at
// xbar = g c_u a_{-T2}, g the lift at tb.
struct AntiClose {
    ClosingResult r;
    double u{0}, s{0}, T1{0}, T2{0};
    Real80 to{0};
};

inline AntiClose anti_close(const PeriodicOrbit& q, Real80 tb, Real80 to, const ClosingOptions& copt) {
    using R = Real80;
    Piercing pc = pierce(q, EncounterKind::antiparallel, tb, to);
    const R T = q.period_ext;
    const R T1 = wrap_time(pc.t_other - tb, T), T2 = T - T1;
    auto d = decompose_cub(pc.disp);
    Moebiusx g = q.rep_at(tb);
    Moebiusx gbar = g * c_<R>(d.u) * a_<R>(-T2);
    QuotientPoint xb = make_point(q.base.grp, gbar);
    // phi_T(xbar) = Gamma g c_u a_{T1}, without a long flow
    QuotientPoint yb = make_point(q.base.grp, g * c_<R>(d.u) * a_<R>(T1));
    SectionCoords sc = section_probe(xb, yb, SectionVariant::P);
    AntiClose out;
    out.r = close_orbit_I(xb, static_cast<double>(T), sc, copt);
    out.u = pc.u;
    out.s = pc.s;
    out.T1 = static_cast<double>(T1);
    out.T2 = static_cast<double>(T2);
    out.to = pc.t_other;
    return out;
}

// Times t in the (wrapped) section-hit set of orbit p through P_radius(base).
inline std::vector<Piercing> section_hits(const PeriodicOrbit& p, const QuotientPoint& base, double radius) {
    std::vector<Piercing> out;
    auto ts = time_grid(p, 0.05);
    std::vector<double> d(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) d[k] = quotient_distance(p.at(ts[k]), base);
    const std::size_t n = ts.size();
    for (std::size_t k = 0; k < n; ++k) {
        double dm = d[(k + n - 1) % n], dp = d[(k + 1) % n];
        if (!(d[k] <= dm && d[k] <= dp) || d[k] > 2 * radius + 0.1) continue;
        Real80 t = ts[k];
        Piercing h;
        bool good = true;
        for (int it = 0; it < 8; ++it) {
            SectionCoords sc = section_probe(base, p.at(t), SectionVariant::P);
            CubDecomposition<Real80> dd;
            try { dd = decompose_cub(sc.disp); } catch (const Error&) { good = false; break; }
            h.disp = sc.disp;
            h.u = static_cast<double>(dd.u);
            h.s = static_cast<double>(dd.s);
            h.t_other = wrap_time(t, p.period_ext);
            if (std::abs(dd.t) < Real80(1e-15)) break;
            t -= dd.t;
        }
        if (!good || std::abs(h.u) >= radius || std::abs(h.s) >= radius) continue;
        bool dup = false;
        for (const auto& e : out)
            if (circ_gap(e.t_other, h.t_other, p.period_ext) < 1e-6) dup = true;
        if (!dup) out.push_back(h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// leg matching for the orbit-pair definition

inline double leg_cost(const PeriodicOrbit& o, const PeriodicOrbit& p, Real80 t0, Real80 D, bool rev, Real80 a, double grid,
                       double cutoff = std::numeric_limits<double>::infinity()) {
    double m = 0;
    std::size_t n = static_cast<std::size_t>(std::ceil(static_cast<double>(D) / grid));
    for (std::size_t k = 0; k <= n; ++k) {
        Real80 tau = std::min(D, static_cast<Real80>(k) * static_cast<Real80>(grid));
        QuotientPoint q = rev ? time_reverse(p.at(a - tau)) : p.at(a + tau);
        m = std::max(m, quotient_distance(o.at(t0 + tau), q));
        if (m > cutoff) return m;
    }
    return m;
}

struct LegMatch {
    bool rev{false};
    Real80 anchor{0};
    double cost{std::numeric_limits<double>::infinity()};
};

// Alignments of one leg with cost below eps, best first (at most 4).
inline std::vector<LegMatch> leg_matches(const PeriodicOrbit& o, const PeriodicOrbit& p, Real80 t0, Real80 D, double eps, double grid) {
    std::vector<LegMatch> out;
    const Real80 mid = D / 2;
    const QuotientPoint om = o.at(t0 + mid);
    auto ts = time_grid(p, 0.05);
    const std::size_t n = ts.size();
    std::vector<double> dm(n);
    for (bool rev : {false, true}) {
        for (std::size_t k = 0; k < n; ++k) {
            QuotientPoint q = rev ? time_reverse(p.at(ts[k] - mid)) : p.at(ts[k] + mid);
            dm[k] = quotient_distance(om, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
            // local minima of the midpoint distance only
            if (dm[k] > eps + 0.05 || dm[k] > dm[(k + n - 1) % n] || dm[k] > dm[(k + 1) % n]) continue;
            const Real80 a = ts[k];
            if (leg_cost(o, p, t0, D, rev, a, 0.5, eps + 0.05) > eps + 0.05) continue;
            // golden-section refinement of the anchor on a coarse grid
            Real80 lo = a - 0.06L, hi = a + 0.06L;
            const Real80 gr = 0.6180339887498949L;
            const double cg = std::max(grid, 0.25);
            Real80 x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = leg_cost(o, p, t0, D, rev, x1, cg), f2 = leg_cost(o, p, t0, D, rev, x2, cg);
            for (int it = 0; it < 24; ++it) {
                if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - gr * (hi - lo); f1 = leg_cost(o, p, t0, D, rev, x1, cg); }
                else { lo = x1; x1 = x2; f1 = f2; x2 = lo + gr * (hi - lo); f2 = leg_cost(o, p, t0, D, rev, x2, cg); }
            }
            Real80 am = (lo + hi) / 2;
            double f = leg_cost(o, p, t0, D, rev, am, grid);
            if (f < eps) out.push_back({rev, wrap_time(am, p.period_ext), f});
        }
    }
    std::sort(out.begin(), out.end(), [](const LegMatch& x, const LegMatch& y) { return x.cost < y.cost; });
    if (out.size() > 4) out.resize(4);
    return out;
}

// Assembles a certificate from per-leg matches; anchors are snapped to shared
// slot boundaries and all legs re-evaluated there.
inline std::optional<PartnershipCertificate> assemble(const PeriodicOrbit& o, const PeriodicOrbit& p, const std::vector<Real80>& t,
                                                      const std::vector<LegMatch>& legs, double eps, double grid) {
    const std::size_t L = t.size();
    const Real80 T = o.period_ext, Tp = p.period_ext;
    std::vector<Real80> D(L);
    for (std::size_t j = 0; j < L; ++j) D[j] = j + 1 < L ? t[j + 1] - t[j] : t[0] + T - t[j];
    // partner interval starts
    std::vector<Real80> start(L);
    for (std::size_t j = 0; j < L; ++j) start[j] = wrap_time(legs[j].rev ? legs[j].anchor - D[j] : legs[j].anchor, Tp);
    std::vector<std::size_t> order(L);
    for (std::size_t j = 0; j < L; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return start[a] < start[b]; });
    // boundary m lies between slot m-1 and slot m
    std::vector<Real80> b(L);
    for (std::size_t m = 0; m < L; ++m) {
        std::size_t cur = order[m], prev = order[(m + L - 1) % L];
        if (!legs[cur].rev) {
            b[m] = legs[cur].anchor;
        } else if (legs[prev].rev) {
            b[m] = legs[prev].anchor;
        } else {
            Real80 e = legs[prev].anchor + D[prev];
            Real80 gap = wrap_time(start[cur] - e + Tp / 2, Tp) - Tp / 2;
            b[m] = wrap_time(e + gap / 2, Tp);
        }
    }
    // boundaries must increase cyclically with positive slot lengths
    Real80 total = 0;
    for (std::size_t m = 0; m < L; ++m) {
        Real80 len = wrap_time(b[(m + 1) % L] - b[m], Tp);
        if (L == 1) len = Tp;
        if (!(len > 0)) return std::nullopt;
        // the leg in this slot must roughly fill it
        if (L > 1 && std::abs(len - D[order[m]]) > 0.5L) return std::nullopt;
        total += len;
    }
    if (std::abs(total - Tp) > Real80(1e-6)) return std::nullopt;
    PartnershipCertificate c;
    c.L = static_cast<int>(L);
    c.perm.assign(L, 0);
    c.reversed.assign(L, false);
    c.leg_closeness.assign(L, 0);
    for (std::size_t m = 0; m < L; ++m) c.perm[order[m]] = static_cast<int>(m);
    Real80 tp0 = b[0];
    for (std::size_t m = 0; m < L; ++m) {
        Real80 v = tp0 + wrap_time(b[m] - tp0, Tp);
        c.tp.push_back(static_cast<double>(v));
    }
    for (std::size_t j = 0; j < L; ++j) c.t.push_back(static_cast<double>(t[j]));
    c.closeness = 0;
    for (std::size_t j = 0; j < L; ++j) {
        std::size_t m = static_cast<std::size_t>(c.perm[j]);
        Real80 a = legs[j].rev ? b[(m + 1) % L] : b[m];
        c.reversed[j] = legs[j].rev;
        c.leg_closeness[j] = leg_cost(o, p, t[j], D[j], legs[j].rev, a, grid);
        c.closeness = std::max(c.closeness, c.leg_closeness[j]);
    }
    if (!(c.closeness < eps)) return std::nullopt;
    return c;
}

// First valid combination of per-leg alignments.
inline std::optional<PartnershipCertificate> combine(const PeriodicOrbit& o, const PeriodicOrbit& p, const std::vector<Real80>& t,
                                                     const std::vector<const std::vector<LegMatch>*>& cands, double eps, double grid) {
    const std::size_t L = t.size();
    for (const auto* c : cands)
        if (c->empty()) return std::nullopt;
    std::vector<std::size_t> pick(L, 0);
    std::vector<LegMatch> legs(L);
    while (true) {
        for (std::size_t j = 0; j < L; ++j) legs[j] = (*cands[j])[pick[j]];
        if (auto c = assemble(o, p, t, legs, eps, grid)) return c;
        std::size_t j = 0;
        while (j < L && ++pick[j] == cands[j]->size()) pick[j++] = 0;
        if (j == L) return std::nullopt;
    }
}

inline std::optional<PartnershipCertificate> certify_with(const PeriodicOrbit& o, const PeriodicOrbit& p, std::vector<Real80> t, double eps,
                                                          double grid) {
    std::sort(t.begin(), t.end());
    if (t.size() < 2) return std::nullopt;
    std::vector<std::vector<LegMatch>> legs;
    for (std::size_t j = 0; j < t.size(); ++j) {
        Real80 D = j + 1 < t.size() ? t[j + 1] - t[j] : t[0] + o.period_ext - t[j];
        if (!(D > 0)) return std::nullopt;
        legs.push_back(leg_matches(o, p, t[j], D, eps, grid));
        if (legs.back().empty()) return std::nullopt;
    }
    std::vector<const std::vector<LegMatch>*> c;
    for (const auto& l : legs) c.push_back(&l);
    return combine(o, p, t, c, eps, grid);
}

} // namespace detail

// Coincidence test: same period up to sqrt(2) eps and pointwise
// eps-close after the best flow shift.
inline bool orbits_coincide(const PeriodicOrbit& o1, const PeriodicOrbit& o2, double eps, double grid = 0.1) {
    if (std::abs(o1.period - o2.period) > std::sqrt(2.0) * eps) return false;
    const QuotientPoint x0 = o1.at(0);
    auto cost = [&](Real80 delta, double cutoff) {
        double m = 0;
        std::size_t n = static_cast<std::size_t>(std::ceil(o1.period / grid));
        for (std::size_t k = 0; k < n; ++k) {
            Real80 t = o1.period_ext * static_cast<Real80>(k) / static_cast<Real80>(n);
            m = std::max(m, quotient_distance(o1.at(t), o2.at(t + delta)));
            if (m > cutoff) return m;
        }
        return m;
    };
    double best = std::numeric_limits<double>::infinity();
    for (Real80 a : time_grid(o2, 0.05)) {
        if (quotient_distance(x0, o2.at(a)) > eps + 0.05) continue;
        Real80 lo = a - 0.06L, hi = a + 0.06L;
        for (int it = 0; it < 40; ++it) {
            Real80 m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
            if (cost(m1, 1e300) < cost(m2, 1e300)) hi = m2;
            else lo = m1;
        }
        best = std::min(best, cost((lo + hi) / 2, 1e300));
        if (best < eps) return true;
    }
    return best < eps;
}

// Search for an eps-orbit-pair certificate. Breakpoints are the given hint
// times, else subsets of the encounter times of o (plus 0 and T/2).
inline std::optional<PartnershipCertificate> verify_partnership(const PeriodicOrbit& o, const PeriodicOrbit& p, double eps,
                                                                const std::vector<double>& hint = {}, double grid = 0.1) {
    if (!hint.empty()) {
        std::vector<Real80> t;
        for (double h : hint) t.push_back(wrap_time(h, o.period_ext));
        return detail::certify_with(o, p, t, eps, grid);
    }
    if (orbits_coincide(o, p, eps, grid)) {
        auto c = detail::certify_with(o, p, {Real80(0), o.period_ext / 2}, eps, grid);
        if (c) return c;
    }
    const auto& grp = o.group();
    std::vector<Real80> cand{Real80(0), o.period_ext / 2};
    double er = std::min(eps, 0.99 * grp.sigma0 / 8);
    auto encs = detect_encounters(o, er);
    std::sort(encs.begin(), encs.end(), [](const Encounter& a, const Encounter& b) { return std::abs(a.u()) < std::abs(b.u()); });
    for (const auto& e : encs) {
        if (cand.size() >= 10) break;
        cand.push_back(e.t1());
        cand.push_back(e.t2());
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), [](Real80 a, Real80 b) { return std::abs(a - b) < 1e-6L; }), cand.end());
    const std::size_t n = cand.size();
    std::map<std::pair<std::size_t, std::size_t>, std::vector<detail::LegMatch>> cache;
    auto leg = [&](std::size_t i, std::size_t k) -> const std::vector<detail::LegMatch>& {
        auto key = std::make_pair(i, k);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        Real80 D = k > i ? cand[k] - cand[i] : cand[k] + o.period_ext - cand[i];
        return cache[key] = detail::leg_matches(o, p, cand[i], D, eps, grid);
    };
    for (std::size_t L = 2; L <= std::min<std::size_t>(8, n); ++L) {
        std::vector<bool> pick(n, false);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(L), true);
        do {
            std::vector<std::size_t> idx;
            for (std::size_t k = 0; k < n; ++k)
                if (pick[k]) idx.push_back(k);
            std::vector<const std::vector<detail::LegMatch>*> legs;
            bool ok = true;
            for (std::size_t j = 0; j < L && ok; ++j) {
                legs.push_back(&leg(idx[j], idx[(j + 1) % L]));
                ok = !legs.back()->empty();
            }
            if (!ok) continue;
            std::vector<Real80> t;
            for (auto k : idx) t.push_back(cand[k]);
            if (auto c = detail::combine(o, p, t, legs, eps, grid)) return c;
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// constructors

namespace detail {

inline void append_prefixed(BoundReport& into, const BoundReport& from, const std::string& prefix) {
    for (const auto& e : from.entries) into.add(prefix + e.name, e.lhs, e.rhs, e.tol);
}

// Resolution of section coordinates read off an orbit of period T (rounding grows like e^{T/2}).
inline double coord_floor(double T) { return std::max(1e-12, 1e-18 * std::exp(T / 2)); }

// gamma_j with P_j a_{T_j} = gamma_j P_{j+1}; their product is the orbit word.
// With P_j = e_j C_j, C_j the continuous lift at tau_j, gamma_j = e_j e_{j+1}^{-1}
// and the last one carries the orbit word; no long flow is evaluated.
inline std::vector<GroupWord> split_words(const PeriodicOrbit& os, const std::vector<Real80>& tau, const std::vector<Moebiusx>& P) {
    const auto& grp = os.group();
    const std::size_t L = tau.size();
    std::vector<GroupWord> e;
    for (std::size_t j = 0; j < L; ++j) {
        // late times use the lift one period back, C a_t = W C a_{t-T}
        const bool late = tau[j] > os.period_ext / 2;
        auto w = identify<Real80>(grp, P[j], os.lift_at(late ? tau[j] - os.period_ext : tau[j]), 1e-6);
        if (!w) fail(ErrorKind::WordSplitFailed, "encounter point is not on the orbit");
        e.push_back(late ? *w * inverse(os.word) : *w);
    }
    std::vector<GroupWord> g;
    GroupWord prod;
    for (std::size_t j = 0; j < L; ++j) {
        GroupWord w = j + 1 < L ? e[j] * inverse(e[j + 1]) : e[j] * os.word * inverse(e[0]);
        g.push_back(reduce_word(grp, w));
        prod = prod * g.back();
    }
    if (cyclic_reduce_word(grp, prod).empty() || canonical_class(grp, prod) != os.cls)
        fail(ErrorKind::WordSplitFailed, "split words do not multiply to the orbit class");
    return g;
}

inline ConjClass predict(const SurfaceGroup& grp, Topology t, const std::vector<GroupWord>& g) {
    GroupWord w = partner_word(t, g);
    if (cyclic_reduce_word(grp, w).empty()) fail(ErrorKind::WordSplitFailed, "partner word is trivial");
    ConjClass c = canonical_class(grp, w);
    if (!is_primitive(c)) fail(ErrorKind::WordSplitFailed, "partner class is not primitive");
    return c;
}

inline Moebiusx other_lift(const Moebiusx& base, const Piercing& p, EncounterKind kind) {
    return kind == EncounterKind::parallel ? base * p.disp : base * p.disp * d_pi<Real80>().inverse();
}

inline void finish_partner(PartnerResult& r, const PartnerOptions& opt, double closeness_bound, const PeriodicOrbit& o) {
    const auto& grp = o.group();
    r.action_diff = static_cast<double>((r.partner.period_ext - o.period_ext) / 2);
    r.bound_report.add("class_match", r.chained_class == r.predicted_class ? 0.0 : 1.0, 0.5);
    r.bound_report.add("trace_consistency", std::abs(r.T_chain - r.partner.period), 1e-8);
    r.certificate = verify_partnership(o, r.partner, closeness_bound, r.times, opt.grid);
    r.closeness = r.certificate ? r.certificate->closeness : std::numeric_limits<double>::infinity();
    r.bound_report.add("closeness", r.closeness, closeness_bound);
    r.distinctness = r.distinctness && r.predicted_class != o.cls && r.predicted_class != inverse_class(grp, o.cls);
    if (opt.throw_on_violation && !r.bound_report.ok()) throw BoundViolation(r.bound_report);
}

inline double radius_of(const PartnerOptions& opt, std::initializer_list<double> coords) {
    if (opt.eps > 0) return opt.eps;
    double m = 0;
    for (double c : coords) m = std::max(m, std::abs(c));
    return m * (1 + 1e-6) + 1e-300;
}

inline void check_inside(double eps, std::initializer_list<double> coords) {
    for (double c : coords)
        if (!(std::abs(c) < eps)) fail(ErrorKind::ConditionViolated, "piercing coordinates outside the eps section");
}

} // namespace detail

// Partner of an orbit with one antiparallel 2-encounter.
inline PartnerResult partner_single_antiparallel(const PeriodicOrbit& o, const Encounter& enc, const PartnerOptions& opt = {}) {
    using R = Real80;
    const auto& grp = o.group();
    if (enc.kind != EncounterKind::antiparallel) fail(ErrorKind::EncounterTypeMismatch, "encounter is not antiparallel");
    if (!(o.period > 1)) fail(ErrorKind::ConditionViolated, "period must exceed 1");
    const R tx = enc.t1();
    PeriodicOrbit os = shift(o, tx);
    detail::Piercing pc = detail::pierce(os, EncounterKind::antiparallel, 0, wrap_time(enc.t2() - tx, o.period_ext));
    std::vector<R> tau{0, pc.t_other};
    Moebiusx P0 = os.rep_at(0);
    std::vector<Moebiusx> P{P0, detail::other_lift(P0, pc, EncounterKind::antiparallel)};

    PartnerResult r;
    r.topology = Topology::single_antiparallel;
    r.original = o;
    r.gammas = detail::split_words(os, tau, P);
    const double u = pc.u, s = pc.s;
    const double eps = detail::radius_of(opt, {u, s});
    detail::check_inside(eps, {u, s});
    if (opt.check_radius && !(eps < grp.sigma0 / 8)) fail(ErrorKind::ConditionViolated, "eps must lie below sigma0/8");
    r.eps = eps;
    r.u = {u};
    r.s = {s};
    r.predicted_class = detail::predict(grp, r.topology, r.gammas);
    r.partner = orbit_from_class(o.base.grp, r.predicted_class);

    ClosingOptions copt;
    copt.metric_factor = opt.metric_factor;
    copt.grid = opt.grid;
    copt.throw_on_violation = false;
    auto ac = detail::anti_close(os, 0, pc.t_other, copt);
    r.chained_class = ac.r.new_orbit.cls;
    r.T_chain = ac.r.T_new;
    const double T = o.period, T1 = ac.T1, T2 = ac.T2;
    r.times = {static_cast<double>(tx), static_cast<double>(tx + pc.t_other)};
    r.legs = {T1, T2};
    r.target = std::log1p(u * s);
    const double dev = std::abs(static_cast<double>((r.partner.period_ext - o.period_ext) / 2) - r.target);
    r.bound_report.add("action", dev, 12 * eps * eps * (std::exp(-T1) + std::exp(T1 - T)));
    const double epsp = eps + 2 * (std::abs(u - s * std::exp(-T1)) + std::abs(s - u * std::exp(T1 - T)));
    r.bound_report.add("eps_prime", epsp, 8 * eps);
    const double st = u - s * std::exp(-T1), ut = s - u * std::exp(-T2);
    r.bound_report.add("sigma", std::abs(ac.r.sigma), 2 * std::abs(ut) * std::exp(-T));
    r.bound_report.add("eta", std::abs(ac.r.eta - st), 2 * st * st * std::abs(ut) + 2 * std::abs(st) * std::exp(-T));
    detail::append_prefixed(r.bound_report, ac.r.bound_report, "closing.");
    r.distinctness = true;
    detail::finish_partner(r, opt, epsp * opt.metric_factor, o);
    return r;
}

namespace detail {

// Frame of a two-encounter orbit: x at time 0 of os, points at tau[0..3],
// encounter A joins (ia, ja), encounter B joins (ib, jb).
struct Frame4 {
    PeriodicOrbit os;
    Real80 tx{0};
    std::vector<Real80> tau;
    std::vector<Moebiusx> P;
    Piercing A, B;
    double T[4]{};
};

inline Frame4 make_frame(const PeriodicOrbit& o, Real80 tx, Real80 ty, Real80 tz, Real80 tw, int ia, int ja, EncounterKind ka, int ib,
                         int jb, EncounterKind kb) {
    Frame4 f;
    f.tx = tx;
    f.os = shift(o, tx);
    const Real80 Tt = o.period_ext;
    f.tau = {0, wrap_time(ty - tx, Tt), wrap_time(tz - tx, Tt), wrap_time(tw - tx, Tt)};
    f.A = pierce(f.os, ka, f.tau[ia], f.tau[ja]);
    f.tau[ja] = f.A.t_other;
    f.B = pierce(f.os, kb, f.tau[ib], f.tau[jb]);
    f.tau[jb] = f.B.t_other;
    if (!(f.tau[0] < f.tau[1] && f.tau[1] < f.tau[2] && f.tau[2] < f.tau[3] && f.tau[3] < Tt))
        fail(ErrorKind::EncounterTypeMismatch, "encounter points are not in the required order");
    f.P.resize(4);
    f.P[0] = f.os.rep_at(0);
    f.P[1] = f.os.rep_at(f.tau[1]);
    f.P[ja] = other_lift(f.P[ia], f.A, ka);
    f.P[jb] = other_lift(f.P[ib], f.B, kb);
    for (int j = 0; j < 4; ++j) f.T[j] = static_cast<double>((j < 3 ? f.tau[j + 1] : Tt) - f.tau[j]);
    return f;
}

inline bool inside(Real80 a, Real80 from, Real80 to, Real80 T) { return wrap_time(a - from, T) < wrap_time(to - from, T); }

inline void fill_common(PartnerResult& r, const PeriodicOrbit& o, const Frame4& f, Topology topo) {
    r.topology = topo;
    r.original = o;
    r.gammas = split_words(f.os, f.tau, f.P);
    r.u = {f.A.u, f.B.u};
    r.s = {f.A.s, f.B.s};
    for (int j = 0; j < 4; ++j) {
        r.times.push_back(static_cast<double>(f.tx + f.tau[j]));
        r.legs.push_back(f.T[j]);
    }
    r.target = std::log1p(f.A.u * f.A.s) + std::log1p(f.B.u * f.B.s);
}

inline double action_dev(const PartnerResult& r, const PeriodicOrbit& o) {
    return std::abs(static_cast<double>((r.partner.period_ext - o.period_ext) / 2) - r.target);
}

// The closing lemmas I and II at x -> z and z -> x (parallel encounter x, z).
struct ShortOrbits {
    ClosingResult rx, rz;
};

inline ShortOrbits close_pair(const Frame4& f, const ClosingOptions& copt) {
    QuotientPoint xp = f.os.at(0), zp = f.os.at(f.tau[2]);
    ShortOrbits so;
    so.rx = close_orbit_I(xp, f.T[0] + f.T[1], section_probe(xp, zp, SectionVariant::P), copt);
    so.rz = close_orbit_II(zp, f.T[2] + f.T[3], section_probe(zp, f.os.at(f.os.period_ext), SectionVariant::Pprime), copt);
    return so;
}

inline ClosingResult connect_near(const PeriodicOrbit& o1, Real80 t1, const PeriodicOrbit& o2, Real80 t2, const ClosingOptions& copt) {
    Piercing pp = pierce_pair(o1, t1, o2, t2);
    PeriodicOrbit a = shift(o1, t1), b = shift(o2, pp.t_other);
    SectionCoords sc = section_probe(a.base, b.base, SectionVariant::P);
    double ec = std::min(0.249, 1.01 * std::max(std::abs(pp.u), std::abs(pp.s)) + 1e-12);
    return connect_orbits(a, b, sc, ec, copt);
}

} // namespace detail

// Two antiparallel encounters in series: T(z) = (u1, s1)_y from enc1 (inner),
// T(w) = (u2, s2)_x from enc2 (outer).
inline PartnerResult partner_aas(const PeriodicOrbit& o, const Encounter& enc1, const Encounter& enc2, const PartnerOptions& opt = {}) {
    using R = Real80;
    const auto& grp = o.group();
    if (enc1.kind != EncounterKind::antiparallel || enc2.kind != EncounterKind::antiparallel)
        fail(ErrorKind::EncounterTypeMismatch, "aas needs two antiparallel encounters");
    const R Tt = o.period_ext;
    R x = enc2.t1(), w = enc2.t2();
    if (!(detail::inside(enc1.t1(), x, w, Tt) && detail::inside(enc1.t2(), x, w, Tt))) std::swap(x, w);
    if (!(detail::inside(enc1.t1(), x, w, Tt) && detail::inside(enc1.t2(), x, w, Tt)))
        fail(ErrorKind::EncounterTypeMismatch, "encounters are intertwined, not serial");
    R y = enc1.t1(), z = enc1.t2();
    if (wrap_time(y - x, Tt) > wrap_time(z - x, Tt)) std::swap(y, z);
    auto f = detail::make_frame(o, x, y, z, w, 1, 2, EncounterKind::antiparallel, 0, 3, EncounterKind::antiparallel);

    PartnerResult r;
    detail::fill_common(r, o, f, Topology::aas);
    const double u1 = f.A.u, s1 = f.A.s, u2 = f.B.u, s2 = f.B.s;
    const double eps = detail::radius_of(opt, {u1, s1, u2, s2});
    detail::check_inside(eps, {u1, s1, u2, s2});
    r.eps = eps;
    if (opt.check_radius && !(eps < grp.sigma0 / 24)) fail(ErrorKind::ConditionViolated, "eps must lie below sigma0/24");
    const double e1 = std::exp(-f.T[0]), e2 = std::exp(-f.T[1]), e3 = std::exp(-f.T[2]), e4 = std::exp(-f.T[3]);
    if (!(std::abs(u1) > 6 * eps * e2 && std::abs(s1) > 30 * eps * eps * eps + 13 * eps * e1 + 5 * eps * e2 + 3 * eps * e3))
        fail(ErrorKind::ConditionViolated, "the serial-encounter coordinate condition fails");
    r.predicted_class = detail::predict(grp, r.topology, r.gammas);
    r.partner = orbit_from_class(o.base.grp, r.predicted_class);

    ClosingOptions copt;
    copt.metric_factor = opt.metric_factor;
    copt.grid = opt.grid;
    copt.throw_on_violation = false;
    // first reconnection at the outer encounter, then at the inner one on the new orbit
    auto ac1 = detail::anti_close(f.os, 0, f.tau[3], copt);
    const PeriodicOrbit& mid = ac1.r.new_orbit;
    PeriodicOrbit rev = reversed(mid);
    const R T34 = static_cast<R>(f.T[2] + f.T[3]);
    const R T234 = T34 + static_cast<R>(f.T[1]);
    detail::Piercing pt = detail::pierce(rev, EncounterKind::antiparallel, -T34, -T234);
    r.bound_report.add("tilde_u1", std::abs(pt.u - s1), 7 * eps * e1 + 2 * eps * e3, detail::coord_floor(o.period));
    r.bound_report.add("tilde_s1", std::abs(pt.s - u1), eps * e3, detail::coord_floor(o.period));
    auto ac2 = detail::anti_close(rev, -T34, pt.t_other, copt);
    r.chained_class = ac2.r.new_orbit.cls;
    r.T_chain = ac2.r.T_new;
    detail::append_prefixed(r.bound_report, ac1.r.bound_report, "closing1.");
    detail::append_prefixed(r.bound_report, ac2.r.bound_report, "closing2.");

    r.bound_report.add("action", detail::action_dev(r, o), eps * eps * (21 * e1 + 30 * e2 + 12 * e3 + 19 * e4));
    // the partner pierces P(y) away from y and from T(z)
    r.distinctness = false;
    double best_uv = std::numeric_limits<double>::infinity();
    for (const auto& h : detail::section_hits(r.partner, f.os.at(f.tau[1]), 6 * eps)) {
        if (std::abs(h.u) < best_uv) {
            best_uv = std::abs(h.u);
            r.distinctness = std::abs(h.u) < std::abs(u1) && std::abs(h.s) > 1e-9;
        }
    }
    r.bound_report.add("u_v", best_uv, 6 * eps * e2, detail::coord_floor(r.partner.period));
    detail::finish_partner(r, opt, 20 * eps * opt.metric_factor, o);
    return r;
}

// Two parallel encounters intertwined: z = (u1, s1)_x from enc1, w = (u2, s2)_y from enc2.
inline PartnerResult partner_ppi(const PeriodicOrbit& o, const Encounter& enc1, const Encounter& enc2, const PartnerOptions& opt = {}) {
    using R = Real80;
    const auto& grp = o.group();
    if (enc1.kind != EncounterKind::parallel || enc2.kind != EncounterKind::parallel)
        fail(ErrorKind::EncounterTypeMismatch, "ppi needs two parallel encounters");
    const R Tt = o.period_ext;
    R x = enc1.t1(), z = enc1.t2();
    bool in1 = detail::inside(enc2.t1(), x, z, Tt), in2 = detail::inside(enc2.t2(), x, z, Tt);
    if (in1 == in2) fail(ErrorKind::EncounterTypeMismatch, "encounters are serial, not intertwined");
    R y = in1 ? enc2.t1() : enc2.t2(), w = in1 ? enc2.t2() : enc2.t1();
    auto f = detail::make_frame(o, x, y, z, w, 0, 2, EncounterKind::parallel, 1, 3, EncounterKind::parallel);

    PartnerResult r;
    detail::fill_common(r, o, f, Topology::ppi);
    const double u1 = f.A.u, s1 = f.A.s, u2 = f.B.u, s2 = f.B.s;
    const double eps = detail::radius_of(opt, {u1, s1, u2, s2});
    detail::check_inside(eps, {u1, s1, u2, s2});
    r.eps = eps;
    if (opt.check_radius && !(eps < grp.sigma0 / 20)) fail(ErrorKind::ConditionViolated, "eps must lie below sigma0/20");
    const double e1 = std::exp(-f.T[0]), e2 = std::exp(-f.T[1]), e3 = std::exp(-f.T[2]), e4 = std::exp(-f.T[3]);
    if (!(std::abs(u2) > 9 * eps * e4 && std::abs(s2) > 72 * eps * eps * eps + 5 * eps * e1 + 2 * eps * e3))
        fail(ErrorKind::ConditionViolated, "the intertwined parallel coordinate condition fails");
    r.predicted_class = detail::predict(grp, r.topology, r.gammas);
    r.partner = orbit_from_class(o.base.grp, r.predicted_class);

    ClosingOptions copt;
    copt.metric_factor = opt.metric_factor;
    copt.grid = opt.grid;
    copt.throw_on_violation = false;
    auto so = detail::close_pair(f, copt);
    r.bound_report.add("class_12", so.rx.new_orbit.cls == canonical_class(grp, r.gammas[0] * r.gammas[1]) ? 0.0 : 1.0, 0.5);
    r.bound_report.add("class_34", so.rz.new_orbit.cls == canonical_class(grp, r.gammas[2] * r.gammas[3]) ? 0.0 : 1.0, 0.5);
    auto rc = detail::connect_near(so.rz.new_orbit, static_cast<R>(f.T[2]), so.rx.new_orbit, static_cast<R>(f.T[0]), copt);
    r.chained_class = rc.new_orbit.cls;
    r.T_chain = rc.T_new;
    detail::append_prefixed(r.bound_report, so.rx.bound_report, "closing_x.");
    detail::append_prefixed(r.bound_report, so.rz.bound_report, "closing_z.");
    detail::append_prefixed(r.bound_report, rc.bound_report, "connect.");

    r.bound_report.add("action", detail::action_dev(r, o), 54 * std::pow(eps, 4) + 25 * eps * eps * (e1 + e2 + e3 + e4));
    r.distinctness = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : detail::section_hits(r.partner, f.os.at(f.tau[1]), 5 * eps)) {
        if (std::abs(h.u - u2) < best) {
            best = std::abs(h.u - u2);
            r.distinctness = std::abs(h.u) > 1e-9 && std::abs(h.s - s2) > 1e-9;
        }
    }
    r.bound_report.add("u_v", best, 9 * eps * e4, detail::coord_floor(r.partner.period));
    detail::finish_partner(r, opt, 19 * eps * opt.metric_factor, o);
    return r;
}

// One parallel encounter z = (u1, s1)_x and one antiparallel T(w) = (u2, s2)_y, intertwined.
inline PartnerResult partner_api(const PeriodicOrbit& o, const Encounter& enc_par, const Encounter& enc_anti, const PartnerOptions& opt = {}) {
    using R = Real80;
    const auto& grp = o.group();
    if (enc_par.kind != EncounterKind::parallel || enc_anti.kind != EncounterKind::antiparallel)
        fail(ErrorKind::EncounterTypeMismatch, "api needs one parallel and one antiparallel encounter");
    const R Tt = o.period_ext;
    R x = enc_par.t1(), z = enc_par.t2();
    bool in1 = detail::inside(enc_anti.t1(), x, z, Tt), in2 = detail::inside(enc_anti.t2(), x, z, Tt);
    if (in1 == in2) fail(ErrorKind::EncounterTypeMismatch, "encounters are serial, not intertwined");
    R y = in1 ? enc_anti.t1() : enc_anti.t2(), w = in1 ? enc_anti.t2() : enc_anti.t1();
    auto f = detail::make_frame(o, x, y, z, w, 0, 2, EncounterKind::parallel, 1, 3, EncounterKind::antiparallel);

    PartnerResult r;
    detail::fill_common(r, o, f, Topology::api);
    const double u1 = f.A.u, s1 = f.A.s, u2 = f.B.u, s2 = f.B.s;
    const double eps = detail::radius_of(opt, {u1, s1, u2, s2});
    detail::check_inside(eps, {u1, s1, u2, s2});
    r.eps = eps;
    if (opt.check_radius && !(eps < grp.sigma0 / 20)) fail(ErrorKind::ConditionViolated, "eps must lie below sigma0/20");
    const double e1 = std::exp(-f.T[0]), e2 = std::exp(-f.T[1]), e3 = std::exp(-f.T[2]), e4 = std::exp(-f.T[3]);
    if (!(std::abs(u1) > 9 * eps * e3 && std::abs(s1) > 72 * eps * eps * eps + 5 * eps * e4 + 2 * eps * e2))
        fail(ErrorKind::ConditionViolated, "the intertwined mixed coordinate condition fails");
    r.predicted_class = detail::predict(grp, r.topology, r.gammas);
    r.partner = orbit_from_class(o.base.grp, r.predicted_class);

    ClosingOptions copt;
    copt.metric_factor = opt.metric_factor;
    copt.grid = opt.grid;
    copt.throw_on_violation = false;
    auto so = detail::close_pair(f, copt);
    r.bound_report.add("class_12", so.rx.new_orbit.cls == canonical_class(grp, r.gammas[0] * r.gammas[1]) ? 0.0 : 1.0, 0.5);
    r.bound_report.add("class_34", so.rz.new_orbit.cls == canonical_class(grp, r.gammas[2] * r.gammas[3]) ? 0.0 : 1.0, 0.5);
    // the x-orbit is joined in reverse
    PeriodicOrbit rx = reversed(so.rx.new_orbit);
    auto rc = detail::connect_near(so.rz.new_orbit, static_cast<R>(f.T[2]), rx, -static_cast<R>(f.T[0]), copt);
    r.chained_class = rc.new_orbit.cls;
    r.T_chain = rc.T_new;
    detail::append_prefixed(r.bound_report, so.rx.bound_report, "closing_x.");
    detail::append_prefixed(r.bound_report, so.rz.bound_report, "closing_z.");
    detail::append_prefixed(r.bound_report, rc.bound_report, "connect.");

    r.bound_report.add("action", detail::action_dev(r, o), 54 * std::pow(eps, 4) + 25 * eps * eps * (e1 + e3 + e4));
    r.distinctness = true;
    detail::finish_partner(r, opt, 19 * eps * opt.metric_factor, o);
    return r;
}

// Antiparallel encounter equivalent to a small-angle self-crossing: the
// crossing at (tau, tau + L) pierces with coordinates of d_{+-phi}.
inline Encounter crossing_encounter(const PeriodicOrbit& o, const Crossing& c) {
    const Real80 T = o.period_ext;
    Real80 ta = wrap_time(c.tau, T), tb = wrap_time(static_cast<Real80>(c.tau) + static_cast<Real80>(c.L), T);
    if (tb < ta) std::swap(ta, tb);
    detail::Piercing p = detail::pierce(o, EncounterKind::antiparallel, ta, tb);
    Encounter e;
    e.kind = EncounterKind::antiparallel;
    e.radius = std::max(std::abs(p.u), std::abs(p.s)) * 2;
    SectionCoords zero;
    zero.variant = SectionVariant::P;
    zero.base = o.at(ta);
    SectionCoords sc = section_probe(o.at(ta), time_reverse(o.at(p.t_other)), SectionVariant::P);
    e.entries.push_back({static_cast<double>(ta), zero});
    e.entries.push_back({static_cast<double>(p.t_other), sc});
    return e;
}

// Partner of an orbit with two small-angle self-crossings in series.
inline PartnerResult crossing_partner(const PeriodicOrbit& o, const Crossing& c1, const Crossing& c2, const PartnerOptions& opt = {}) {
    const double phi1 = kPi - c1.theta, phi2 = kPi - c2.theta;
    const double phi = std::max(phi1, phi2);
    if (!(phi < 1.0 / 3)) fail(ErrorKind::AngleTooLarge, "crossing angle too far from pi");
    const double sphi = std::abs(std::sin(phi / 2));
    PartnerOptions po = opt;
    po.eps = 1.2 * sphi;
    po.check_radius = false;
    po.throw_on_violation = false;
    PartnerResult r = partner_aas(o, crossing_encounter(o, c1), crossing_encounter(o, c2), po);
    r.topology = Topology::two_crossings;
    const double a1 = std::sin(phi1 / 2), a2 = std::sin(phi2 / 2);
    r.target = std::log((1 - a1 * a1) * (1 - a2 * a2));
    double e = 0;
    const double w[4] = {21, 31, 13, 19};
    for (int j = 0; j < 4; ++j) e += w[j] * std::exp(-r.legs[j]);
    r.bound_report.add("crossing_action", std::abs(r.action_diff - r.target), sphi * sphi * e);
    r.bound_report.add("crossing_closeness", r.closeness, 36 * sphi * opt.metric_factor);
    r.bound_report.add("shorter", r.partner.period - o.period, 0.0);
    if (opt.throw_on_violation && !r.bound_report.ok()) throw BoundViolation(r.bound_report);
    return r;
}

} // namespace hgm
