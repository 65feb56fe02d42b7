#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "hgm/flow.hpp"

namespace hgm {

struct BoundEntry {
    std::string name;
    double lhs{0}, rhs{0}, slack{0};
    double tol{1e-12}; // numerical resolution of lhs
};

struct BoundReport {
    std::vector<BoundEntry> entries;

    void add(std::string name, double lhs, double rhs, double tol = 1e-12) { entries.push_back({std::move(name), lhs, rhs, rhs - lhs, tol}); }
    void append(const BoundReport& o) { entries.insert(entries.end(), o.entries.begin(), o.entries.end()); }
    bool ok(double tol = 1e-12) const {
        for (const auto& e : entries)
            if (!(e.slack >= -std::max(tol, e.tol))) return false;
        return true;
    }
    double min_slack() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : entries) m = std::min(m, e.slack);
        return m;
    }
    const BoundEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
    std::string summary() const {
        std::ostringstream os;
        os.precision(6);
        for (const auto& e : entries)
            if (!(e.slack >= -e.tol)) os << e.name << ": lhs=" << e.lhs << " rhs=" << e.rhs << "; ";
        return os.str();
    }
};

class BoundViolation : public Error {
public:
    BoundReport report;
    explicit BoundViolation(BoundReport r)
        : Error(ErrorKind::BoundViolated, "bound violated: " + r.summary()), report(std::move(r)) {}
};

struct ClosingOptions {
    double metric_factor{1.0};
    double grid{0.1};
    double identify_tol{1e-6};
    bool throw_on_violation{true};
};

struct ClosingResult {
    PeriodicOrbit new_orbit;
    GroupWord zeta_word;
    double sigma{0}, eta{0};
    double T_new{0};
    double T{0};    // return time actually used (residual time absorbed)
    double u{0}, s{0};
    BoundReport bound_report;
};

namespace detail {

inline void finish(ClosingResult& r, const ClosingOptions& opt) {
    if (opt.throw_on_violation && !r.bound_report.ok()) throw BoundViolation(r.bound_report);
}

inline GroupWord identify_or_fail(const SurfaceGroup& grp, const Moebiusx& g, const Moebiusx& h, double tol) {
    auto w = identify<Real80>(grp, g, h, tol);
    if (!w) fail(ErrorKind::IdentifyFailed, "no group element relates the two lifts");
    return *w;
}

// Trajectory t -> Gamma start a_t on [0, len], with Gamma end = Gamma start a_len.
// Late times are taken from the end so that rounding in start is not blown up by e^t.
struct Track {
    Moebiusx start, end;
    Real80 len{0};
    Moebiusx at(Real80 t) const { return t > len / 2 ? end * a_<Real80>(t - len) : start * a_<Real80>(t); }
};

inline Track periodic_track(const Moebiusx& g, Real80 period) { return {g, g, period}; }

// max over a grid of [0, T] of d_X(x(t + offset), y(t))
inline double max_shadow(const SurfaceGroup& grp, const Track& x, const Track& y, Real80 T, double grid, Real80 offset = 0) {
    double m = 0;
    std::size_t n = static_cast<std::size_t>(std::ceil(static_cast<double>(T) / grid));
    for (std::size_t k = 0; k <= n; ++k) {
        Real80 t = std::min(T, static_cast<Real80>(k) * static_cast<Real80>(grid));
        m = std::max(m, quotient_distance<Real80>(grp, x.at(t + offset), y.at(t)));
    }
    return m;
}

inline Moebiusx section_disp(SectionVariant v, Real80 u, Real80 s) {
    return v == SectionVariant::P ? c_<Real80>(u) * b_<Real80>(s) : b_<Real80>(s) * c_<Real80>(u);
}

// Closing for g a_T = zeta g m, m = c_u b_s (P) or b_s c_u (P').
inline ClosingResult close_core(const QuotientPoint& x, Real80 T, SectionVariant v, Real80 u, Real80 s, const ClosingOptions& opt) {
    const auto& grp = *x.grp;
    const Moebiusx& g = x.rep;
    Moebiusx m = section_disp(v, u, s);
    // zeta g m a_{-T/2} = g a_{T/2}: half the flow on each side keeps error growth at e^{T/2}
    GroupWord zw = identify_or_fail(grp, g * a_<Real80>(T / 2), g * m * a_<Real80>(-T / 2), opt.identify_tol);
    if (zw.empty()) fail(ErrorKind::TrivialWord, "return element is the identity");
    Moebiusx Z = evaluate_word<Real80>(grp, zw);
    if (classify(Z) != ElementClass::hyperbolic) fail(ErrorKind::NotHyperbolic, "return element is not hyperbolic");
    auto nf = axis_normal_form(Z);
    // the axis point in the section of x: g^{-1} p = (c_sigma b_eta | b_eta c_sigma) a_r
    auto d = split_disp(g.inverse() * nf.p, v);
    Moebiusx pp = nf.p * a_<Real80>(-d.t);
    ClosingResult r;
    r.zeta_word = zw;
    r.sigma = static_cast<double>(d.u);
    r.eta = static_cast<double>(d.s);
    r.T_new = static_cast<double>(nf.T);
    r.T = static_cast<double>(T);
    r.u = static_cast<double>(u);
    r.s = static_cast<double>(s);
    r.new_orbit = orbit_from_axis_point(x.grp, zw, pp, canonical_class(grp, zw));
    r.new_orbit.period_ext = nf.T;
    r.new_orbit.period = r.T_new;
    return r;
}

} // namespace detail

inline void check_closing_pre(Real80 T, Real80 u, Real80 s) {
    if (!(T >= 1)) fail(ErrorKind::Config, "closing needs T >= 1");
    if (!(std::abs(u) < 0.25L && std::abs(s) < 0.25L)) fail(ErrorKind::NotInSection, "return coordinates outside the radius 1/4 section");
}

// Anosov closing lemma I: phi_T(x) = (u, s)_x in the P section.
inline ClosingResult close_orbit_I(const QuotientPoint& x, double T, const SectionCoords& coords, const ClosingOptions& opt = {}) {
    if (coords.variant != SectionVariant::P) fail(ErrorKind::Config, "closing lemma I needs P-section coordinates");
    auto d = decompose_cub(coords.disp);
    Real80 Te = static_cast<Real80>(T) - d.t;
    check_closing_pre(Te, d.u, d.s);
    ClosingResult r = detail::close_core(x, Te, SectionVariant::P, d.u, d.s, opt);
    const Real80 us = d.u * d.s;
    const Real80 eT = std::exp(-Te);
    Real80 Tn = r.new_orbit.period_ext;
    r.bound_report.add("period", static_cast<double>(std::abs((Tn - Te) / 2 - std::log1p(us))), static_cast<double>(5 * std::abs(us) * eT));
    r.bound_report.add("sigma", std::abs(r.sigma), static_cast<double>(2 * std::abs(d.u) * eT));
    r.bound_report.add("eta", std::abs(r.eta), static_cast<double>(1.5L * std::abs(d.s)));
    double sh = detail::max_shadow(*x.grp, {x.rep, x.rep * detail::section_disp(SectionVariant::P, d.u, d.s), Te},
                                   detail::periodic_track(r.new_orbit.conjugator, Tn), Te, opt.grid);
    // new_orbit.conjugator may be a reduced lift; distance is on the quotient
    r.bound_report.add("shadowing", sh, (2 * std::abs(r.u) + std::abs(r.eta)) * opt.metric_factor);
    detail::finish(r, opt);
    return r;
}

// Anosov closing lemma II: phi_T(x) = (s, u)'_x in the P' section.
inline ClosingResult close_orbit_II(const QuotientPoint& x, double T, const SectionCoords& coords, const ClosingOptions& opt = {}) {
    if (coords.variant != SectionVariant::Pprime) fail(ErrorKind::Config, "closing lemma II needs P'-section coordinates");
    auto d = decompose_bcu(coords.disp);
    Real80 Te = static_cast<Real80>(T) - d.t;
    check_closing_pre(Te, d.u, d.s);
    ClosingResult r = detail::close_core(x, Te, SectionVariant::Pprime, d.u, d.s, opt);
    const Real80 us = d.u * d.s;
    const Real80 eT = std::exp(-Te);
    Real80 Tn = r.new_orbit.period_ext;
    r.bound_report.add("period", static_cast<double>(std::abs((Tn - Te) / 2)), static_cast<double>(4 * std::abs(us) * eT));
    r.bound_report.add("sigma", std::abs(r.sigma), static_cast<double>(2 * std::abs(d.u) * eT));
    // the lemma allows equality here
    r.bound_report.add("eta", std::abs(r.eta), static_cast<double>(1.5L * std::abs(d.s)));
    double sh = detail::max_shadow(*x.grp, {x.rep, x.rep * detail::section_disp(SectionVariant::Pprime, d.u, d.s), Te},
                                   detail::periodic_track(r.new_orbit.conjugator, Tn), Te, opt.grid);
    r.bound_report.add("shadowing", sh, (2 * std::abs(r.u) + std::abs(r.eta)) * opt.metric_factor);
    detail::finish(r, opt);
    return r;
}

// Connecting lemma: o2.base = (u, s) in the P section of o1.base (radius eps).
inline ClosingResult connect_orbits(const PeriodicOrbit& o1, const PeriodicOrbit& o2, const SectionCoords& coords, double eps,
                                    const ClosingOptions& opt = {}) {
    using R = Real80;
    const auto& grp = o1.group();
    if (coords.variant != SectionVariant::P) fail(ErrorKind::Config, "connecting lemma needs P-section coordinates");
    if (!(eps > 0 && eps < 0.25)) fail(ErrorKind::Config, "connecting radius must lie in (0, 1/4)");
    const R T1 = o1.period_ext, T2 = o2.period_ext;
    if (!(T1 + T2 >= 1)) fail(ErrorKind::Config, "connecting lemma needs T1 + T2 >= 1");
    auto d = decompose_cub(coords.disp);
    if (!(std::abs(d.u) < eps && std::abs(d.s) < eps)) fail(ErrorKind::NotInSection, "o2 base outside the section of o1 base");
    const Moebiusx& g1 = o1.conjugator;
    // gamma * o2 lift = g1 c_u b_s a_t; the exact section point of o2 is at time -t
    GroupWord gam = detail::identify_or_fail(grp, g1 * coords.disp, o2.conjugator, opt.identify_tol);
    Moebiusx g2 = evaluate_word<R>(grp, gam) * o2.conjugator * a_<R>(-d.t);
    GroupWord w1 = o1.word;
    GroupWord w2 = reduce_word(grp, concat(concat(gam, o2.word), inverse(gam)));
    // following o1 then o2: g a_T = gamma_1 gamma_2 g
    GroupWord zw = reduce_word(grp, concat(w1, w2));
    if (zw.empty()) fail(ErrorKind::TrivialWord, "connected element is the identity");
    Moebiusx Z = evaluate_word<R>(grp, zw);
    if (classify(Z) != ElementClass::hyperbolic) fail(ErrorKind::NotHyperbolic, "connected element is not hyperbolic");
    auto nf = axis_normal_form(Z);
    auto dd = decompose_cub(g1.inverse() * nf.p);
    Moebiusx px = nf.p * a_<R>(-dd.t); // = g1 c_{u e^{-T1} + sigma} b_eta
    ClosingResult r;
    r.zeta_word = zw;
    r.u = static_cast<double>(d.u);
    r.s = static_cast<double>(d.s);
    r.T = static_cast<double>(T1 + T2);
    r.sigma = static_cast<double>(dd.u - d.u * std::exp(-T1));
    r.eta = static_cast<double>(dd.s);
    r.T_new = static_cast<double>(nf.T);
    r.new_orbit = orbit_from_axis_point(o1.base.grp, zw, px, canonical_class(grp, zw));
    r.new_orbit.period_ext = nf.T;
    r.new_orbit.period = r.T_new;
    const R us = d.u * d.s;
    r.bound_report.add("period", static_cast<double>(std::abs((nf.T - (T1 + T2)) / 2 - std::log1p(us))),
                       static_cast<double>(7 * std::abs(us) * (std::exp(-T1) + std::exp(-T2))));
    r.bound_report.add("sigma", std::abs(r.sigma), static_cast<double>(2 * std::abs(d.u) * std::exp(-T1 - T2)));
    r.bound_report.add("eta", std::abs(r.eta), static_cast<double>(1.5L * std::abs(d.s)));
    r.bound_report.add("shadowing_1", detail::max_shadow(grp, detail::periodic_track(px, nf.T), detail::periodic_track(g1, T1), T1, opt.grid), 5 * eps * opt.metric_factor);
    r.bound_report.add("shadowing_2", detail::max_shadow(grp, detail::periodic_track(px, nf.T), detail::periodic_track(g2, T2), T2, opt.grid, T1), 5 * eps * opt.metric_factor);
    detail::finish(r, opt);
    return r;
}

// ---------------------------------------------------------------------------
// near-return and near-section search

struct NearReturn {
    Real80 t1{0}, t2{0};  // x = o.at(t1), phi_T(x) pierces at t2 = t1 + T
    double u{0}, s{0};
};

// Parallel encounters of a periodic orbit as near-returns x -> phi_T(x).
inline std::vector<NearReturn> near_returns(const PeriodicOrbit& o, double eps) {
    std::vector<NearReturn> out;
    for (const auto& e : detect_encounters(o, eps)) {
        if (e.kind != EncounterKind::parallel) continue;
        out.push_back({e.t1(), e.t2(), e.u(), e.s()});
    }
    return out;
}

struct CrossHit {
    Real80 t1{0}, t2{0};
    double u{0}, s{0};
};

// Times t1 on o1 and t2 on o2 with o2.at(t2) in the P section of o1.at(t1),
// balanced |u| = |s| < eps.
inline std::vector<CrossHit> cross_encounters(const PeriodicOrbit& o1, const PeriodicOrbit& o2, double eps) {
    using R = Real80;
    const auto& grp = o1.group();
    const double dt = eps / 4;
    auto ta = time_grid(o1, dt), tb = time_grid(o2, dt);
    auto ra = detail::sample_reps(o1, ta), rb = detail::sample_reps(o2, tb);
    const double D = 4 * eps + 2 * dt + 1e-9;
    std::vector<Moebiusx> all = ra;
    all.insert(all.end(), rb.begin(), rb.end());
    std::vector<CrossHit> out;
    for (const auto& pc : detail::close_pairs(grp, all, D)) {
        if (pc.i >= ra.size() || pc.k < ra.size()) continue;
        std::size_t k = pc.k - ra.size();
        Moebiusx M = ra[pc.i].inverse() * ring_as<R>(grp, pc.ring) * rb[k];
        if (log_norm(M) > R(D) || std::abs(M.a) < R(0.5)) continue;
        auto d = decompose_cub(M);
        if (std::abs(d.u) >= 2 * eps || std::abs(d.s) >= 2 * eps || std::abs(d.t) > dt) continue;
        if (std::sqrt(std::abs(d.u * d.s)) >= eps || d.u == 0 || d.s == 0) continue;
        R tau = std::log(std::abs(d.s) / std::abs(d.u)) / 2;
        R t1 = wrap_time(ta[pc.i] + tau, o1.period_ext);
        R t2 = wrap_time(tb[k] - d.t + tau, o2.period_ext);
        bool dup = false;
        for (const auto& h : out)
            if (circ_gap(h.t1, t1, o1.period_ext) < 2 * eps && circ_gap(h.t2, t2, o2.period_ext) < 2 * eps) dup = true;
        if (dup) continue;
        auto sc = section_probe(o1.at(t1), o2.at(t2), SectionVariant::P);
        // remove any leftover time residual on o2
        t2 = wrap_time(t2 - sc.residual_time, o2.period_ext);
        sc = section_probe(o1.at(t1), o2.at(t2), SectionVariant::P);
        if (!(std::abs(sc.u) < eps && std::abs(sc.s) < eps && std::abs(sc.residual_time) < 1e-9)) continue;
        out.push_back({t1, t2, sc.u, sc.s});
    }
    return out;
}

} // namespace hgm
