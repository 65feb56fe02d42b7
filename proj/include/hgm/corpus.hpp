#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "hgm/partners.hpp"

namespace hgm {

struct EncounterRef {
    EncounterKind kind{EncounterKind::parallel};
    double t1{0}, t2{0};
};

// One engineered partner instance: the orbit class and the encounters (or
// crossings) fed to the topology's constructor, plus the expected outcome.
struct PartnerFixture {
    Topology topology{Topology::single_antiparallel};
    ConjClass cls;
    std::vector<EncounterRef> encounters;
    std::vector<Crossing> crossings;
    ConjClass predicted;
    double period{0}, partner_period{0};
};

inline Encounter resolve(const PeriodicOrbit& o, const EncounterRef& e) { return encounter_at(o, e.kind, e.t1, e.t2, 0.24); }

inline EncounterRef ref_of(const Encounter& e) { return {e.kind, e.t1(), e.t2()}; }

inline PartnerResult run_fixture(const PeriodicOrbit& o, const PartnerFixture& f, const PartnerOptions& opt = {}) {
    switch (f.topology) {
    case Topology::single_antiparallel: return partner_single_antiparallel(o, resolve(o, f.encounters.at(0)), opt);
    case Topology::aas: return partner_aas(o, resolve(o, f.encounters.at(0)), resolve(o, f.encounters.at(1)), opt);
    case Topology::ppi: return partner_ppi(o, resolve(o, f.encounters.at(0)), resolve(o, f.encounters.at(1)), opt);
    case Topology::api: return partner_api(o, resolve(o, f.encounters.at(0)), resolve(o, f.encounters.at(1)), opt);
    case Topology::two_crossings: return crossing_partner(o, f.crossings.at(0), f.crossings.at(1), opt);
    }
    fail(ErrorKind::Config, "unknown topology");
}

struct CorpusOptions {
    std::uint64_t seed{1};
    int per_topology{20};
    int max_attempts{4000};
    double detect_eps{0.1};
};

namespace detail {

inline GroupWord random_word(std::mt19937_64& rng, int lo, int hi) {
    GroupWord w;
    int n = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    for (int k = 0; k < n; ++k) w.letters.push_back(static_cast<Letter>(rng() % kNumLetters));
    return w;
}

// Words whose orbits carry the wanted encounter pattern: a repeated block gives a
// parallel encounter, a block followed later by its inverse an antiparallel one.
inline GroupWord pattern_word(std::mt19937_64& rng, Topology t) {
    GroupWord A = random_word(rng, 2, 3), X = random_word(rng, 2, 3);
    GroupWord B = random_word(rng, 1, 2), C = random_word(rng, 1, 2), D = random_word(rng, 1, 2);
    switch (t) {
    case Topology::single_antiparallel: return A * B * inverse(A) * C;
    case Topology::aas:
    case Topology::two_crossings:
        X = random_word(rng, 1, 3);
        A = random_word(rng, 1, 3);
        return A * X * B * inverse(X) * C * inverse(A) * D;
    case Topology::ppi: return A * B * X * C * A * D * X;
    case Topology::api: return A * B * X * C * A * D * inverse(X);
    }
    return A;
}

inline std::vector<PartnerFixture> fixtures_of(const PeriodicOrbit& o, Topology t, double eps) {
    std::vector<PartnerFixture> out;
    PartnerOptions po;
    po.throw_on_violation = false;
    auto keep = [&](const PartnerResult& r, std::vector<EncounterRef> es, std::vector<Crossing> cs) {
        if (!r.bound_report.ok() || !r.certificate || !r.distinctness) return;
        PartnerFixture f;
        f.topology = t;
        f.cls = o.cls;
        f.encounters = std::move(es);
        f.crossings = std::move(cs);
        f.predicted = r.predicted_class;
        f.period = o.period;
        f.partner_period = r.partner.period;
        out.push_back(std::move(f));
    };
    if (t == Topology::two_crossings) {
        std::vector<Crossing> sm;
        for (const auto& c : detect_self_crossings(o))
            if (kPi - c.theta < 1.0 / 3) sm.push_back(c);
        for (std::size_t i = 0; i < sm.size(); ++i)
            for (std::size_t j = 0; j < sm.size(); ++j) {
                if (i == j) continue;
                try {
                    keep(crossing_partner(o, sm[i], sm[j], po), {}, {sm[i], sm[j]});
                } catch (const Error&) {
                }
                if (!out.empty()) return out;
            }
        return out;
    }
    auto es = detect_encounters(o, eps);
    for (std::size_t i = 0; i < es.size(); ++i) {
        const auto& a = es[i];
        if (t == Topology::single_antiparallel) {
            if (a.kind != EncounterKind::antiparallel) continue;
            try {
                keep(partner_single_antiparallel(o, a, po), {ref_of(a)}, {});
            } catch (const Error&) {
            }
            if (!out.empty()) return out;
            continue;
        }
        for (std::size_t j = 0; j < es.size(); ++j) {
            const auto& b = es[j];
            if (i == j) continue;
            const bool aa = a.kind == EncounterKind::antiparallel, ba = b.kind == EncounterKind::antiparallel;
            try {
                if (t == Topology::aas && aa && ba) keep(partner_aas(o, a, b, po), {ref_of(a), ref_of(b)}, {});
                if (t == Topology::ppi && !aa && !ba) keep(partner_ppi(o, a, b, po), {ref_of(a), ref_of(b)}, {});
                if (t == Topology::api && !aa && ba) keep(partner_api(o, a, b, po), {ref_of(a), ref_of(b)}, {});
            } catch (const Error&) {
            }
            if (!out.empty()) return out;
        }
    }
    return out;
}

} // namespace detail

// Seeded scan over engineered words; at most one fixture per orbit.
inline std::vector<PartnerFixture> generate_corpus(const GroupPtr& grp, Topology t, const CorpusOptions& opt = {}) {
    std::mt19937_64 rng(opt.seed * 1000003ULL + static_cast<std::uint64_t>(t));
    std::set<ConjClass> seen;
    std::vector<PartnerFixture> out;
    for (int it = 0; it < opt.max_attempts && static_cast<int>(out.size()) < opt.per_topology; ++it) {
        GroupWord w = detail::pattern_word(rng, t);
        if (cyclic_reduce_word(*grp, w).size() < w.size()) continue;
        ConjClass c;
        try {
            c = canonical_class(*grp, w);
        } catch (const Error&) {
            continue;
        }
        if (!is_primitive(c) || !seen.insert(c).second) continue;
        PeriodicOrbit o = orbit_from_class(grp, c);
        if (o.period > 45) continue;
        for (auto& f : detail::fixtures_of(o, t, opt.detect_eps)) out.push_back(std::move(f));
    }
    return out;
}

} // namespace hgm
