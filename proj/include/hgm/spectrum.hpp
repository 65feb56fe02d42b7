#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "hgm/partners.hpp"

namespace hgm {

struct SpectrumEntry {
    ConjClass cls;
    double period{0};
    int multiplicity{1}; // classes sharing this period within 1e-8
    bool primitive{true};
};

struct PairCatalogEntry {
    Topology topology{Topology::single_antiparallel};
    ConjClass class_a, class_b;
    double action_diff{0}, target{0}, T_mean{0};
    BoundReport bound_report;
};

namespace detail {

inline bool is_least_rotation(const std::vector<Letter>& w) {
    const std::size_t n = w.size();
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            Letter x = w[(i + k) % n], y = w[i];
            if (x < y) return false;
            if (x > y) break;
        }
    return true;
}

// Depth-first over freely reduced words; emits cyclically reduced necklace representatives.
template <class F>
void for_each_necklace(int len, std::vector<Letter>& w, F&& emit) {
    if (static_cast<int>(w.size()) == len) {
        if (len > 1 && w.back() == inv_letter(w.front())) return;
        if (is_least_rotation(w)) emit(w);
        return;
    }
    for (Letter l = 0; l < kNumLetters; ++l) {
        if (!w.empty() && l == inv_letter(w.back())) continue;
        // a necklace representative starts with its least letter
        if (!w.empty() && l < w.front()) continue;
        w.push_back(l);
        for_each_necklace(len, w, emit);
        w.pop_back();
    }
}

inline void fill_multiplicity(std::vector<SpectrumEntry>& es) {
    std::size_t i = 0;
    while (i < es.size()) {
        std::size_t j = i + 1;
        while (j < es.size() && es[j].period - es[j - 1].period <= 1e-8) ++j;
        for (std::size_t k = i; k < j; ++k) es[k].multiplicity = static_cast<int>(j - i);
        i = j;
    }
}

} // namespace detail

// All canonical classes of cyclic words of length <= max_len, sorted by period
// (ties by canonical word).
inline std::vector<SpectrumEntry> enumerate_classes(const SurfaceGroup& grp, int max_len, bool include_powers = false) {
    if (max_len < 1 || max_len > 12) fail(ErrorKind::Config, "max_len must lie in [1, 12]");
    std::set<ConjClass> seen;
    std::vector<Letter> w;
    for (int len = 1; len <= max_len; ++len) {
        detail::for_each_necklace(len, w, [&](const std::vector<Letter>& letters) {
            GroupWord g;
            g.letters = letters;
            // words that Dehn-reduce are covered at a shorter length
            if (static_cast<int>(cyclic_reduce_word(grp, g).size()) < len) return;
            seen.insert(canonical_class(grp, g));
        });
    }
    std::vector<SpectrumEntry> out;
    for (const auto& c : seen) {
        bool prim = is_primitive(c);
        if (!prim && !include_powers) continue;
        out.push_back({c, c.period, 1, prim});
    }
    std::sort(out.begin(), out.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
        return a.period != b.period ? a.period < b.period : a.cls < b.cls;
    });
    detail::fill_multiplicity(out);
    return out;
}

// (period, multiplicity) grouped within 1e-8.
inline std::vector<std::pair<double, int>> length_spectrum(const std::vector<SpectrumEntry>& es) {
    std::vector<std::pair<double, int>> out;
    for (const auto& e : es) {
        if (!out.empty() && e.period - out.back().first <= 1e-8 && e.period >= out.back().first)
            ++out.back().second;
        else
            out.push_back({e.period, 1});
    }
    return out;
}

struct CatalogOptions {
    double eps{0.1};
    double detect_eps{0};     // 0: same as eps
    PartnerOptions partner{};
    int jobs{1};
};

// Partner pairs found by running every constructor over the encounters of every
// enumerated orbit; only results whose bound report holds are kept. Classes are
// dealt to opt.jobs threads by stride; the sorted merge makes the output independent of jobs.
inline std::vector<PairCatalogEntry> pair_catalog(const GroupPtr& grp, const std::vector<ConjClass>& classes, const CatalogOptions& opt = {}) {
    PartnerOptions po = opt.partner;
    po.throw_on_violation = false;
    const double deps = opt.detect_eps > 0 ? opt.detect_eps : opt.eps;
    auto work = [&](std::size_t first, std::size_t stride, std::vector<PairCatalogEntry>& out) {
        auto add = [&](const PartnerResult& r) {
            if (!r.bound_report.ok() || !(r.eps <= opt.eps)) return;
            out.push_back({r.topology, r.original.cls, r.predicted_class, r.action_diff, r.target, (r.original.period + r.partner.period) / 2,
                           r.bound_report});
        };
        for (std::size_t k = first; k < classes.size(); k += stride) {
            PeriodicOrbit o = orbit_from_class(grp, classes[k]);
            auto es = detect_encounters(o, deps);
            for (std::size_t i = 0; i < es.size(); ++i) {
                const bool ai = es[i].kind == EncounterKind::antiparallel;
                if (ai) {
                    try { add(partner_single_antiparallel(o, es[i], po)); } catch (const Error&) {}
                }
                for (std::size_t j = 0; j < es.size(); ++j) {
                    if (i == j) continue;
                    const bool aj = es[j].kind == EncounterKind::antiparallel;
                    try {
                        if (ai && aj) add(partner_aas(o, es[i], es[j], po));
                        if (!ai && !aj) add(partner_ppi(o, es[i], es[j], po));
                        if (!ai && aj) add(partner_api(o, es[i], es[j], po));
                    } catch (const Error&) {
                    }
                }
            }
        }
    };
    const std::size_t n = static_cast<std::size_t>(std::max(1, opt.jobs));
    std::vector<std::vector<PairCatalogEntry>> parts(n);
    if (n == 1) {
        work(0, 1, parts[0]);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work, k, n, std::ref(parts[k]));
        for (auto& t : pool) t.join();
    }
    std::vector<PairCatalogEntry> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    std::sort(out.begin(), out.end(), [](const PairCatalogEntry& a, const PairCatalogEntry& b) {
        if (a.class_a != b.class_a) return a.class_a < b.class_a;
        if (a.class_b != b.class_b) return a.class_b < b.class_b;
        if (a.topology != b.topology) return a.topology < b.topology;
        return a.action_diff < b.action_diff;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const PairCatalogEntry& a, const PairCatalogEntry& b) {
                              return a.class_a == b.class_a && a.class_b == b.class_b && a.topology == b.topology;
                          }),
              out.end());
    return out;
}

inline std::vector<PairCatalogEntry> pair_catalog(const GroupPtr& grp, int max_len, const CatalogOptions& opt = {}) {
    std::vector<ConjClass> cs;
    for (const auto& e : enumerate_classes(*grp, max_len)) cs.push_back(e.cls);
    return pair_catalog(grp, cs, opt);
}

enum class FormFactorWeight { unit, sinh };

// Diagonal part of the form factor binned in T / T_H over the half-open bins
// [edges[k], edges[k+1]). Desk-scale, truncated spectrum: not K(tau) = 2 tau.
// unit weight counts orbits; sinh weight uses |A|^2 = 1 / (2 sinh(T/2))^2 times T^2.
inline std::vector<std::pair<double, double>> form_factor_diagonal(const std::vector<SpectrumEntry>& es, const std::vector<double>& edges,
                                                                   FormFactorWeight weight, double T_H = 1) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) fail(ErrorKind::Config, "bin edges must be ascending");
    if (!(T_H > 0)) fail(ErrorKind::Config, "T_H must be positive");
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) out.push_back({edges[k], 0.0});
    for (const auto& e : es) {
        double tau = e.period / T_H;
        auto it = std::upper_bound(edges.begin(), edges.end(), tau);
        if (it == edges.begin() || it == edges.end()) continue;
        std::size_t k = static_cast<std::size_t>(it - edges.begin()) - 1;
        double w = 1;
        if (weight == FormFactorWeight::sinh) {
            double a = 1 / (2 * std::sinh(e.period / 2));
            w = a * a * e.period * e.period;
        }
        out[k].second += w;
    }
    return out;
}

// ---------------------------------------------------------------------------
// brute-force oracle: classes of all words of length <= max_len by exhaustive
// conjugator search (freely reduced conjugators up to conj_len), matrix level.

namespace detail {

struct MatKey {
    long long k[4];
    bool operator==(const MatKey& o) const { return k[0] == o.k[0] && k[1] == o.k[1] && k[2] == o.k[2] && k[3] == o.k[3]; }
};
struct MatKeyHash {
    std::size_t operator()(const MatKey& m) const {
        std::size_t h = 1469598103934665603ULL;
        for (long long v : m.k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
        return h;
    }
};

inline MatKey mat_key(const Moebius<long double>& m) {
    return {{std::llround(m.a * 1e6L), std::llround(m.b * 1e6L), std::llround(m.c * 1e6L), std::llround(m.d * 1e6L)}};
}

inline void freely_reduced_words(int max_len, std::vector<GroupWord>& out) {
    std::vector<GroupWord> layer{GroupWord{}};
    out.push_back(GroupWord{});
    for (int len = 1; len <= max_len; ++len) {
        std::vector<GroupWord> next;
        for (const auto& w : layer)
            for (Letter l = 0; l < kNumLetters; ++l) {
                if (!w.letters.empty() && l == inv_letter(w.letters.back())) continue;
                GroupWord x = w;
                x.letters.push_back(l);
                next.push_back(x);
            }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
}

} // namespace detail

// Canonical words of the primitive classes found by the oracle.
inline std::set<GroupWord> oracle_classes(const SurfaceGroup& grp, int max_len, int conj_len = 6) {
    std::vector<GroupWord> words, conj;
    detail::freely_reduced_words(max_len, words);
    detail::freely_reduced_words(conj_len, conj);
    std::vector<Moebius<long double>> M;
    std::unordered_map<detail::MatKey, std::size_t, detail::MatKeyHash> index;
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < words.size(); ++i) {
        M.push_back(evaluate_word<long double>(grp, words[i]));
        if (M.back().max_abs_diff(Moebius<long double>{}) < 1e-9L) continue; // identity
        index.emplace(detail::mat_key(M.back()), i);
        live.push_back(i);
    }
    std::vector<std::size_t> parent(words.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<Moebius<long double>> H, Hi;
    for (const auto& h : conj) {
        H.push_back(evaluate_word<long double>(grp, h));
        Hi.push_back(H.back().inverse());
    }
    for (std::size_t i : live)
        for (std::size_t c = 0; c < H.size(); ++c) {
            auto it = index.find(detail::mat_key(H[c] * M[i] * Hi[c]));
            if (it != index.end()) parent[find(it->second)] = find(i);
        }
    // proper powers: components holding g^2 or g^3 for a generator letter g
    std::set<std::size_t> powers;
    for (Letter l = 0; l < kNumLetters; ++l)
        for (int k = 2; k <= 3 && k <= max_len; ++k) {
            GroupWord p;
            p.letters.assign(static_cast<std::size_t>(k), l);
            auto it = index.find(detail::mat_key(evaluate_word<long double>(grp, p)));
            if (it != index.end()) powers.insert(find(it->second));
        }
    std::map<std::size_t, GroupWord> rep;
    for (std::size_t i : live) {
        std::size_t r = find(i);
        if (powers.count(r)) continue;
        if (!rep.count(r) || words[i].size() < rep[r].size()) rep[r] = words[i];
    }
    std::set<GroupWord> out;
    for (const auto& [r, w] : rep) out.insert(canonical_class(grp, w).word);
    if (out.size() != rep.size()) fail(ErrorKind::ConstructionFailed, "oracle components share a canonical class");
    return out;
}

} // namespace hgm
