// One line per acceptance criterion; exit status 1 if any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "hgm/config.hpp"
#include "hgm/spectrum.hpp"

using namespace hgm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{true};
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

const GroupPtr& G() {
    static GroupPtr g = octagon_group();
    return g;
}

const std::vector<PartnerFixture>& fixtures() {
    static std::vector<PartnerFixture> fs = load_fixtures(std::string(HGM_FIXTURE_DIR) + "/partners.json");
    return fs;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

GroupWord random_word(std::mt19937_64& rng, int lo, int hi) {
    GroupWord w;
    int n = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    for (int k = 0; k < n; ++k) w.letters.push_back(static_cast<Letter>(rng() % kNumLetters));
    return w;
}

std::optional<PeriodicOrbit> random_orbit(std::mt19937_64& rng, int lo, int hi) {
    GroupWord w = random_word(rng, lo, hi);
    if (cyclic_reduce_word(*G(), w).size() < w.size()) return std::nullopt;
    ConjClass c = canonical_class(*G(), w);
    if (!is_primitive(c)) return std::nullopt;
    return orbit_from_class(G(), c);
}

// --- 1 ---------------------------------------------------------------------
Outcome algebra() {
    Outcome out;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    const Moebiusd dp = d_pi<double>();
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        double t = 2 * U(rng);
        worst = std::max({worst, (a_(t) * dp).max_abs_diff(dp * a_(-t)), (b_(t) * dp).max_abs_diff(dp * c_(-t)),
                          (c_(t) * dp).max_abs_diff(dp * b_(-t))});
        Moebiusd g;
        do g = c_(U(rng)) * b_(U(rng)) * a_(U(rng)) * d_(3 * U(rng));
        while (std::abs(g.a) < 0.01 || std::abs(g.d) < 0.01);
        auto p = decompose_cub(g);
        auto q = decompose_bcu(g);
        worst = std::max({worst, compose_cub(p.u, p.s, p.t).max_abs_diff(g), compose_bcu(q.s, q.u, q.t).max_abs_diff(g)});
        worst = std::max(worst, (dp * dp).max_abs_diff(Moebiusd{}));
    }
    out.require(worst < 1e-10, "worst residual " + fmt("%.3g", worst));
    if (out.pass) out.detail = "1000 cases, worst residual " + fmt("%.2g", worst);
    return out;
}

// --- 2 ---------------------------------------------------------------------
Outcome group() {
    Outcome out;
    auto g = octagon_group();
    out.require(g->relator_residual < 1e-9, "relator residual " + fmt("%.3g", g->relator_residual));
    for (int k = 0; k < kNumLetters; ++k) {
        const auto& m = g->gen(static_cast<Letter>(k));
        out.require(classify(m) == ElementClass::hyperbolic, "generator not hyperbolic");
        out.require(std::abs(m.trace() - 2 * (1 + std::sqrt(2.0))) < 1e-12, "generator trace off");
    }
    out.require(g->sigma0 > 0, "sigma0 not positive");
    out.require(std::abs(g->sigma0 - 1.9455634652892975) < 1e-9, "sigma0 moved from its pinned value");
    if (out.pass) out.detail = "residual " + fmt("%.2g", g->relator_residual) + ", sigma0 " + fmt("%.16g", g->sigma0);
    return out;
}

// --- 3 ---------------------------------------------------------------------
Outcome closing() {
    Outcome out;
    std::mt19937_64 rng(303);
    int n1 = 0, n2 = 0;
    for (int it = 0; it < 4000 && (n1 < 20 || n2 < 20); ++it) {
        auto o = random_orbit(rng, 6, 9);
        if (!o) continue;
        for (const auto& nr : near_returns(*o, 0.2)) {
            double T = static_cast<double>(nr.t2 - nr.t1), us = std::abs(nr.u * nr.s);
            if (us < 1e-4 || us > 1e-2 || T < 6 || T > 14) continue;
            QuotientPoint x = o->at(nr.t1), y = flow(x, T);
            ClosingOptions co;
            co.throw_on_violation = false;
            auto r1 = close_orbit_I(x, T, section_probe(x, y, SectionVariant::P), co);
            out.require(r1.bound_report.ok(), "closing I: " + r1.bound_report.summary());
            out.require(r1.new_orbit.cls == canonical_class(*G(), r1.zeta_word), "closing I class differs from {zeta}");
            ++n1;
            auto sp = section_probe(x, y, SectionVariant::Pprime);
            if (std::abs(sp.residual_time) < 0.1) {
                auto r2 = close_orbit_II(x, T, sp, co);
                out.require(r2.bound_report.ok(), "closing II: " + r2.bound_report.summary());
                out.require(r2.new_orbit.cls == canonical_class(*G(), r2.zeta_word), "closing II class differs from {zeta}");
                ++n2;
            }
            break;
        }
    }
    out.require(n1 >= 20 && n2 >= 20, "too few near-returns");
    if (out.pass) out.detail = std::to_string(n1) + " closing I and " + std::to_string(n2) + " closing II instances";
    return out;
}

// --- 4 ---------------------------------------------------------------------
Outcome connecting() {
    Outcome out;
    std::mt19937_64 rng(404);
    int n = 0;
    for (int it = 0; it < 4000 && n < 20; ++it) {
        auto o1 = random_orbit(rng, 3, 4), o2 = random_orbit(rng, 3, 4);
        if (!o1 || !o2) continue;
        for (const auto& h : cross_encounters(*o1, *o2, 0.2)) {
            double us = std::abs(h.u * h.s);
            if (us < 1e-4 || us > 1e-2) continue;
            PeriodicOrbit a = shift(*o1, h.t1), b = shift(*o2, h.t2);
            double eps = 1.01 * std::max(std::abs(h.u), std::abs(h.s));
            auto sc = section_coords(a.base, b.base, SectionVariant::P, eps);
            if (!sc) continue;
            ClosingOptions co;
            co.throw_on_violation = false;
            auto r = connect_orbits(a, b, *sc, eps, co);
            out.require(r.bound_report.ok(), "connect: " + r.bound_report.summary());
            out.require(r.new_orbit.cls == canonical_class(*G(), a.word * b.word), "connected class differs");
            ++n;
            break;
        }
    }
    out.require(n >= 20, "only " + std::to_string(n) + " connecting instances");
    int pairs = 0;
    while (pairs < 100) {
        GroupWord x = random_word(rng, 1, 5), y = random_word(rng, 1, 5);
        if (cyclic_reduce_word(*G(), x * y).empty()) continue;
        ++pairs;
        out.require(canonical_class(*G(), x * y) == canonical_class(*G(), y * x), "{xy} != {yx}");
    }
    if (out.pass) out.detail = std::to_string(n) + " connections, 100 commutation pairs";
    return out;
}

// --- 5, 6, 7 ---------------------------------------------------------------
struct FixtureRun {
    PartnerFixture f;
    PeriodicOrbit o;
    PartnerResult r;
};

std::vector<FixtureRun> run_topology(Topology t) {
    std::vector<FixtureRun> out;
    PartnerOptions po;
    po.throw_on_violation = false;
    for (const auto& f : fixtures()) {
        if (f.topology != t) continue;
        PeriodicOrbit o = orbit_from_class(G(), canonical_class(*G(), f.cls.word));
        out.push_back({f, o, run_fixture(o, f, po)});
    }
    return out;
}

void common_checks(Outcome& out, const FixtureRun& x) {
    const auto& r = x.r;
    const std::string w = to_string(x.f.cls.word);
    out.require(r.bound_report.ok(), w + ": " + r.bound_report.summary());
    out.require(r.partner.cls == r.predicted_class, w + ": partner class differs from prediction");
    out.require(r.chained_class == r.predicted_class, w + ": chained class differs from prediction");
    out.require(r.predicted_class == x.f.predicted, w + ": prediction differs from the frozen fixture");
    out.require(r.certificate.has_value(), w + ": no partnership certificate");
}

Outcome single_antiparallel() {
    Outcome out;
    auto rs = run_topology(Topology::single_antiparallel);
    for (const auto& x : rs) {
        common_checks(out, x);
        out.require(x.r.predicted_class == canonical_class(*G(), inverse(x.r.gammas[0]) * x.r.gammas[1]), "prediction is not {g1^-1 g2}");
        out.require(x.r.certificate && x.r.certificate->closeness < 8 * x.r.eps, "certificate closeness above 8 eps");
    }
    out.require(rs.size() >= 20, "only " + std::to_string(rs.size()) + " fixtures");
    if (out.pass) out.detail = std::to_string(rs.size()) + " fixtures";
    return out;
}

Outcome four_leg() {
    Outcome out;
    std::string counts;
    for (Topology t : {Topology::aas, Topology::ppi, Topology::api}) {
        auto rs = run_topology(t);
        for (const auto& x : rs) {
            common_checks(out, x);
            const auto& g = x.r.gammas;
            GroupWord expect = t == Topology::aas   ? inverse(g[0]) * g[3] * inverse(g[2]) * g[1]
                               : t == Topology::ppi ? g[1] * g[0] * g[3] * g[2]
                                                    : inverse(g[0]) * inverse(g[1]) * g[3] * g[2];
            out.require(x.r.predicted_class == canonical_class(*G(), expect), "prediction does not follow the word rewrite");
            out.require(x.r.distinctness, to_string(x.f.cls.word) + ": partner not distinct");
        }
        out.require(rs.size() >= 10, std::string(to_string(t)) + ": too few fixtures");
        counts += std::string(counts.empty() ? "" : ", ") + to_string(t) + " " + std::to_string(rs.size());
        if (t != Topology::aas) continue;
        int swapped = 0;
        PartnerOptions po;
        po.throw_on_violation = false;
        for (const auto& x : rs) {
            try {
                auto s = partner_aas(x.o, resolve(x.o, x.f.encounters[1]), resolve(x.o, x.f.encounters[0]), po);
                if (!s.bound_report.ok()) continue;
                ++swapped;
                out.require(orbits_coincide(s.partner, x.r.partner, 1e-6), "aas construction orders disagree");
            } catch (const Error&) {
            }
        }
        out.require(swapped >= 5, "too few aas order swaps");
        counts += " (" + std::to_string(swapped) + " order swaps)";
    }
    if (out.pass) out.detail = counts;
    return out;
}

Outcome crossings() {
    Outcome out;
    auto rs = run_topology(Topology::two_crossings);
    std::size_t checked = 0;
    for (const auto& x : rs) {
        for (const auto& c : detect_self_crossings(x.o)) {
            ++checked;
            out.require(std::exp(-c.L) < std::pow(std::cos(c.theta / 2), 2), "crossing violates e^-L < cos^2(theta/2)");
        }
        common_checks(out, x);
        double phi = std::max(kPi - x.f.crossings[0].theta, kPi - x.f.crossings[1].theta);
        out.require(phi < 1.0 / 3, "crossing angle not small");
        out.require(x.r.partner.period < x.o.period, "partner not shorter");
    }
    out.require(rs.size() >= 5, "too few crossing fixtures");
    if (out.pass) out.detail = std::to_string(rs.size()) + " fixtures, " + std::to_string(checked) + " crossings checked";
    return out;
}

// --- 8 ---------------------------------------------------------------------
Outcome spectrum() {
    Outcome out;
    for (int k = 1; k <= 3; ++k) {
        std::set<GroupWord> en;
        for (const auto& e : enumerate_classes(*G(), k)) en.insert(e.cls.word);
        out.require(en == oracle_classes(*G(), k), "oracle mismatch at max_len " + std::to_string(k));
    }
    auto es = enumerate_classes(*G(), 8);
    double worst = 0;
    for (const auto& e : es) {
        long double tr = std::fabs(evaluate_word<long double>(*G(), e.cls.word).trace());
        worst = std::max(worst, std::abs(e.period - static_cast<double>(2 * std::acosh(tr / 2))));
    }
    out.require(worst <= 1e-10, "period/trace error " + fmt("%.3g", worst));
    if (out.pass) out.detail = std::to_string(es.size()) + " classes at max_len 8, worst period/trace error " + fmt("%.2g", worst);
    return out;
}

// --- 9 ---------------------------------------------------------------------
int sh(const std::string& args) {
    int st = std::system((std::string(HGM_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome out;
    const std::string fx = std::string(HGM_FIXTURE_DIR) + "/partners.json";
    int aas = 0;
    while (fixtures()[static_cast<std::size_t>(aas)].topology != Topology::aas) ++aas;
    const std::vector<std::string> runs = {
        "group-info",
        "--max-len 5 enumerate",
        "--max-len 5 spectrum --weight sinh",
        "orbit --word abCdAb",
        "encounters --word " + to_string(fixtures()[0].cls.word),
        "partner --fixtures " + fx + " --index 0",
        "partner --fixtures " + fx + " --index " + std::to_string(aas),
        "verify --word abCdAb --shift 1.3",
        "fixtures --per-topology 1 --topologies single_antiparallel,ppi",
    };
    fs::path base = fs::temp_directory_path() / ("hgm_accept_" + std::to_string(::getpid()));
    std::vector<fs::path> dirs;
    for (const char* name : {"a", "b"}) {
        fs::path d = base / name;
        fs::remove_all(d);
        fs::create_directories(d);
        dirs.push_back(d);
        for (std::size_t k = 0; k < runs.size(); ++k) {
            fs::path sub = d / std::to_string(k);
            int rc = sh("--seed 7 --out " + sub.string() + " " + runs[k]);
            out.require(rc == 0, "'" + runs[k] + "' exited with " + std::to_string(rc));
        }
    }
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
        if (!e.is_regular_file()) continue;
        fs::path other = dirs[1] / fs::relative(e.path(), dirs[0]);
        ++files;
        out.require(fs::exists(other) && slurp(e.path()) == slurp(other), "differs: " + fs::relative(e.path(), dirs[0]).string());
    }
    out.require(files >= static_cast<int>(runs.size()), "too few report files");
    fs::remove_all(base);
    if (out.pass) out.detail = std::to_string(files) + " report files byte-identical";
    return out;
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> cs = {
        {1, "algebraic identities", 1, algebra},
        {2, "group construction", 30, group},
        {3, "closing lemmas", 120, closing},
        {4, "connecting lemma", 120, connecting},
        {5, "single antiparallel partners", 180, single_antiparallel},
        {6, "aas / ppi / api partners", 600, four_leg},
        {7, "self-crossings", 180, crossings},
        {8, "spectrum", 300, spectrum},
        {9, "determinism", 600, determinism},
    };
    G();
    fixtures();
    bool all = true;
    for (const auto& c : cs) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) {
            o.pass = false;
            o.detail += " (over the " + fmt("%.0f", c.limit_s) + " s budget)";
        }
        all = all && o.pass;
        std::printf("criterion %d %-30s %s  %7.2f s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
