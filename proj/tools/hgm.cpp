#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hgm/config.hpp"
#include "hgm/spectrum.hpp"

using namespace hgm;

namespace {

struct Ctx {
    RunConfig cfg;
    GroupPtr grp;
    std::string command;
};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string path_in(const Ctx& c, const std::string& name) { return (std::filesystem::path(c.cfg.output_dir) / name).string(); }

Json report(const Ctx& c) {
    Json j;
    j["command"] = c.command;
    j["config"] = config_json(c.cfg);
    return j;
}

void emit(const Ctx& c, const std::string& name, const Json& j) { write_file(path_in(c, name), dump(j)); }

// CSV files start with the echoed config as a comment line.
std::string csv_head(const Ctx& c) {
    std::string s = "#";
    const Json cfg = config_json(c.cfg);
    for (const auto& [k, v] : cfg.items()) s += " " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    return s + "\n";
}

int violations(const Ctx& c, const Json& list) {
    Json j = report(c);
    j["violations"] = list;
    emit(c, "violations.json", j);
    std::cerr << "bound check failed: " << list.size() << " violation(s), see " << path_in(c, "violations.json") << "\n";
    return 3;
}

Json failing_entries(const BoundReport& r) {
    Json out = Json::array();
    for (const auto& e : bound_report_json(r))
        if (!e.at("ok").get<bool>()) out.push_back(e);
    return out;
}

PeriodicOrbit orbit_of(const Ctx& c, const std::string& text) {
    GroupWord w = parse_word(text);
    return orbit_from_class(c.grp, canonical_class(*c.grp, w));
}

double trace_period_error(const SurfaceGroup& grp, const ConjClass& cls) {
    long double tr = std::fabs(evaluate_word<long double>(grp, cls.word).trace());
    return std::fabs(static_cast<double>(cls.period - 2 * std::acosh(tr / 2)));
}

// --- subcommands -----------------------------------------------------------

int cmd_group_info(const Ctx& c, const std::string& save) {
    Json j = report(c);
    j["generators"] = group_json(*c.grp)["generators"];
    j["relator"] = to_string(c.grp->relator);
    j["relator_residual"] = c.grp->relator_residual;
    j["sigma0"] = c.grp->sigma0;
    j["sigma0_len"] = c.grp->sigma0_len;
    j["ball_size"] = c.grp->ball.size();
    j["ring_size"] = c.grp->ring_size;
    emit(c, "group_info.json", j);
    if (!save.empty()) write_file(save, dump(group_json(*c.grp)));
    std::cout << dump(j);
    return 0;
}

int cmd_enumerate(const Ctx& c) {
    auto es = enumerate_classes(*c.grp, c.cfg.max_word_len);
    std::ostringstream out;
    out << csv_head(c) << "period,multiplicity,word\n";
    for (const auto& e : es) out << num(e.period) << "," << e.multiplicity << "," << to_string(e.cls.word) << "\n";
    write_file(path_in(c, "classes.csv"), out.str());
    std::cout << es.size() << " primitive classes up to length " << c.cfg.max_word_len << "\n";
    return 0;
}

int cmd_orbit(const Ctx& c, const std::string& word, bool with_encounters) {
    PeriodicOrbit o = orbit_of(c, word);
    Json j = report(c);
    std::vector<Crossing> cs;
    if (!with_encounters) cs = detect_self_crossings(o, c.cfg.dt);
    auto es = detect_encounters(o, c.cfg.eps);
    j["orbit"] = orbit_json(o, cs, es);
    j["input_word"] = word;
    double err = trace_period_error(*c.grp, o.cls);
    j["trace_period_error"] = err;
    Json bad = Json::array();
    if (err > 1e-10) bad.push_back({{"name", "trace_period"}, {"lhs", err}, {"rhs", 1e-10}});
    if (!with_encounters) {
        // every crossing must obey e^{-L} < cos^2(theta/2)
        for (const auto& x : cs) {
            double lhs = std::exp(-x.L), rhs = std::pow(std::cos(x.theta / 2), 2);
            if (!(lhs < rhs)) bad.push_back({{"name", "crossing_length"}, {"lhs", lhs}, {"rhs", rhs}, {"tau", x.tau}});
        }
    }
    emit(c, with_encounters ? "encounters.json" : "orbit.json", j);
    std::cout << to_string(o.cls.word) << " period " << num(o.period) << ", " << cs.size() << " crossings, " << es.size() << " encounters\n";
    return bad.empty() ? 0 : violations(c, bad);
}

struct PartnerArgs {
    std::string fixtures, word, topology;
    int index{0};
    std::vector<int> pick;
};

std::string summary_line(const PartnerResult& r) {
    return std::string(to_string(r.topology)) + ": " + to_string(r.original.cls.word) + " -> " + to_string(r.partner.cls.word) +
           ", T' - T = " + num(r.action_diff) + ", bounds " + (r.bound_report.ok() ? "ok" : "violated");
}

int cmd_partner(const Ctx& c, const PartnerArgs& a) {
    PartnerOptions po;
    po.metric_factor = c.cfg.metric_factor;
    po.throw_on_violation = false;
    PartnerResult r;
    Json j = report(c);
    if (!a.fixtures.empty()) {
        auto fs = load_fixtures(a.fixtures);
        if (a.index < 0 || a.index >= static_cast<int>(fs.size())) fail(ErrorKind::Config, "fixture index out of range");
        const auto& f = fs[static_cast<std::size_t>(a.index)];
        PeriodicOrbit o = orbit_from_class(c.grp, canonical_class(*c.grp, f.cls.word));
        r = run_fixture(o, f, po);
        j["fixture"] = fixture_json(f);
    } else {
        if (a.word.empty() || a.topology.empty()) fail(ErrorKind::Config, "partner needs --fixtures or --word with --topology");
        Topology t = topology_from_string(a.topology);
        PeriodicOrbit o = orbit_of(c, a.word);
        auto at = [&](std::size_t k) {
            if (k >= a.pick.size()) fail(ErrorKind::Config, "--pick needs more indices");
            return a.pick[k];
        };
        if (t == Topology::two_crossings) {
            auto cs = detect_self_crossings(o, c.cfg.dt);
            auto get = [&](int i) {
                if (i < 0 || i >= static_cast<int>(cs.size())) fail(ErrorKind::Config, "crossing index out of range");
                return cs[static_cast<std::size_t>(i)];
            };
            r = crossing_partner(o, get(at(0)), get(at(1)), po);
        } else {
            auto es = detect_encounters(o, c.cfg.eps);
            auto get = [&](int i) {
                if (i < 0 || i >= static_cast<int>(es.size())) fail(ErrorKind::Config, "encounter index out of range");
                return es[static_cast<std::size_t>(i)];
            };
            switch (t) {
            case Topology::single_antiparallel: r = partner_single_antiparallel(o, get(at(0)), po); break;
            case Topology::aas: r = partner_aas(o, get(at(0)), get(at(1)), po); break;
            case Topology::ppi: r = partner_ppi(o, get(at(0)), get(at(1)), po); break;
            default: r = partner_api(o, get(at(0)), get(at(1)), po); break;
            }
        }
    }
    j["partner"] = partner_json(r);
    emit(c, "partner.json", j);
    Json bad = failing_entries(r.bound_report);
    if (!(r.partner.cls == r.predicted_class))
        bad.push_back({{"name", "class_prediction"}, {"partner", to_string(r.partner.cls.word)}, {"predicted", to_string(r.predicted_class.word)}});
    if (!r.certificate) bad.push_back({{"name", "certificate"}, {"found", false}});
    std::cout << summary_line(r) << "\n";
    return bad.empty() ? 0 : violations(c, bad);
}

int cmd_verify(const Ctx& c, const std::string& word, const std::string& other, double shift_by, double eps) {
    PeriodicOrbit o = orbit_of(c, word);
    PeriodicOrbit p = other.empty() ? shift(o, shift_by) : orbit_of(c, other);
    if (!(eps > 0)) eps = 8 * c.cfg.eps * c.cfg.metric_factor;
    auto cert = verify_partnership(o, p, eps);
    Json j = report(c);
    j["orbit"] = to_string(o.cls.word);
    j["other"] = to_string(p.cls.word);
    j["eps"] = eps;
    j["certificate"] = cert ? certificate_json(*cert) : Json(nullptr);
    emit(c, "verify.json", j);
    std::cout << (cert ? "certified with L = " + std::to_string(cert->L) : std::string("no certificate")) << "\n";
    if (cert) return 0;
    return violations(c, Json::array({{{"name", "certificate"}, {"found", false}, {"eps", eps}}}));
}

struct SpectrumArgs {
    int bins{20};
    double t_h{0};
    std::string weight{"unit"};
    bool catalog{false};
    int catalog_len{0};
};

int cmd_spectrum(const Ctx& c, const SpectrumArgs& a) {
    auto es = enumerate_classes(*c.grp, c.cfg.max_word_len);
    double worst = 0;
    for (const auto& e : es) worst = std::max(worst, trace_period_error(*c.grp, e.cls));

    std::ostringstream ls;
    ls << csv_head(c) << "period,multiplicity,word\n";
    std::size_t k = 0;
    for (const auto& [T, m] : length_spectrum(es)) {
        std::string words;
        for (int i = 0; i < m; ++i, ++k) words += (i ? " " : "") + to_string(es[k].cls.word);
        ls << num(T) << "," << m << "," << words << "\n";
    }
    write_file(path_in(c, "length_spectrum.csv"), ls.str());

    if (a.bins < 1) fail(ErrorKind::Config, "--bins must be positive");
    double T_H = a.t_h > 0 ? a.t_h : (es.empty() ? 1.0 : es.back().period);
    std::vector<double> edges;
    for (int b = 0; b <= a.bins; ++b) edges.push_back(b * (1 + 1e-9) / a.bins);
    FormFactorWeight w = a.weight == "sinh" ? FormFactorWeight::sinh : FormFactorWeight::unit;
    if (a.weight != "unit" && a.weight != "sinh") fail(ErrorKind::Config, "--weight must be 'unit' or 'sinh'");
    std::ostringstream ff;
    ff << csv_head(c) << "# desk-scale, truncated spectrum: not a reproduction of K(tau) = 2 tau\n";
    ff << "# T_H=" << num(T_H) << " weight=" << a.weight << "\n";
    ff << "tau,K\n";
    auto K = form_factor_diagonal(es, edges, w, T_H);
    for (const auto& [tau, v] : K) ff << num(tau) << "," << num(v) << "\n";
    write_file(path_in(c, "form_factor.csv"), ff.str());

    Json j = report(c);
    j["classes"] = es.size();
    j["distinct_periods"] = length_spectrum(es).size();
    j["max_trace_period_error"] = worst;
    if (a.catalog) {
        CatalogOptions co;
        co.eps = c.cfg.eps;
        co.partner.metric_factor = c.cfg.metric_factor;
        co.jobs = c.cfg.jobs;
        auto cat = pair_catalog(c.grp, a.catalog_len > 0 ? a.catalog_len : c.cfg.max_word_len, co);
        Json pc = report(c);
        pc["pairs"] = Json::array();
        for (const auto& e : cat)
            pc["pairs"].push_back({{"topology", to_string(e.topology)},
                                   {"class_a", to_string(e.class_a.word)},
                                   {"class_b", to_string(e.class_b.word)},
                                   {"action_diff", e.action_diff},
                                   {"target", e.target},
                                   {"T_mean", e.T_mean},
                                   {"bound_report", bound_report_json(e.bound_report)}});
        emit(c, "pair_catalog.json", pc);
        j["catalog_pairs"] = cat.size();
    }
    emit(c, "spectrum.json", j);
    std::cout << es.size() << " classes, max |period - 2 acosh(tr/2)| = " << num(worst) << "\n";
    if (worst > 1e-10) return violations(c, Json::array({{{"name", "trace_period"}, {"lhs", worst}, {"rhs", 1e-10}}}));
    return 0;
}

int cmd_fixtures(const Ctx& c, int per_topology, const std::vector<std::string>& topos, const std::string& file) {
    CorpusOptions co;
    co.seed = c.cfg.seed;
    co.per_topology = per_topology;
    co.detect_eps = c.cfg.eps;
    Json j = report(c);
    j["fixtures"] = Json::array();
    for (const auto& name : topos) {
        Topology t = topology_from_string(name);
        auto fs = generate_corpus(c.grp, t, co);
        for (const auto& f : fs) j["fixtures"].push_back(fixture_json(f));
        std::cout << name << ": " << fs.size() << " fixtures\n";
    }
    write_file(file.empty() ? path_in(c, "partners.json") : file, dump(j));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partner orbits of the geodesic flow on a genus-2 surface"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig flags;
    std::string config_path, precision;
    auto* o_group = app.add_option("--group", flags.group, "octagon or a group file");
    auto* o_len = app.add_option("--max-len", flags.max_word_len, "word-length cap");
    auto* o_eps = app.add_option("--eps", flags.eps, "encounter radius");
    auto* o_dt = app.add_option("--dt", flags.dt, "sampling step");
    auto* o_ball = app.add_option("--ball-radius", flags.ball_radius, "word radius of the group ball cache");
    auto* o_mf = app.add_option("--metric-factor", flags.metric_factor, "distance threshold factor");
    auto* o_prec = app.add_option("--precision", precision, "double or extended");
    auto* o_seed = app.add_option("--seed", flags.seed, "corpus seed");
    auto* o_out = app.add_option("--out", flags.output_dir, "output directory");
    auto* o_jobs = app.add_option("--jobs", flags.jobs, "worker threads");
    app.add_option("--config", config_path, "key=value config file");

    std::string save, word, other;
    double shift_by = 1.0, verify_eps = 0;
    PartnerArgs pa;
    SpectrumArgs sa;
    int per_topology = 20;
    std::vector<std::string> topos{"single_antiparallel", "aas", "ppi", "api", "two_crossings"};
    std::string fixture_file;

    auto* s_info = app.add_subcommand("group-info", "generators, relator residual, sigma0, ball size");
    s_info->add_option("--save", save, "write the group to this file");
    auto* s_enum = app.add_subcommand("enumerate", "primitive classes up to --max-len (classes.csv)");
    auto* s_orbit = app.add_subcommand("orbit", "periodic orbit of a word (orbit.json)");
    s_orbit->add_option("--word", word, "word, letters aAbB.. or signed indices")->required();
    auto* s_enc = app.add_subcommand("encounters", "2-encounters of a word's orbit (encounters.json)");
    s_enc->add_option("--word", word, "word")->required();
    auto* s_part = app.add_subcommand("partner", "construct a partner orbit (partner.json)");
    s_part->add_option("--fixtures", pa.fixtures, "fixture file");
    s_part->add_option("--index", pa.index, "fixture index");
    s_part->add_option("--word", pa.word, "word");
    s_part->add_option("--topology", pa.topology, "single_antiparallel, aas, ppi, api or two_crossings");
    s_part->add_option("--pick", pa.pick, "encounter (or crossing) indices")->delimiter(',');
    auto* s_ver = app.add_subcommand("verify", "certify that two orbits are partners (verify.json)");
    s_ver->add_option("--word", word, "word")->required();
    s_ver->add_option("--other", other, "second word (default: the orbit itself, shifted)");
    s_ver->add_option("--shift", shift_by, "flow shift applied when --other is absent");
    s_ver->add_option("--verify-eps", verify_eps, "closeness threshold (default 8 eps metric-factor)");
    auto* s_spec = app.add_subcommand("spectrum", "length spectrum and diagonal form factor");
    s_spec->add_option("--bins", sa.bins, "form factor bins");
    s_spec->add_option("--t-h", sa.t_h, "time scale T_H (default: longest period)");
    s_spec->add_option("--weight", sa.weight, "unit or sinh");
    s_spec->add_flag("--catalog", sa.catalog, "also write pair_catalog.json");
    s_spec->add_option("--catalog-len", sa.catalog_len, "word-length cap for the catalog");
    auto* s_fix = app.add_subcommand("fixtures", "generate the partner fixture corpus (partners.json)");
    s_fix->add_option("--per-topology", per_topology, "fixtures per topology");
    s_fix->add_option("--topologies", topos, "topologies to generate")->delimiter(',');
    s_fix->add_option("--file", fixture_file, "output file (default OUT/partners.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Ctx c;
    c.command = app.get_subcommands().front()->get_name();
    try {
        c.cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (o_group->count()) c.cfg.group = flags.group;
        if (o_len->count()) c.cfg.max_word_len = flags.max_word_len;
        if (o_eps->count()) c.cfg.eps = flags.eps;
        if (o_dt->count()) c.cfg.dt = flags.dt;
        if (o_ball->count()) c.cfg.ball_radius = flags.ball_radius;
        if (o_mf->count()) c.cfg.metric_factor = flags.metric_factor;
        if (o_prec->count()) c.cfg.precision = precision_from_string(precision);
        if (o_seed->count()) c.cfg.seed = flags.seed;
        if (o_out->count()) c.cfg.output_dir = flags.output_dir;
        if (o_jobs->count()) c.cfg.jobs = flags.jobs;
        precision_mode() = c.cfg.precision;
        GroupOptions go;
        go.ball_radius = c.cfg.ball_radius;
        c.grp = load_group(c.cfg.group, go);
        validate(c.cfg, *c.grp);
        std::filesystem::create_directories(c.cfg.output_dir);

        if (s_info->parsed()) return cmd_group_info(c, save);
        if (s_enum->parsed()) return cmd_enumerate(c);
        if (s_orbit->parsed()) return cmd_orbit(c, word, false);
        if (s_enc->parsed()) return cmd_orbit(c, word, true);
        if (s_part->parsed()) return cmd_partner(c, pa);
        if (s_ver->parsed()) return cmd_verify(c, word, other, shift_by, verify_eps);
        if (s_spec->parsed()) return cmd_spectrum(c, sa);
        if (s_fix->parsed()) return cmd_fixtures(c, per_topology, topos, fixture_file);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        if (!c.cfg.output_dir.empty() && std::filesystem::is_directory(c.cfg.output_dir)) {
            Json j = report(c);
            j["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
            try {
                emit(c, "violations.json", j);
            } catch (const Error&) {
            }
        }
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
