#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgm/corpus.hpp"

namespace hgm {

using Json = nlohmann::json;

inline Json word_json(const GroupWord& w) { return to_signed(w); }
inline GroupWord word_from_json(const Json& j) { return from_signed(j.get<std::vector<int>>()); }

template <class Real>
Json matrix_json(const Moebius<Real>& m) {
    return Json::array({Json::array({static_cast<double>(m.a), static_cast<double>(m.b)}),
                        Json::array({static_cast<double>(m.c), static_cast<double>(m.d)})});
}

inline Moebiusd matrix_from_json(const Json& j) {
    Moebiusd m;
    m.a = j.at(0).at(0).get<double>();
    m.b = j.at(0).at(1).get<double>();
    m.c = j.at(1).at(0).get<double>();
    m.d = j.at(1).at(1).get<double>();
    return m;
}

inline Topology topology_from_string(const std::string& s) {
    for (auto t : {Topology::single_antiparallel, Topology::aas, Topology::ppi, Topology::api, Topology::two_crossings})
        if (s == to_string(t)) return t;
    fail(ErrorKind::Config, "unknown topology '" + s + "'");
}

inline EncounterKind kind_from_string(const std::string& s) {
    if (s == "parallel") return EncounterKind::parallel;
    if (s == "antiparallel") return EncounterKind::antiparallel;
    fail(ErrorKind::Config, "unknown encounter kind '" + s + "'");
}

inline Json crossing_json(const Crossing& c) { return {{"L", c.L}, {"sign", c.sign}, {"tau", c.tau}, {"theta", c.theta}}; }

inline Crossing crossing_from_json(const Json& j) {
    Crossing c;
    c.tau = j.at("tau").get<double>();
    c.L = j.at("L").get<double>();
    c.theta = j.at("theta").get<double>();
    c.sign = j.at("sign").get<int>();
    return c;
}

inline Json encounter_json(const Encounter& e) {
    return {{"kind", to_string(e.kind)}, {"t1", e.t1()}, {"t2", e.t2()}, {"u", e.u()}, {"s", e.s()}};
}

inline Json orbit_json(const PeriodicOrbit& o, const std::vector<Crossing>& cs = {}, const std::vector<Encounter>& es = {}) {
    Json j;
    j["class_word"] = word_json(o.cls.word);
    j["class_text"] = to_string(o.cls.word);
    j["period"] = o.period;
    j["base_matrix"] = matrix_json(o.conjugator);
    j["crossings"] = Json::array();
    for (const auto& c : cs) j["crossings"].push_back(crossing_json(c));
    j["encounters"] = Json::array();
    for (const auto& e : es) j["encounters"].push_back(encounter_json(e));
    return j;
}

inline Json bound_report_json(const BoundReport& r) {
    Json j = Json::array();
    for (const auto& e : r.entries)
        j.push_back({{"name", e.name}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"slack", e.slack}, {"tol", e.tol}, {"ok", e.slack >= -e.tol}});
    return j;
}

inline Json certificate_json(const PartnershipCertificate& c) {
    Json j;
    j["L"] = c.L;
    j["t"] = c.t;
    j["t_partner"] = c.tp;
    j["permutation"] = c.perm;
    std::vector<int> rev;
    for (bool b : c.reversed) rev.push_back(b ? 1 : 0);
    j["reversed"] = rev;
    j["leg_closeness"] = c.leg_closeness;
    j["closeness"] = c.closeness;
    return j;
}

inline Json partner_json(const PartnerResult& r) {
    Json j;
    j["topology"] = to_string(r.topology);
    j["original_word"] = word_json(r.original.cls.word);
    j["partner_word"] = word_json(r.partner.cls.word);
    j["predicted_word"] = word_json(r.predicted_class.word);
    j["chained_word"] = word_json(r.chained_class.word);
    j["original_text"] = to_string(r.original.cls.word);
    j["partner_text"] = to_string(r.partner.cls.word);
    j["original_period"] = r.original.period;
    j["partner_period"] = r.partner.period;
    j["action_diff"] = r.action_diff;
    j["target"] = r.target;
    j["eps"] = r.eps;
    j["closeness"] = r.closeness;
    j["distinctness"] = r.distinctness;
    j["legs"] = r.legs;
    j["u"] = r.u;
    j["s"] = r.s;
    j["bound_report"] = bound_report_json(r.bound_report);
    j["bounds_ok"] = r.bound_report.ok();
    j["certificate"] = r.certificate ? certificate_json(*r.certificate) : Json(nullptr);
    return j;
}

inline Json fixture_json(const PartnerFixture& f) {
    Json j;
    j["topology"] = to_string(f.topology);
    j["class_word"] = word_json(f.cls.word);
    j["predicted_word"] = word_json(f.predicted.word);
    j["period"] = f.period;
    j["partner_period"] = f.partner_period;
    j["encounters"] = Json::array();
    for (const auto& e : f.encounters) j["encounters"].push_back({{"kind", to_string(e.kind)}, {"t1", e.t1}, {"t2", e.t2}});
    j["crossings"] = Json::array();
    for (const auto& c : f.crossings) j["crossings"].push_back(crossing_json(c));
    return j;
}

// Class words in fixtures are canonical already; they are stored, not recomputed.
inline PartnerFixture fixture_from_json(const Json& j) {
    PartnerFixture f;
    f.topology = topology_from_string(j.at("topology").get<std::string>());
    f.cls.word = word_from_json(j.at("class_word"));
    f.predicted.word = word_from_json(j.at("predicted_word"));
    f.period = j.at("period").get<double>();
    f.partner_period = j.at("partner_period").get<double>();
    for (const auto& e : j.at("encounters"))
        f.encounters.push_back({kind_from_string(e.at("kind").get<std::string>()), e.at("t1").get<double>(), e.at("t2").get<double>()});
    for (const auto& c : j.at("crossings")) f.crossings.push_back(crossing_from_json(c));
    return f;
}

inline std::vector<PartnerFixture> load_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open fixture file " + path);
    Json j = Json::parse(in);
    std::vector<PartnerFixture> out;
    for (const auto& f : j.at("fixtures")) out.push_back(fixture_from_json(f));
    return out;
}

// Sorted keys (std::map), shortest round-trip doubles, trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Config, "cannot write " + path);
    out << text;
}

// Group files: the four generators gamma_0..gamma_3 and the relator.
inline Json group_json(const SurfaceGroup& g) {
    Json j;
    j["generators"] = Json::array();
    for (int k = 0; k < kNumGens; ++k) j["generators"].push_back(matrix_json(g.gen(letter(k, false))));
    j["relator"] = word_json(g.relator);
    return j;
}

inline GroupPtr group_from_json(const Json& j, const GroupOptions& opt = {}) {
    std::array<Moebiusd, kNumGens> g4;
    const auto& gs = j.at("generators");
    if (gs.size() != static_cast<std::size_t>(kNumGens)) fail(ErrorKind::Config, "group file needs four generators");
    for (int k = 0; k < kNumGens; ++k) g4[static_cast<std::size_t>(k)] = matrix_from_json(gs.at(static_cast<std::size_t>(k)));
    return finish_group(g4, word_from_json(j.at("relator")), opt);
}

inline GroupPtr load_group(const std::string& spec, const GroupOptions& opt = {}) {
    if (spec == "octagon") return octagon_group(opt);
    std::ifstream in(spec);
    if (!in) fail(ErrorKind::Config, "cannot open group file " + spec);
    return group_from_json(Json::parse(in), opt);
}

} // namespace hgm
