#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hgm/io.hpp"

namespace hgm {

struct RunConfig {
    std::string group{"octagon"};
    int max_word_len{6};
    double eps{0.1};
    double dt{0.02};
    int ball_radius{8};
    double metric_factor{1.0};
    Precision precision{Precision::double_};
    std::uint64_t seed{1};
    std::string output_dir{"."};
    int jobs{1};
};

inline std::string to_string(Precision p) { return p == Precision::double_ ? "double" : "extended"; }

inline Precision precision_from_string(const std::string& s) {
    if (s == "double") return Precision::double_;
    if (s == "extended") return Precision::extended;
    fail(ErrorKind::Config, "precision must be 'double' or 'extended'");
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_as(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T x{};
    in >> x;
    if (in.fail() || !in.eof()) fail(ErrorKind::Config, "bad value for " + key + ": '" + v + "'");
    return x;
}

} // namespace detail

// key=value lines; '#' starts a comment. Keys use the flag names without dashes.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
    using detail::parse_as;
    if (key == "group") c.group = v;
    else if (key == "max-len" || key == "max_word_len") c.max_word_len = parse_as<int>(key, v);
    else if (key == "eps") c.eps = parse_as<double>(key, v);
    else if (key == "dt") c.dt = parse_as<double>(key, v);
    else if (key == "ball-radius" || key == "ball_radius") c.ball_radius = parse_as<int>(key, v);
    else if (key == "metric-factor" || key == "metric_factor") c.metric_factor = parse_as<double>(key, v);
    else if (key == "precision") c.precision = precision_from_string(v);
    else if (key == "seed") c.seed = parse_as<std::uint64_t>(key, v);
    else if (key == "out" || key == "output_dir") c.output_dir = v;
    else if (key == "jobs") c.jobs = parse_as<int>(key, v);
    else fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Config, "config line " + std::to_string(n) + " has no '='");
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c;
    for (const auto& [k, v] : parse_config_text(ss.str())) apply_setting(c, k, v);
    return c;
}

// Checks that need the group (eps against sigma0).
inline void validate(const RunConfig& c, const SurfaceGroup& g) {
    if (c.max_word_len < 1 || c.max_word_len > 12) fail(ErrorKind::Config, "max-len must lie in [1, 12]");
    if (!(c.eps > 0 && c.eps < g.sigma0 / 8)) fail(ErrorKind::Config, "eps must lie in (0, sigma0/8)");
    if (!(c.dt > 0 && c.dt <= 0.05)) fail(ErrorKind::Config, "dt must lie in (0, 0.05]");
    if (c.ball_radius < 2 || c.ball_radius > 10) fail(ErrorKind::Config, "ball-radius must lie in [2, 10]");
    if (!(c.metric_factor > 0)) fail(ErrorKind::Config, "metric-factor must be positive");
    if (c.jobs < 1) fail(ErrorKind::Config, "jobs must be positive");
}

inline Json config_json(const RunConfig& c) {
    return {{"group", c.group},
            {"max_word_len", c.max_word_len},
            {"eps", c.eps},
            {"dt", c.dt},
            {"ball_radius", c.ball_radius},
            {"metric_factor", c.metric_factor},
            {"precision", to_string(c.precision)},
            {"seed", c.seed},
            {"jobs", c.jobs}};
}

} // namespace hgm
