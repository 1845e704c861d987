#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsa/csv.hpp"
#include "dsa/error.hpp"
#include "dsa/pps.hpp"
#include "dsa/sampler.hpp"

namespace dsa {

/// Resolved run configuration. Config keys use the conventional symbols
/// (B or alpha2, theta, d, sigma, N, M, beta_bias, ...); the parsed form
/// is canonical, so parse(render(c)) == c for every valid c.
struct RunConfig {
    double weight_diff = 0.0; // B
    double theta = 0.0;
    double shift = 0.0;       // d
    double width = 1.0;       // sigma
    std::uint64_t particles = 100000; // N
    std::uint64_t seed = 42;
    std::uint64_t replicates = 100;   // M
    bool histograms = false;
    double offset = 0.0;
    std::uint64_t background = 0;     // counts per channel
    std::optional<double> bias;       // beta_bias
    std::optional<std::string> out_dir;
    std::string format = "csv";

    bool operator==(const RunConfig&) const = default;

    PpsConfig pps() const { return PpsConfig::from_weight_diff(weight_diff, theta); }
    MeterConfig meter() const { return MeterConfig::from_shift(shift, width); }
    Imperfection imperfection() const { return {offset, background, std::nullopt}; }
};

namespace config_detail {

inline bool parse_bool(std::string_view value, const std::string& key, int line) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    raise(ErrorKind::parse, "line " + std::to_string(line) + ": key '" + key +
                                "' expects a boolean, got '" + std::string(value) + "'");
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& why) {
    raise(ErrorKind::domain, "key '" + key + "': " + why);
}

} // namespace config_detail

/// Parses `key = value` lines; '#' starts a comment, blank lines are
/// skipped. Unknown or repeated keys and malformed values are parse
/// errors carrying the line number; out-of-range values are domain
/// errors naming the key.
inline RunConfig parse_config(std::string_view text) {
    
    std::map<std::string, std::pair<std::string, int>> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            raise(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty() || value.empty())
            raise(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": empty key or value");
        if (entries.count(key))
            raise(ErrorKind::parse,
                  "line " + std::to_string(line_no) + ": key '" + key + "' repeated");
        entries[key] = {value, line_no};
    }

    static const std::vector<std::string> known = {
        "B",      "alpha2", "theta",     "d",        "sigma",    "N",      "seed",
        "M",      "histograms", "offset", "background", "beta_bias", "out_dir", "format"};
    for (const auto& [key, value] : entries) {
        bool ok = false;
        for (const auto& name : known) ok = ok || name == key;
        if (!ok)
            raise(ErrorKind::parse, "line " + std::to_string(value.second) +
                                        ": unknown key '" + key + "'");
    }

    const auto lookup = [&](const std::string& key) -> std::optional<std::pair<std::string, int>> {
        const auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        return it->second;
    };
    const auto number = [&](const std::string& key) {
        const auto entry = lookup(key);
        return entry ? std::optional<double>(parse_double(entry->first, "key '" + key + "'"))
                     : std::nullopt;
    };
    const auto unsigned_number = [&](const std::string& key) {
        const auto entry = lookup(key);
        return entry ? std::optional<std::uint64_t>(parse_u64(entry->first, "key '" + key + "'"))
                     : std::nullopt;
    };

    RunConfig config;

    const auto b = number("B");
    const auto alpha2 = number("alpha2");
    if (!b && !alpha2)
        raise(ErrorKind::parse, "pre-selection missing: provide B or alpha2");
    if (alpha2 && !(*alpha2 >= 0.0 && *alpha2 <= 1.0))
        config_detail::bad_value("alpha2", "must lie in [0, 1]");
    if (b && !(*b >= -1.0 && *b <= 1.0))
        config_detail::bad_value("B", "must lie in [-1, 1]");
    if (b && alpha2 && std::fabs((2.0 * *alpha2 - 1.0) - *b) > 1e-12)
        raise(ErrorKind::parse, "B and alpha2 are both given and disagree");
    config.weight_diff = b ? *b : 2.0 * *alpha2 - 1.0;

    const auto theta = number("theta");
    if (!theta) raise(ErrorKind::parse, "missing required key 'theta'");
    if (!(*theta >= 0.0 && *theta <= 3.1415926535897932))
        config_detail::bad_value("theta", "must lie in [0, pi]");
    config.theta = *theta;

    const auto shift = number("d");
    if (!shift) raise(ErrorKind::parse, "missing required key 'd'");
    if (!std::isfinite(*shift)) config_detail::bad_value("d", "must be finite");
    config.shift = *shift;

    if (const auto width = number("sigma")) {
        if (!(*width > 0.0)) config_detail::bad_value("sigma", "must be > 0");
        config.width = *width;
    }
    if (const auto n = unsigned_number("N")) {
        if (*n < 1) config_detail::bad_value("N", "must be >= 1");
        config.particles = *n;
    }
    if (const auto seed = unsigned_number("seed")) config.seed = *seed;
    if (const auto m = unsigned_number("M")) {
        if (*m < 1) config_detail::bad_value("M", "must be >= 1");
        config.replicates = *m;
    }
    if (const auto entry = lookup("histograms"))
        config.histograms = config_detail::parse_bool(entry->first, "histograms", entry->second);
    if (const auto offset = number("offset")) {
        if (!std::isfinite(*offset)) config_detail::bad_value("offset", "must be finite");
        config.offset = *offset;
    }
    if (const auto background = unsigned_number("background"))
        config.background = *background;
    if (const auto bias = number("beta_bias")) {
        if (!std::isfinite(*bias)) config_detail::bad_value("beta_bias", "must be finite");
        config.bias = *bias;
    }
    if (const auto entry = lookup("out_dir")) config.out_dir = entry->first;
    if (const auto entry = lookup("format")) {
        if (entry->first != "csv")
            config_detail::bad_value("format", "only 'csv' is supported");
        config.format = entry->first;
    }
    return config;
}

/// Canonical text form; every resolved key is written out.
inline std::string render_config(const RunConfig& config) {
    std::ostringstream out;
    out << "B = " << format_double(config.weight_diff) << "\n";
    out << "theta = " << format_double(config.theta) << "\n";
    out << "d = " << format_double(config.shift) << "\n";
    out << "sigma = " << format_double(config.width) << "\n";
    out << "N = " << format_u64(config.particles) << "\n";
    out << "seed = " << format_u64(config.seed) << "\n";
    out << "M = " << format_u64(config.replicates) << "\n";
    out << "histograms = " << (config.histograms ? "true" : "false") << "\n";
    out << "offset = " << format_double(config.offset) << "\n";
    out << "background = " << format_u64(config.background) << "\n";
    if (config.bias) out << "beta_bias = " << format_double(*config.bias) << "\n";
    if (config.out_dir) out << "out_dir = " << *config.out_dir << "\n";
    out << "format = " << config.format << "\n";
    return out.str();
}

} // namespace dsa
