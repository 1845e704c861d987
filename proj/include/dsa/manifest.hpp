#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsa/error.hpp"
#include "dsa/version.hpp"

namespace dsa {

/// FNV-1a over the file bytes, as a fixed-width hex string.
inline std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string() + " for digest");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

struct OutputRecord {
    std::string name;
    std::uint64_t bytes;
    std::string digest;
};

/// Record of one CLI run: the resolved configuration text, the full
/// argument list, the seed in effect, and a digest of every file
/// written. Timestamps aside, outputs are reproducible from this record.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> args;
    std::string config_text;
    std::uint64_t seed = 0;
    std::vector<OutputRecord> outputs;
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline OutputRecord record_output(const std::filesystem::path& dir, const std::string& name) {
    const auto path = dir / name;
    return {name, static_cast<std::uint64_t>(std::filesystem::file_size(path)),
            file_digest(path)};
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    nlohmann::json doc;
    doc["artifact"] = kArtifactName;
    doc["version"] = kArtifactVersion;
    doc["subcommand"] = manifest.subcommand;
    doc["args"] = manifest.args;
    doc["config"] = manifest.config_text;
    doc["seed"] = manifest.seed;
    doc["created_utc"] = utc_timestamp();
    doc["outputs"] = nlohmann::json::array();
    for (const auto& output : manifest.outputs)
        doc["outputs"].push_back(
            {{"name", output.name}, {"bytes", output.bytes}, {"digest", output.digest}});
    std::ofstream out(dir / "manifest.json");
    if (!out) raise(ErrorKind::io, "cannot write manifest in " + dir.string());
    out << doc.dump(2) << "\n";
}

} // namespace dsa
