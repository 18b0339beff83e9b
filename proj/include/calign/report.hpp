#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "calign/bounds.hpp"
#include "calign/function_system.hpp"
#include "calign/lattice_codec.hpp"
#include "calign/netsim.hpp"

namespace calign {

inline constexpr const char* kSchemaVersion = "1.0";

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double x);

std::string bound_csv_row(const BoundReport& r);
std::string codec_csv(const std::vector<CodecSweepRow>& rows);

ordered_json to_json(const ExperimentConfig& c);
ordered_json to_json(const LayerReport& r);
ordered_json to_json(const NetworkReport& r);
ordered_json to_json(const EquationSystem& s);
ordered_json to_json(const SubchannelSpec& s);

/// Per-layer summary CSV of a network report, one row per (trial, layer).
std::string network_csv(const NetworkReport& r);

std::string sha256_hex(const std::string& bytes);

struct Artifact {
    std::string name;     ///< file name relative to the output directory
    std::string content;
};

struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::string output_dir;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> artifacts;  ///< (name, sha256)
};

ordered_json to_json(const RunManifest& m);

/// Writes every artifact and manifest.json into dir, creating it if needed. Returns the manifest.
RunManifest write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts,
                            RunManifest manifest);

}  // namespace calign
