#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mathpii {

inline constexpr const char* kToolVersion = "0.1.0";

// Every knob that can change an output. Unset fields are omitted from the
// manifest rather than written as defaults.
struct RunConfig {
    std::string command;
    std::optional<std::string> corpus_path;
    std::optional<std::string> vocabulary_path;
    std::optional<double> t_anchor;
    std::optional<double> t_sim;
    std::optional<std::string> engine;
    std::optional<std::string> prompt_variant;
    std::optional<std::string> model_id;
    std::optional<std::string> match_policy;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::map<std::string, std::string> extra;
};

nlohmann::ordered_json to_json(const RunConfig& config);

std::string sha256_file(const std::filesystem::path& path);

// Manifest JSON: {"tool", "version", "config", "inputs": [{path, sha256, bytes}],
// "outputs": [...]}. Contains no timestamps, so equal runs give equal files.
nlohmann::ordered_json make_manifest(const RunConfig& config, const std::vector<std::filesystem::path>& inputs,
                                     const std::vector<std::filesystem::path>& outputs);
void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace mathpii
