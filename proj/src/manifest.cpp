#include "mathpii/manifest.hpp"

#include "mathpii/errors.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <memory>

namespace mathpii {

nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["command"] = c.command;
    auto put = [&](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    put("corpus", c.corpus_path);
    put("vocabulary", c.vocabulary_path);
    if (c.t_anchor || c.t_sim) {
        j["thresholds"] = nlohmann::ordered_json::object();
        if (c.t_anchor) j["thresholds"]["t_anchor"] = *c.t_anchor;
        if (c.t_sim) j["thresholds"]["t_sim"] = *c.t_sim;
    }
    put("engine", c.engine);
    put("prompt_variant", c.prompt_variant);
    put("model_id", c.model_id);
    put("match_policy", c.match_policy);
    put("seed", c.seed);
    put("output_dir", c.output_dir);
    for (const auto& [k, v] : c.extra) j[k] = v;
    return j;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    char h[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(h, sizeof h, "%02x", digest[i]);
        hex += h;
    }
    return hex;
}

nlohmann::ordered_json make_manifest(const RunConfig& config, const std::vector<std::filesystem::path>& inputs,
                                     const std::vector<std::filesystem::path>& outputs) {
    nlohmann::ordered_json j;
    j["tool"] = "mathpii";
    j["version"] = kToolVersion;
    j["config"] = to_json(config);
    auto files = [](const std::vector<std::filesystem::path>& paths) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : paths) {
            nlohmann::ordered_json f;
            f["path"] = p.string();
            f["sha256"] = sha256_file(p);
            f["bytes"] = std::filesystem::file_size(p);
            arr.push_back(std::move(f));
        }
        return arr;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    return j;
}

void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::filesystem::path>& outputs) {
    const auto j = make_manifest(config, inputs, outputs);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace mathpii
