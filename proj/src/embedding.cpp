#include "mathpii/embedding.hpp"

#include "mathpii/density.hpp"
#include "mathpii/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <optional>

namespace mathpii {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    const auto n = std::min(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    for (std::size_t i = n; i < a.size(); ++i) na += static_cast<double>(a[i]) * a[i];
    for (std::size_t i = n; i < b.size(); ++i) nb += static_cast<double>(b[i]) * b[i];
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashedTfEmbedder::HashedTfEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

Embedding HashedTfEmbedder::embed(std::string_view text) const {
    Embedding v(dimension_, 0.0f);
    for (const auto& tok : tokenize(text)) {
        if (tok.empty()) continue;
        v[fnv1a64(tok) % dimension_] += 1.0f;
    }
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm > 0.0) {
        const auto inv = 1.0 / std::sqrt(norm);
        for (float& x : v) x = static_cast<float>(x * inv);
    }
    return v;
}

TableEmbedder::TableEmbedder(std::string provider_id, std::size_t dimension)
    : provider_id_(std::move(provider_id)), dimension_(dimension) {}

void TableEmbedder::add(std::string text, Embedding vector) {
    if (vector.size() != dimension_)
        throw ValidationError("embedding for '" + text + "' has dimension " + std::to_string(vector.size()) +
                              ", expected " + std::to_string(dimension_));
    table_[std::move(text)] = std::move(vector);
}

Embedding TableEmbedder::embed(std::string_view text) const {
    auto it = table_.find(std::string(text));
    if (it == table_.end()) throw ValidationError("no precomputed embedding for text '" + std::string(text) + "'");
    return it->second;
}

TableEmbedder TableEmbedder::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding table '" + path.string() + "'");
    std::optional<TableEmbedder> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            auto vec = j.at("vector").get<Embedding>();
            if (!table) table.emplace("table:" + path.filename().string(), vec.size());
            table->add(j.at("text").get<std::string>(), std::move(vec));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!table) throw ValidationError("embedding table '" + path.string() + "' is empty");
    return std::move(*table);
}

Embedding CachingEmbedder::embed(std::string_view text) const {
    const std::string key(text);
    {
        std::shared_lock read(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    std::lock_guard miss(miss_mutex_);
    {
        std::shared_lock read(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto value = inner_.embed(text);
    std::unique_lock write(cache_mutex_);
    return cache_.emplace(key, std::move(value)).first->second;
}

std::size_t CachingEmbedder::cached() const {
    std::shared_lock read(cache_mutex_);
    return cache_.size();
}

}  // namespace mathpii
