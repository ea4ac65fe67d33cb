#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mathpii {

using Embedding = std::vector<float>;

// Maps message text to a fixed-dimension vector that is either unit-norm or
// all zeros. Implementations must be deterministic for identical text.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string provider_id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual Embedding embed(std::string_view text) const = 0;
};

// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const float> a, std::span<const float> b);

// Hashed term-frequency embedding over the density tokenizer's tokens
// (FNV-1a 64 modulo dimension), L2-normalized. Empty text gives the zero
// vector. Used by the test suite and as the offline default.
class HashedTfEmbedder final : public EmbeddingProvider {
public:
    explicit HashedTfEmbedder(std::size_t dimension = 256);
    std::string provider_id() const override { return "hashed-tf"; }
    std::size_t dimension() const override { return dimension_; }
    Embedding embed(std::string_view text) const override;

private:
    std::size_t dimension_;
};

// Vectors computed elsewhere (e.g. by a sentence encoder) and loaded from
// JSONL lines {"text": str, "vector": [float...]}. Unknown text throws.
class TableEmbedder final : public EmbeddingProvider {
public:
    TableEmbedder(std::string provider_id, std::size_t dimension);
    static TableEmbedder load(const std::filesystem::path& path);

    void add(std::string text, Embedding vector);
    std::string provider_id() const override { return provider_id_; }
    std::size_t dimension() const override { return dimension_; }
    Embedding embed(std::string_view text) const override;

private:
    std::string provider_id_;
    std::size_t dimension_;
    std::unordered_map<std::string, Embedding> table_;
};

// Memoizes another provider. Reads are concurrent; misses are serialized so a
// given text is embedded at most once.
class CachingEmbedder final : public EmbeddingProvider {
public:
    explicit CachingEmbedder(const EmbeddingProvider& inner) : inner_(inner) {}
    std::string provider_id() const override { return inner_.provider_id(); }
    std::size_t dimension() const override { return inner_.dimension(); }
    Embedding embed(std::string_view text) const override;
    std::size_t cached() const;

private:
    const EmbeddingProvider& inner_;
    mutable std::shared_mutex cache_mutex_;
    mutable std::mutex miss_mutex_;
    mutable std::unordered_map<std::string, Embedding> cache_;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace mathpii
