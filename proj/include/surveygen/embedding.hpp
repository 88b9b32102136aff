#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace surveygen {

using EmbeddingVector = std::vector<float>;

float dot(std::span<const float> a, std::span<const float> b);
float l2_norm(std::span<const float> v);

/// In-place normalization; zero vectors are left untouched.
void l2_normalize(EmbeddingVector& v);

/// Anything that turns texts into fixed-dimension vectors.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    /// One vector per input, order-preserving. texts must be non-empty.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;

    EmbeddingVector embed_one(const std::string& text);
};

/// Deterministic offline embedder: bag-of-words over lowercased alphanumeric
/// tokens, FNV-hashed into `dim` buckets, then L2-normalized. Identical texts
/// always map to identical vectors, so retrieval examples are oracle-checkable.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dim = 256) : dim_(dim) {}

    std::size_t dim() const override { return dim_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::size_t dim_;
};

} // namespace surveygen
