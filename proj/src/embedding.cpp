#include "surveygen/embedding.hpp"

#include <cctype>
#include <cmath>

#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

float dot(std::span<const float> a, std::span<const float> b) {
    float acc = 0.0f;
    const std::size_t n = a.size() < b.size() ? a.size() : b.size();
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float l2_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * x;
    return static_cast<float>(std::sqrt(acc));
}

void l2_normalize(EmbeddingVector& v) {
    const float n = l2_norm(v);
    if (n == 0.0f) return;
    for (float& x : v) x /= n;
}

EmbeddingVector Embedder::embed_one(const std::string& text) {
    auto vecs = embed({text});
    return std::move(vecs.front());
}

std::vector<EmbeddingVector> HashEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error("embed: texts must be non-empty");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        EmbeddingVector v(dim_, 0.0f);
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            v[fnv1a64(token) % dim_] += 1.0f;
            token.clear();
        };
        for (char ch : text) {
            unsigned char c = static_cast<unsigned char>(ch);
            if (std::isalnum(c)) {
                token.push_back(static_cast<char>(std::tolower(c)));
            } else {
                flush();
            }
        }
        flush();
        l2_normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace surveygen
