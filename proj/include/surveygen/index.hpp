#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "surveygen/corpus.hpp"
#include "surveygen/embedding.hpp"

namespace surveygen {

enum class IndexNamespace { kAbstract, kTitle };

struct ScoredId {
    std::string id;
    float similarity = 0.0f;

    bool operator==(const ScoredId&) const = default;
};

/// Exact-scan cosine index over two namespaces: abstract vectors embed
/// title + "\n" + abstract, title vectors embed the title alone. All stored
/// vectors are unit-norm, so dot product equals cosine similarity.
class VectorIndex {
public:
    VectorIndex() = default;
    explicit VectorIndex(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size(IndexNamespace ns) const { return entries(ns).size(); }
    bool empty() const { return abstract_.empty() && title_.empty(); }

    /// Entries are kept sorted by id; insertion enforces the dimension.
    void insert(IndexNamespace ns, std::string id, EmbeddingVector vec);

    const EmbeddingVector* vector(IndexNamespace ns, std::string_view id) const;

    const std::vector<std::pair<std::string, EmbeddingVector>>& entries(IndexNamespace ns) const {
        return ns == IndexNamespace::kAbstract ? abstract_ : title_;
    }

    bool operator==(const VectorIndex& other) const {
        return dim_ == other.dim_ && abstract_ == other.abstract_ && title_ == other.title_;
    }

private:
    std::size_t dim_ = 0;
    std::vector<std::pair<std::string, EmbeddingVector>> abstract_;
    std::vector<std::pair<std::string, EmbeddingVector>> title_;
};

/// Embeds every corpus record into both namespaces. Excluded records are
/// indexed too; exclusion is applied at retrieval time.
/// Throws Error naming the record id when the embedder fails on it.
VectorIndex build_index(const Corpus& corpus, Embedder& embedder);

/// The k highest-cosine entries for the query, descending similarity, ties by
/// ascending id; ids in `exclusions` are filtered before ranking. k larger
/// than the index returns all entries.
std::vector<ScoredId> retrieve(const VectorIndex& index, Embedder& embedder,
                               const std::string& query, std::size_t k, IndexNamespace ns,
                               const std::set<std::string>& exclusions = {});

/// Same, with a precomputed query vector.
std::vector<ScoredId> retrieve_by_vector(const VectorIndex& index, const EmbeddingVector& query,
                                         std::size_t k, IndexNamespace ns,
                                         const std::set<std::string>& exclusions = {});

// Index container format (little-endian, documented here and in the README):
//   magic   6 bytes  "SGIDX1"
//   dim     u32
//   then per namespace (abstract first, then title):
//     count u32
//     count entries of: id_len u32, id bytes, dim * f32
// load(save(x)) == x bit-exactly.
void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path, std::size_t expected_dim = 0);

} // namespace surveygen
