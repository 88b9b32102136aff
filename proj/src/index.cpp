#include "surveygen/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "surveygen/errors.hpp"
#include "surveygen/util.hpp"

namespace surveygen {

namespace {

constexpr char kMagic[6] = {'S', 'G', 'I', 'D', 'X', '1'};
constexpr std::size_t kEmbedBatch = 64;

std::vector<std::pair<std::string, EmbeddingVector>>& mutable_entries(
    std::vector<std::pair<std::string, EmbeddingVector>>& abstract_ns,
    std::vector<std::pair<std::string, EmbeddingVector>>& title_ns, IndexNamespace ns) {
    return ns == IndexNamespace::kAbstract ? abstract_ns : title_ns;
}

} // namespace

void VectorIndex::insert(IndexNamespace ns, std::string id, EmbeddingVector vec) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) {
        throw Error("index insert: vector for '" + id + "' has dimension " +
                    std::to_string(vec.size()) + ", index dimension is " + std::to_string(dim_));
    }
    auto& store = mutable_entries(abstract_, title_, ns);
    auto it = std::lower_bound(store.begin(), store.end(), id,
                               [](const auto& e, const std::string& key) { return e.first < key; });
    if (it != store.end() && it->first == id) {
        throw Error("index insert: duplicate id '" + id + "'");
    }
    store.emplace(it, std::move(id), std::move(vec));
}

const EmbeddingVector* VectorIndex::vector(IndexNamespace ns, std::string_view id) const {
    const auto& store = entries(ns);
    auto it = std::lower_bound(store.begin(), store.end(), id,
                               [](const auto& e, std::string_view key) { return e.first < key; });
    if (it == store.end() || it->first != id) return nullptr;
    return &it->second;
}

namespace {

// Embeds `texts` in batches; on a batch failure retries record by record to
// name the offending id.
std::vector<EmbeddingVector> embed_all(Embedder& embedder, const std::vector<std::string>& texts,
                                       const std::vector<const PaperRecord*>& records) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += kEmbedBatch) {
        const std::size_t end = std::min(texts.size(), start + kEmbedBatch);
        std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
        try {
            auto vecs = embedder.embed(batch);
            for (auto& v : vecs) out.push_back(std::move(v));
        } catch (const std::exception&) {
            for (std::size_t i = start; i < end; ++i) {
                try {
                    out.push_back(embedder.embed_one(texts[i]));
                } catch (const std::exception& inner) {
                    throw Error("index build failed embedding record '" + records[i]->id +
                                "': " + inner.what());
                }
            }
        }
    }
    return out;
}

} // namespace

VectorIndex build_index(const Corpus& corpus, Embedder& embedder) {
    VectorIndex index(embedder.dim());
    if (corpus.size() == 0) return index;

    std::vector<const PaperRecord*> records;
    records.reserve(corpus.size());
    std::vector<std::string> abstract_texts;
    std::vector<std::string> title_texts;
    for (const PaperRecord& rec : corpus.records()) {
        records.push_back(&rec);
        abstract_texts.push_back(rec.title + "\n" + rec.abstract);
        title_texts.push_back(rec.title);
    }

    auto abstract_vecs = embed_all(embedder, abstract_texts, records);
    auto title_vecs = embed_all(embedder, title_texts, records);
    for (std::size_t i = 0; i < records.size(); ++i) {
        l2_normalize(abstract_vecs[i]);
        l2_normalize(title_vecs[i]);
        index.insert(IndexNamespace::kAbstract, records[i]->id, std::move(abstract_vecs[i]));
        index.insert(IndexNamespace::kTitle, records[i]->id, std::move(title_vecs[i]));
    }
    return index;
}

std::vector<ScoredId> retrieve_by_vector(const VectorIndex& index, const EmbeddingVector& query,
                                         std::size_t k, IndexNamespace ns,
                                         const std::set<std::string>& exclusions) {
    if (k == 0) return {};
    std::vector<ScoredId> scored;
    scored.reserve(index.size(ns));
    for (const auto& [id, vec] : index.entries(ns)) {
        if (exclusions.count(id) != 0) continue;
        scored.push_back({id, dot(query, vec)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::vector<ScoredId> retrieve(const VectorIndex& index, Embedder& embedder,
                               const std::string& query, std::size_t k, IndexNamespace ns,
                               const std::set<std::string>& exclusions) {
    if (k == 0) return {};
    EmbeddingVector q = embedder.embed_one(query);
    l2_normalize(q);
    return retrieve_by_vector(index, q, k, ns, exclusions);
}

// =============================================================================
// Serialization
// =============================================================================

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw IoError("index file truncated");
    }
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void put_f32(std::ofstream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::ifstream& in) {
    std::uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_namespace(std::ofstream& out,
                     const std::vector<std::pair<std::string, EmbeddingVector>>& entries) {
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [id, vec] : entries) {
        put_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (float x : vec) put_f32(out, x);
    }
}

void read_namespace(std::ifstream& in, VectorIndex& index, IndexNamespace ns, std::size_t dim) {
    const std::uint32_t count = get_u32(in);
    if (count > 0 && dim == 0) {
        throw IoError("index file declares entries with dimension 0");
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t id_len = get_u32(in);
        std::string id(id_len, '\0');
        if (!in.read(id.data(), id_len)) {
            throw IoError("index file truncated in id");
        }
        EmbeddingVector vec(dim);
        for (std::size_t d = 0; d < dim; ++d) vec[d] = get_f32(in);
        index.insert(ns, std::move(id), std::move(vec));
    }
}

} // namespace

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write index file: " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(index.dim()));
    write_namespace(out, index.entries(IndexNamespace::kAbstract));
    write_namespace(out, index.entries(IndexNamespace::kTitle));
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

VectorIndex load_index(const std::filesystem::path& path, std::size_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open index file: " + path.string());
    }
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not an index file (bad magic): " + path.string());
    }
    const std::uint32_t dim = get_u32(in);
    if (dim > (1u << 20)) {
        throw IoError("index file has implausible dimension " + std::to_string(dim));
    }
    if (expected_dim != 0 && dim != expected_dim) {
        throw IoError("index dimension " + std::to_string(dim) + " does not match expected " +
                      std::to_string(expected_dim));
    }
    VectorIndex index(dim);
    read_namespace(in, index, IndexNamespace::kAbstract, dim);
    read_namespace(in, index, IndexNamespace::kTitle, dim);
    return index;
}

} // namespace surveygen
