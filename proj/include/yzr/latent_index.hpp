#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "yzr/encoder.hpp"

namespace yzr {

struct HnswParams {
    int M = 16;                // max links per node per layer (every layer)
    int ef_construction = 200;
    int ef_search = 64;
    double level_lambda = 0.0;  // 0 selects 1 / ln(M)
    std::uint64_t seed = 0;

    void validate() const;
    double level_mult() const;
};

struct SearchHit {
    std::string key;
    double similarity = 0.0;
};

/// Hierarchical navigable small-world graph over unit-normalized key vectors;
/// similarity is the inner product. Links are kept symmetric and capped at M.
/// A full node re-runs neighbour selection over its links plus the newcomer;
/// the dropped link is cut only when both ends keep a common neighbour,
/// otherwise it is handed over to the newcomer, so no layer ever splits.
///
/// A value type: const member functions may run concurrently, mutation needs
/// exclusive access (callers swap whole snapshots).
class LatentIndex {
public:
    explicit LatentIndex(int dim = 64, HnswParams params = {});

    /// Normalizes and links the vector; returns its node id. Throws
    /// DuplicateKey, ZeroVector, Shape.
    std::uint32_t insert(const std::string& key, std::span<const float> vector);

    /// Approximate top-k, similarity descending, ties by key. Throws
    /// EmptyIndex, ZeroVector, Shape.
    std::vector<SearchHit> search(std::span<const float> query, std::size_t k) const;
    std::vector<SearchHit> search(std::span<const float> query, std::size_t k, int ef) const;
    /// Brute-force scan with the same output contract.
    std::vector<SearchHit> exact_search(std::span<const float> query, std::size_t k) const;

    std::size_t size() const { return keys_.size(); }
    bool empty() const { return keys_.empty(); }
    bool contains(std::string_view key) const { return by_key_.count(std::string(key)) != 0; }
    int dim() const { return dim_; }
    const HnswParams& params() const { return params_; }

    // Structure inspection (integrity tests, persistence).
    int max_level() const { return max_level_; }
    std::optional<std::uint32_t> entry_point() const { return entry_; }
    int level_of(std::uint32_t node) const { return static_cast<int>(links_[node].size()) - 1; }
    const std::vector<std::uint32_t>& neighbors(std::uint32_t node, int layer) const {
        return links_[node][static_cast<std::size_t>(layer)];
    }
    const std::string& key_of(std::uint32_t node) const { return keys_[node]; }
    std::span<const float> vector_of(std::uint32_t node) const {
        return {vectors_.data() + static_cast<std::size_t>(node) * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }

    /// Empty string when every link is symmetric, no layer exceeds M links,
    /// and every node is reachable from the entry point on each of its layers.
    std::string integrity_problem() const;

    void save(const std::filesystem::path& path, std::uint64_t weights_fingerprint) const;
    static LatentIndex load(const std::filesystem::path& path, std::uint64_t* weights_fingerprint = nullptr);

private:
    using Scored = std::pair<float, std::uint32_t>;  // (similarity, node)

    float sim(std::span<const float> q, std::uint32_t node) const;
    float sim(std::uint32_t a, std::uint32_t b) const { return sim(vector_of(a), b); }
    std::vector<Scored> search_layer(std::span<const float> q, const std::vector<std::uint32_t>& entry, int ef,
                                     int layer) const;
    std::uint32_t greedy_descend(std::span<const float> q, int to_layer) const;
    std::vector<std::uint32_t> select_neighbors(const std::vector<Scored>& candidates, std::size_t m) const;
    void link(std::uint32_t node, const std::vector<std::uint32_t>& selected, int layer);
    void add_edge(std::uint32_t a, std::uint32_t b, int layer);
    void remove_edge(std::uint32_t a, std::uint32_t b, int layer);
    bool linked(std::uint32_t a, std::uint32_t b, int layer) const;
    bool share_neighbor(std::uint32_t a, std::uint32_t b, int layer) const;
    int sample_level(std::uint32_t node) const;
    std::vector<float> unit(std::span<const float> v) const;

    int dim_;
    HnswParams params_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::uint32_t> by_key_;
    std::vector<float> vectors_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][layer] -> neighbours
    std::optional<std::uint32_t> entry_;
    int max_level_ = -1;
};

struct LatentMatch {
    std::string key;
    double similarity = 0.0;
};

/// Top-1 hit if its similarity is >= threshold. An all-zero embedding has no
/// direction and matches nothing.
std::optional<LatentMatch> match_embedding(const LatentIndex& index, std::span<const float> embedding,
                                           double threshold);
/// Embeds the token (inference mode, one forward call) and matches it.
std::optional<LatentMatch> match_token(const LatentIndex& index, std::string_view token,
                                       const EncoderParams<float>& params, double threshold);

/// Embeds every key in one batch and inserts them in the given order.
LatentIndex build_index(const std::vector<std::string>& keys, const EncoderParams<float>& params,
                        const HnswParams& hnsw = {});

}  // namespace yzr
