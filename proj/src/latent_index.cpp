#include "yzr/latent_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "binary_io.hpp"
#include "yzr/error.hpp"

namespace yzr {

void HnswParams::validate() const {
    if (M < 2) throw Error(ErrorCode::InvalidArgument, "HNSW M must be >= 2");
    if (ef_search < 1) throw Error(ErrorCode::InvalidArgument, "ef_search must be >= 1");
    if (ef_construction < M) throw Error(ErrorCode::InvalidArgument, "ef_construction must be >= M");
    if (level_lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "level_lambda must be >= 0");
}

double HnswParams::level_mult() const { return level_lambda > 0.0 ? level_lambda : 1.0 / std::log(static_cast<double>(M)); }

LatentIndex::LatentIndex(int dim, HnswParams params) : dim_(dim), params_(params) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "index dimension must be >= 1");
    params_.validate();
}

std::vector<float> LatentIndex::unit(std::span<const float> v) const {
    if (static_cast<int>(v.size()) != dim_) throw Error(ErrorCode::Shape, "vector dimension does not match the index");
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * static_cast<double>(x);
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
    return out;
}

float LatentIndex::sim(std::span<const float> q, std::uint32_t node) const {
    const float* p = vectors_.data() + static_cast<std::size_t>(node) * static_cast<std::size_t>(dim_);
    float s = 0.0f;
    for (int i = 0; i < dim_; ++i) s += q[static_cast<std::size_t>(i)] * p[i];
    return s;
}

int LatentIndex::sample_level(std::uint32_t node) const {
    // Hash of (seed, node) so levels do not depend on insertion history.
    std::uint64_t z = params_.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(node) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    const double u = (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    return static_cast<int>(std::floor(-std::log(u) * params_.level_mult()));
}

bool LatentIndex::linked(std::uint32_t a, std::uint32_t b, int layer) const {
    const auto& n = links_[a][static_cast<std::size_t>(layer)];
    return std::find(n.begin(), n.end(), b) != n.end();
}

void LatentIndex::add_edge(std::uint32_t a, std::uint32_t b, int layer) {
    links_[a][static_cast<std::size_t>(layer)].push_back(b);
    links_[b][static_cast<std::size_t>(layer)].push_back(a);
}

void LatentIndex::remove_edge(std::uint32_t a, std::uint32_t b, int layer) {
    auto drop = [&](std::uint32_t from, std::uint32_t to) {
        auto& n = links_[from][static_cast<std::size_t>(layer)];
        n.erase(std::find(n.begin(), n.end(), to));
    };
    drop(a, b);
    drop(b, a);
}

namespace {

// Orders best-first: higher similarity, then lower node id.
struct Better {
    bool operator()(const std::pair<float, std::uint32_t>& a, const std::pair<float, std::uint32_t>& b) const {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    }
};

}  // namespace

std::vector<LatentIndex::Scored> LatentIndex::search_layer(std::span<const float> q,
                                                           const std::vector<std::uint32_t>& entry, int ef,
                                                           int layer) const {
    std::vector<char> visited(keys_.size(), 0);
    // candidates: best on top; results: worst on top
    auto worse = [](const Scored& a, const Scored& b) { return Better{}(b, a); };
    std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> candidates(worse);
    std::priority_queue<Scored, std::vector<Scored>, Better> results;
    for (std::uint32_t e : entry) {
        if (visited[e]) continue;
        visited[e] = 1;
        const Scored s{sim(q, e), e};
        candidates.push(s);
        results.push(s);
        if (static_cast<int>(results.size()) > ef) results.pop();
    }
    while (!candidates.empty()) {
        const Scored c = candidates.top();
        candidates.pop();
        if (static_cast<int>(results.size()) >= ef && Better{}(results.top(), c)) break;
        for (std::uint32_t n : links_[c.second][static_cast<std::size_t>(layer)]) {
            if (visited[n]) continue;
            visited[n] = 1;
            const Scored s{sim(q, n), n};
            if (static_cast<int>(results.size()) < ef || Better{}(s, results.top())) {
                candidates.push(s);
                results.push(s);
                if (static_cast<int>(results.size()) > ef) results.pop();
            }
        }
    }
    std::vector<Scored> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::sort(out.begin(), out.end(), Better{});
    return out;
}

std::uint32_t LatentIndex::greedy_descend(std::span<const float> q, int to_layer) const {
    std::uint32_t ep = *entry_;
    for (int l = max_level_; l > to_layer; --l) ep = search_layer(q, {ep}, 1, l).front().second;
    return ep;
}

// Keeps a candidate only if it is closer to the query than to every neighbour
// already kept, then tops up with the best of the discarded ones.
std::vector<std::uint32_t> LatentIndex::select_neighbors(const std::vector<Scored>& candidates, std::size_t m) const {
    std::vector<std::uint32_t> kept, discarded;
    for (const auto& [s, c] : candidates) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (std::uint32_t r : kept) {
            if (sim(c, r) > s) {
                diverse = false;
                break;
            }
        }
        (diverse ? kept : discarded).push_back(c);
    }
    for (std::size_t i = 0; i < discarded.size() && kept.size() < m; ++i) kept.push_back(discarded[i]);
    return kept;
}

bool LatentIndex::share_neighbor(std::uint32_t a, std::uint32_t b, int layer) const {
    for (std::uint32_t y : links_[a][static_cast<std::size_t>(layer)]) {
        if (y != b && linked(y, b, layer)) return true;
    }
    return false;
}

void LatentIndex::link(std::uint32_t node, const std::vector<std::uint32_t>& selected, int layer) {
    const auto m = static_cast<std::size_t>(params_.M);
    auto degree = [&](std::uint32_t n) { return links_[n][static_cast<std::size_t>(layer)].size(); };
    for (std::uint32_t e : selected) {
        if (degree(node) >= m) break;
        if (linked(node, e, layer)) continue;  // re-attached by an earlier fallback
        if (degree(e) < m) {
            add_edge(node, e, layer);
            continue;
        }
        // e is full. Re-select its neighbours with `node` as a candidate; the
        // one left out loses its edge to e, but only when the two still share
        // a neighbour, so no node can become unreachable.
        std::vector<Scored> cand{{sim(e, node), node}};
        for (std::uint32_t x : links_[e][static_cast<std::size_t>(layer)]) cand.emplace_back(sim(e, x), x);
        std::sort(cand.begin(), cand.end(), [](const Scored& a, const Scored& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const std::vector<std::uint32_t> keep = select_neighbors(cand, m);
        std::uint32_t dropped = node;
        for (const auto& [s, x] : cand) {
            if (std::find(keep.begin(), keep.end(), x) == keep.end()) dropped = x;
        }
        if (dropped == node) continue;
        if (share_neighbor(e, dropped, layer)) {
            remove_edge(e, dropped, layer);
            add_edge(node, e, layer);
            continue;
        }
        // Fallback: e gives up its farthest neighbour x, which re-attaches to
        // `node` so x keeps a path to e.
        std::uint32_t far = e;
        float far_sim = 2.0f;
        for (std::uint32_t x : links_[e][static_cast<std::size_t>(layer)]) {
            const float s = sim(e, x);
            if (s < far_sim || (s == far_sim && x > far)) {
                far_sim = s;
                far = x;
            }
        }
        const bool must_attach = degree(node) == 0;
        const bool x_needs_edge = !linked(node, far, layer);
        if (!must_attach && sim(e, node) <= far_sim) continue;
        if (x_needs_edge && degree(node) + 2 > m) continue;
        remove_edge(e, far, layer);
        add_edge(node, e, layer);
        if (x_needs_edge) add_edge(node, far, layer);
    }
}

std::uint32_t LatentIndex::insert(const std::string& key, std::span<const float> vector) {
    if (by_key_.count(key)) throw Error(ErrorCode::DuplicateKey, "key '" + key + "' is already indexed");
    const std::vector<float> v = unit(vector);
    const auto id = static_cast<std::uint32_t>(keys_.size());
    const int level = sample_level(id);

    keys_.push_back(key);
    by_key_.emplace(key, id);
    vectors_.insert(vectors_.end(), v.begin(), v.end());
    links_.emplace_back(static_cast<std::size_t>(level + 1));

    if (!entry_) {
        entry_ = id;
        max_level_ = level;
        return id;
    }
    const std::span<const float> q(v);
    std::vector<std::uint32_t> eps{greedy_descend(q, level)};
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        const std::vector<Scored> found = search_layer(q, eps, params_.ef_construction, l);
        link(id, select_neighbors(found, static_cast<std::size_t>(params_.M)), l);
        eps.clear();
        for (const auto& s : found) eps.push_back(s.second);
    }
    if (level > max_level_) {
        max_level_ = level;
        entry_ = id;
    }
    return id;
}

namespace {

std::vector<SearchHit> finish(std::vector<std::pair<float, std::uint32_t>> scored, std::size_t k,
                              const LatentIndex& index) {
    std::vector<SearchHit> hits;
    hits.reserve(scored.size());
    for (const auto& [s, n] : scored) hits.push_back({index.key_of(n), static_cast<double>(std::clamp(s, -1.0f, 1.0f))});
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.key < b.key;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace

std::vector<SearchHit> LatentIndex::search(std::span<const float> query, std::size_t k) const {
    return search(query, k, params_.ef_search);
}

std::vector<SearchHit> LatentIndex::search(std::span<const float> query, std::size_t k, int ef) const {
    if (empty()) throw Error(ErrorCode::EmptyIndex, "search on an empty index");
    const std::vector<float> q = unit(query);
    if (k == 0) return {};
    const std::uint32_t ep = greedy_descend(q, 0);
    return finish(search_layer(q, {ep}, std::max(ef, static_cast<int>(k)), 0), k, *this);
}

std::vector<SearchHit> LatentIndex::exact_search(std::span<const float> query, std::size_t k) const {
    if (empty()) throw Error(ErrorCode::EmptyIndex, "search on an empty index");
    const std::vector<float> q = unit(query);
    std::vector<Scored> all;
    all.reserve(size());
    for (std::uint32_t n = 0; n < size(); ++n) all.emplace_back(sim(q, n), n);
    return finish(std::move(all), k, *this);
}

std::string LatentIndex::integrity_problem() const {
    const auto m = static_cast<std::size_t>(params_.M);
    for (std::uint32_t n = 0; n < size(); ++n) {
        for (int l = 0; l <= level_of(n); ++l) {
            const auto& nb = neighbors(n, l);
            if (nb.size() > m) return "node " + std::to_string(n) + " has " + std::to_string(nb.size()) + " links on layer " + std::to_string(l);
            for (std::size_t i = 0; i < nb.size(); ++i) {
                const std::uint32_t x = nb[i];
                if (x == n) return "self link at node " + std::to_string(n);
                if (std::find(nb.begin() + static_cast<std::ptrdiff_t>(i) + 1, nb.end(), x) != nb.end()) {
                    return "duplicate link at node " + std::to_string(n);
                }
                if (x >= size() || level_of(x) < l) return "link to a node absent from layer " + std::to_string(l);
                if (!linked(x, n, l)) return "one-way link " + std::to_string(n) + "->" + std::to_string(x);
            }
        }
    }
    if (!entry_) return size() == 0 ? std::string() : "no entry point";
    if (level_of(*entry_) != max_level_) return "entry point is not on the top layer";
    std::vector<char> seen(size());
    for (int l = 0; l <= max_level_; ++l) {
        std::fill(seen.begin(), seen.end(), 0);
        std::vector<std::uint32_t> stack{*entry_};
        seen[*entry_] = 1;
        std::size_t reached = 0;
        while (!stack.empty()) {
            const std::uint32_t n = stack.back();
            stack.pop_back();
            ++reached;
            for (std::uint32_t x : neighbors(n, l)) {
                if (!seen[x]) {
                    seen[x] = 1;
                    stack.push_back(x);
                }
            }
        }
        std::size_t on_layer = 0;
        for (std::uint32_t n = 0; n < size(); ++n) on_layer += level_of(n) >= l ? 1 : 0;
        if (reached != on_layer) {
            return "layer " + std::to_string(l) + ": " + std::to_string(on_layer - reached) + " nodes unreachable";
        }
    }
    return {};
}

void LatentIndex::save(const std::filesystem::path& path, std::uint64_t weights_fingerprint) const {
    detail::Writer w(path.string());
    detail::write_header(w, detail::kKindIndex);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dim_));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.M));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.ef_construction));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.ef_search));
    w.put<double>(params_.level_lambda);
    w.put<std::uint64_t>(params_.seed);
    w.put<std::uint64_t>(weights_fingerprint);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(size()));
    for (const auto& k : keys_) w.string(k);
    detail::write_tensor(w, "vectors", {size(), static_cast<std::uint64_t>(dim_)}, vectors_.data());

    // adjacency section, checksummed as one block
    detail::Fnv1a sum;
    auto put32 = [&](std::uint32_t v) {
        w.put<std::uint32_t>(v);
        const auto le = detail::to_little(v);
        sum.update(&le, sizeof le);
    };
    put32(entry_ ? *entry_ : 0xFFFFFFFFu);
    put32(static_cast<std::uint32_t>(max_level_ + 1));
    for (std::uint32_t n = 0; n < size(); ++n) {
        put32(static_cast<std::uint32_t>(level_of(n)));
        for (int l = 0; l <= level_of(n); ++l) {
            put32(static_cast<std::uint32_t>(neighbors(n, l).size()));
            for (std::uint32_t x : neighbors(n, l)) put32(x);
        }
    }
    w.put<std::uint64_t>(sum.value());
    w.close();
}

LatentIndex LatentIndex::load(const std::filesystem::path& path, std::uint64_t* weights_fingerprint) {
    detail::Reader r(path.string());
    detail::read_header(r, detail::kKindIndex);
    const int dim = static_cast<int>(r.get<std::uint32_t>());
    HnswParams p;
    p.M = static_cast<int>(r.get<std::uint32_t>());
    p.ef_construction = static_cast<int>(r.get<std::uint32_t>());
    p.ef_search = static_cast<int>(r.get<std::uint32_t>());
    p.level_lambda = r.get<double>();
    p.seed = r.get<std::uint64_t>();
    const auto fp = r.get<std::uint64_t>();
    if (weights_fingerprint) *weights_fingerprint = fp;
    LatentIndex index(dim, p);
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        index.keys_.push_back(r.string(4096));
        index.by_key_.emplace(index.keys_.back(), i);
    }
    const detail::TensorRecord vec = detail::read_tensor(r);
    if (vec.dims.size() != 2 || vec.dims[0] != n || vec.dims[1] != static_cast<std::uint64_t>(dim)) {
        throw Error(ErrorCode::Format, path.string() + ": vector block has the wrong shape");
    }
    index.vectors_ = vec.data;

    detail::Fnv1a sum;
    auto get32 = [&]() {
        const auto v = r.get<std::uint32_t>();
        const auto le = detail::to_little(v);
        sum.update(&le, sizeof le);
        return v;
    };
    const std::uint32_t entry = get32();
    index.max_level_ = static_cast<int>(get32()) - 1;
    index.links_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t level = get32();
        if (level > 64) throw Error(ErrorCode::Checksum, path.string() + ": implausible node level");
        index.links_[i].resize(level + 1);
        for (std::uint32_t l = 0; l <= level; ++l) {
            const std::uint32_t count = get32();
            if (count > static_cast<std::uint32_t>(p.M)) throw Error(ErrorCode::Checksum, path.string() + ": implausible degree");
            auto& nb = index.links_[i][l];
            for (std::uint32_t k = 0; k < count; ++k) nb.push_back(get32());
        }
    }
    if (r.get<std::uint64_t>() != sum.value()) throw Error(ErrorCode::Checksum, path.string() + ": adjacency checksum mismatch");
    if (entry != 0xFFFFFFFFu) index.entry_ = entry;
    for (const auto& node : index.links_) {
        for (const auto& layer : node) {
            for (std::uint32_t x : layer) {
                if (x >= n) throw Error(ErrorCode::Format, path.string() + ": link to a missing node");
            }
        }
    }
    return index;
}

std::optional<LatentMatch> match_embedding(const LatentIndex& index, std::span<const float> embedding,
                                           double threshold) {
    bool nonzero = false;
    for (float x : embedding) nonzero = nonzero || x != 0.0f;
    if (!nonzero) return std::nullopt;
    const auto hits = index.search(embedding, 1);
    if (hits.empty() || hits.front().similarity < threshold) return std::nullopt;
    return LatentMatch{hits.front().key, hits.front().similarity};
}

std::optional<LatentMatch> match_token(const LatentIndex& index, std::string_view token,
                                       const EncoderParams<float>& params, double threshold) {
    const CharSeq seq = encode_token(token);
    const Matrix<float> z = embed(params, std::span<const CharSeq>(&seq, 1));
    return match_embedding(index, std::span<const float>(z.data(), static_cast<std::size_t>(z.cols())), threshold);
}

LatentIndex build_index(const std::vector<std::string>& keys, const EncoderParams<float>& params,
                        const HnswParams& hnsw) {
    LatentIndex index(params.config.proj_dim, hnsw);
    if (keys.empty()) return index;
    std::vector<CharSeq> seqs;
    seqs.reserve(keys.size());
    for (const auto& k : keys) seqs.push_back(encode_token(k));
    const Matrix<float> z = embed(params, seqs);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto row = std::span<const float>(z.data() + i * static_cast<std::size_t>(z.cols()), static_cast<std::size_t>(z.cols()));
        bool nonzero = false;
        for (float x : row) nonzero = nonzero || x != 0.0f;
        if (!nonzero) throw Error(ErrorCode::ZeroVector, "key '" + keys[i] + "' embeds to the zero vector");
        index.insert(keys[i], row);
    }
    return index;
}

}  // namespace yzr
