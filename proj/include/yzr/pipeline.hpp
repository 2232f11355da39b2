#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "yzr/encoder.hpp"
#include "yzr/latent_index.hpp"
#include "yzr/normalizer.hpp"
#include "yzr/tokenizer.hpp"

namespace yzr {

class KeyValueConfig;

struct PipelineConfig {
    double threshold = 0.8;
    std::optional<std::filesystem::path> safe_english, safe_hinglish, safe_platform, extra_safe;
    std::optional<std::filesystem::path> profane;
    std::optional<std::filesystem::path> weights;
    std::optional<std::filesystem::path> index;  // cache; rebuilt when stale or missing
    std::optional<std::filesystem::path> normalization;
    std::string listen;  // host:port for `serve`
    int workers = 1;
    std::size_t max_chat_len = 4096;  // bytes; longer chats are cut before detection
    HnswParams hnsw;

    /// threshold in (0, 1], workers >= 1, every configured input path exists.
    void validate() const;

    /// Keys: threshold, vocab.safe_english, vocab.safe_hinglish, vocab.safe_platform,
    /// vocab.extra_safe, vocab.profane, weights, index, normalization, listen,
    /// workers, max_chat_len, hnsw.m, hnsw.ef_construction, hnsw.ef_search, hnsw.seed.
    static PipelineConfig from_config(const KeyValueConfig& kv);
    static PipelineConfig load(const std::filesystem::path& path);
};

enum class Label { NotProfane, ProfaneDirect, ProfaneLatent, ServiceError };
enum class Stage { Prefilter, Stage1, Stage2, Service };

const char* to_string(Label label) noexcept;
const char* to_string(Stage stage) noexcept;

struct Evidence {
    std::string token;  // as it appeared after normalization (or raw, for the prefilter)
    std::string key;    // profane vocabulary entry
    std::optional<double> similarity;  // latent matches only
};

struct Verdict {
    std::string chat_id;
    Label label = Label::NotProfane;
    std::optional<Evidence> evidence;
    Stage stage = Stage::Stage1;
    std::int64_t latency_us = 0;
    std::string meta_json = "{}";
    std::string error;  // ServiceError only

    bool profane() const { return label == Label::ProfaneDirect || label == Label::ProfaneLatent; }
};

/// One wire record: {"chat_id","label","token"?,"key"?,"sim"?,"stage","latency_us","meta"}.
std::string verdict_to_json(const Verdict& v);

/// Threshold-independent view of a chat: the direct hit if any, otherwise the
/// best key for every suspicious token in order.
struct ChatAnalysis {
    std::string normalized;
    std::vector<TokenRecord> tokens;  // after merging
    std::optional<Evidence> direct;
    Stage direct_stage = Stage::Stage1;
    struct Candidate {
        std::string token;
        std::optional<SearchHit> best;  // absent with stage 2 disabled or a zero embedding
    };
    std::vector<Candidate> candidates;

    /// Verdict label at a threshold (first candidate at or above it wins).
    Label label_at(double threshold) const;
};

/// Immutable view shared by in-flight detections.
struct DetectorSnapshot {
    Lexicon lexicon;
    NormalizationConfig normalization;
    std::shared_ptr<const EncoderParams<float>> params;  // null: stage 2 disabled
    std::shared_ptr<const LatentIndex> index;
    std::uint64_t version = 0;
};

/// The two-stage detector. detect() is reentrant; add_profane_key() and
/// set_threshold() swap in a new snapshot atomically.
class Detector {
public:
    Detector() = default;
    /// Builds the index from the profane vocabulary unless one is supplied.
    Detector(Lexicon lexicon, NormalizationConfig normalization, std::shared_ptr<const EncoderParams<float>> params,
             double threshold = 0.8, std::size_t max_chat_len = 4096, HnswParams hnsw = {},
             std::optional<LatentIndex> index = std::nullopt);

    /// Loads vocabularies and weights and builds (or loads) the index.
    static std::unique_ptr<Detector> open(const PipelineConfig& cfg);

    Verdict detect(const RawChat& chat) const;
    Verdict detect(const RawChat& chat, double threshold) const;
    ChatAnalysis analyze(const RawChat& chat) const;

    /// Profane key becomes live for both stages: one forward call, no
    /// parameter update. Returns the normalized key.
    std::string add_profane_key(const std::string& key);

    void set_threshold(double threshold);
    double threshold() const;
    bool latent_enabled() const;
    std::shared_ptr<const DetectorSnapshot> snapshot() const;

private:
    ChatAnalysis run(const RawChat& chat, const DetectorSnapshot& snap, std::optional<double> stop_at) const;
    std::string prefilter(std::string_view text, const Lexicon& lexicon) const;

    mutable std::mutex mu_;
    std::mutex writer_mu_;  // serializes snapshot rebuilds
    std::shared_ptr<const DetectorSnapshot> snap_;
    double threshold_ = 0.8;
    std::size_t max_chat_len_ = 4096;
};

/// Index over the profane vocabulary, keys inserted in sorted order. Keys
/// that embed to the zero vector are left out (they still match directly).
LatentIndex build_profane_index(const Lexicon& lexicon, const EncoderParams<float>& params, const HnswParams& hnsw);

/// Reuses a cached index built from the same weights when its keys are a
/// subset of the vocabulary, inserting whatever is missing; otherwise rebuilds.
LatentIndex reconcile_index(std::optional<LatentIndex> cached, std::uint64_t cached_fingerprint,
                            const Lexicon& lexicon, const EncoderParams<float>& params, const HnswParams& hnsw);

}  // namespace yzr
