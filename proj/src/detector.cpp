#include <algorithm>
#include <chrono>

#include <spdlog/spdlog.h>

#include "yzr/error.hpp"
#include "yzr/kvconfig.hpp"
#include "yzr/pipeline.hpp"
#include "yzr/utf8.hpp"
#include "yzr/weights_io.hpp"

namespace yzr {

void PipelineConfig::validate() const {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be in (0, 1]");
    if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
    if (max_chat_len < 1) throw Error(ErrorCode::InvalidArgument, "max_chat_len must be >= 1");
    hnsw.validate();
    for (const auto* p : {&safe_english, &safe_hinglish, &safe_platform, &extra_safe, &profane, &weights, &normalization}) {
        if (*p && !std::filesystem::exists(**p)) throw Error(ErrorCode::Io, "configured path does not exist: " + (*p)->string());
    }
}

PipelineConfig PipelineConfig::from_config(const KeyValueConfig& kv) {
    PipelineConfig c;
    c.threshold = kv.get_double("threshold", c.threshold);
    c.safe_english = kv.get_path("vocab.safe_english");
    c.safe_hinglish = kv.get_path("vocab.safe_hinglish");
    c.safe_platform = kv.get_path("vocab.safe_platform");
    c.extra_safe = kv.get_path("vocab.extra_safe");
    c.profane = kv.get_path("vocab.profane");
    c.weights = kv.get_path("weights");
    c.index = kv.get_path("index");
    c.normalization = kv.get_path("normalization");
    c.listen = kv.get_or("listen", "");
    c.workers = static_cast<int>(kv.get_int("workers", c.workers));
    const long long max_len = kv.get_int("max_chat_len", static_cast<long long>(c.max_chat_len));
    if (max_len < 1) throw Error(ErrorCode::InvalidArgument, "max_chat_len must be >= 1");
    c.max_chat_len = static_cast<std::size_t>(max_len);
    c.hnsw.M = static_cast<int>(kv.get_int("hnsw.m", c.hnsw.M));
    c.hnsw.ef_construction = static_cast<int>(kv.get_int("hnsw.ef_construction", c.hnsw.ef_construction));
    c.hnsw.ef_search = static_cast<int>(kv.get_int("hnsw.ef_search", c.hnsw.ef_search));
    c.hnsw.seed = static_cast<std::uint64_t>(kv.get_int("hnsw.seed", 0));
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    return from_config(KeyValueConfig::load(path));
}

const char* to_string(Label label) noexcept {
    switch (label) {
        case Label::NotProfane: return "not_profane";
        case Label::ProfaneDirect: return "profane_direct";
        case Label::ProfaneLatent: return "profane_latent";
        case Label::ServiceError: return "service_error";
    }
    return "unknown";
}

const char* to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Prefilter: return "prefilter";
        case Stage::Stage1: return "stage1";
        case Stage::Stage2: return "stage2";
        case Stage::Service: return "service";
    }
    return "unknown";
}

Label ChatAnalysis::label_at(double threshold) const {
    if (direct) return Label::ProfaneDirect;
    for (const auto& c : candidates) {
        if (c.best && c.best->similarity >= threshold) return Label::ProfaneLatent;
    }
    return Label::NotProfane;
}

namespace {

bool nonzero(std::span<const float> v) {
    return std::any_of(v.begin(), v.end(), [](float x) { return x != 0.0f; });
}

std::span<const float> row(const Matrix<float>& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::string cut_utf8(std::string_view text, std::size_t max_bytes) {
    if (text.size() <= max_bytes) return std::string(text);
    std::size_t end = max_bytes;
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    return std::string(text.substr(0, end));
}

}  // namespace

LatentIndex build_profane_index(const Lexicon& lexicon, const EncoderParams<float>& params, const HnswParams& hnsw) {
    std::vector<std::string> keys(lexicon.profane().entries.begin(), lexicon.profane().entries.end());
    std::sort(keys.begin(), keys.end());
    LatentIndex index(params.config.proj_dim, hnsw);
    if (keys.empty()) return index;
    std::vector<CharSeq> seqs;
    for (const auto& k : keys) seqs.push_back(encode_token(k));
    const Matrix<float> z = embed(params, seqs);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto v = row(z, static_cast<Eigen::Index>(i));
        if (!nonzero(v)) {
            spdlog::warn("profane key '{}' embeds to the zero vector; direct matching only", keys[i]);
            continue;
        }
        index.insert(keys[i], v);
    }
    return index;
}

LatentIndex reconcile_index(std::optional<LatentIndex> cached, std::uint64_t cached_fingerprint, const Lexicon& lexicon,
                            const EncoderParams<float>& params, const HnswParams& hnsw) {
    if (!cached || cached_fingerprint != params_fingerprint(params) || cached->dim() != params.config.proj_dim) {
        return build_profane_index(lexicon, params, hnsw);
    }
    for (std::uint32_t n = 0; n < cached->size(); ++n) {
        if (!lexicon.is_profane(cached->key_of(n))) {
            spdlog::info("cached index holds '{}', which left the vocabulary; rebuilding", cached->key_of(n));
            return build_profane_index(lexicon, params, hnsw);
        }
    }
    std::vector<std::string> missing;
    for (const auto& k : lexicon.profane().entries) {
        if (!cached->contains(k)) missing.push_back(k);
    }
    std::sort(missing.begin(), missing.end());
    if (!missing.empty()) {
        std::vector<CharSeq> seqs;
        for (const auto& k : missing) seqs.push_back(encode_token(k));
        const Matrix<float> z = embed(params, seqs);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            const auto v = row(z, static_cast<Eigen::Index>(i));
            if (nonzero(v)) cached->insert(missing[i], v);
        }
    }
    return std::move(*cached);
}

Detector::Detector(Lexicon lexicon, NormalizationConfig normalization, std::shared_ptr<const EncoderParams<float>> params,
                   double threshold, std::size_t max_chat_len, HnswParams hnsw, std::optional<LatentIndex> index)
    : threshold_(threshold), max_chat_len_(max_chat_len) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be in (0, 1]");
    normalization.validate();
    auto snap = std::make_shared<DetectorSnapshot>();
    if (params) {
        if (!params->all_finite()) throw Error(ErrorCode::NonFinite, "encoder weights contain non-finite values");
        snap->index = std::make_shared<const LatentIndex>(index ? std::move(*index) : build_profane_index(lexicon, *params, hnsw));
    }
    snap->lexicon = std::move(lexicon);
    snap->normalization = std::move(normalization);
    snap->params = std::move(params);
    snap->version = 1;
    snap_ = std::move(snap);
}

std::unique_ptr<Detector> Detector::open(const PipelineConfig& cfg) {
    cfg.validate();
    NormalizationConfig norm = cfg.normalization ? NormalizationConfig::load(*cfg.normalization) : NormalizationConfig{};
    std::vector<Vocabulary> safe;
    const std::pair<const std::optional<std::filesystem::path>*, VocabularyKind> sources[] = {
        {&cfg.safe_english, VocabularyKind::SafeEnglish},
        {&cfg.safe_hinglish, VocabularyKind::SafeHinglish},
        {&cfg.safe_platform, VocabularyKind::SafePlatform},
        {&cfg.extra_safe, VocabularyKind::SafePlatform},
    };
    for (const auto& [path, kind] : sources) {
        if (*path) safe.push_back(load_vocabulary(**path, kind));
    }
    Vocabulary profane = cfg.profane ? load_vocabulary(*cfg.profane, VocabularyKind::Profane)
                                     : make_vocabulary(VocabularyKind::Profane, {});
    Lexicon lexicon(std::move(safe), std::move(profane));

    std::shared_ptr<const EncoderParams<float>> params;
    std::optional<LatentIndex> index;
    if (cfg.weights) {
        params = std::make_shared<const EncoderParams<float>>(load_params(*cfg.weights));
        std::optional<LatentIndex> cached;
        std::uint64_t fp = 0;
        if (cfg.index && std::filesystem::exists(*cfg.index)) {
            try {
                cached = LatentIndex::load(*cfg.index, &fp);
            } catch (const Error& e) {
                spdlog::warn("ignoring index cache {}: {}", cfg.index->string(), e.what());
            }
        }
        index = reconcile_index(std::move(cached), fp, lexicon, *params, cfg.hnsw);
    } else {
        spdlog::info("no weights configured; latent matching disabled");
    }
    return std::make_unique<Detector>(std::move(lexicon), std::move(norm), std::move(params), cfg.threshold,
                                      cfg.max_chat_len, cfg.hnsw, std::move(index));
}

std::shared_ptr<const DetectorSnapshot> Detector::snapshot() const {
    std::lock_guard lock(mu_);
    if (!snap_) throw Error(ErrorCode::NotInitialized, "detector has not been initialized");
    return snap_;
}

double Detector::threshold() const {
    std::lock_guard lock(mu_);
    return threshold_;
}

void Detector::set_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be in (0, 1]");
    std::lock_guard lock(mu_);
    threshold_ = threshold;
}

bool Detector::latent_enabled() const { return snapshot()->params != nullptr; }

// Exact whole-word lookup of raw [a-z] runs; catches correctly spelled words
// before normalization runs at all.
std::string Detector::prefilter(std::string_view text, const Lexicon& lexicon) const {
    if (lexicon.profane().size() == 0) return {};
    std::string lowered = strip_links(text);
    for (auto& c : lowered) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    std::size_t i = 0;
    while (i < lowered.size()) {
        if (lowered[i] < 'a' || lowered[i] > 'z') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < lowered.size() && lowered[j] >= 'a' && lowered[j] <= 'z') ++j;
        const bool bounded = (i == 0 || static_cast<unsigned char>(lowered[i - 1]) < 0x80) &&
                             (j == lowered.size() || static_cast<unsigned char>(lowered[j]) < 0x80);
        std::string word = lowered.substr(i, j - i);
        if (bounded && lexicon.is_profane(word)) return word;
        i = j;
    }
    return {};
}

ChatAnalysis Detector::run(const RawChat& chat, const DetectorSnapshot& snap, std::optional<double> stop_at) const {
    ChatAnalysis a;
    std::size_t max_len;
    {
        std::lock_guard lock(mu_);
        max_len = max_chat_len_;
    }
    const std::string text = cut_utf8(chat.text, max_len);
    if (text.size() < chat.text.size()) spdlog::debug("chat '{}' cut to {} bytes", chat.id, text.size());

    if (std::string hit = prefilter(text, snap.lexicon); !hit.empty()) {
        a.direct = Evidence{hit, hit, std::nullopt};
        a.direct_stage = Stage::Prefilter;
        return a;
    }
    a.normalized = normalize(text, snap.normalization);
    a.tokens = tokenize(a.normalized, snap.lexicon);
    auto direct = [&]() {
        for (const auto& t : a.tokens) {
            if (t.cls == TokenClass::ProfaneDirect) {
                a.direct = Evidence{t.text, t.text, std::nullopt};
                a.direct_stage = Stage::Stage1;
                return true;
            }
        }
        return false;
    };
    if (direct()) return a;
    a.tokens = merge_suspicious(a.tokens, snap.lexicon);
    if (direct()) return a;

    std::vector<CharSeq> batch;
    for (const auto& t : a.tokens) {
        if (t.cls != TokenClass::Suspicious || !t.seq) continue;
        a.candidates.push_back({t.text, std::nullopt});
        batch.push_back(*t.seq);
    }
    if (batch.empty() || !snap.params || !snap.index || snap.index->empty()) return a;

    const Matrix<float> z = embed(*snap.params, batch);
    if (!z.allFinite()) throw Error(ErrorCode::NonFinite, "encoder produced a non-finite embedding");
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        const auto v = row(z, static_cast<Eigen::Index>(i));
        if (!nonzero(v)) continue;
        a.candidates[i].best = snap.index->search(v, 1).front();
        if (stop_at && a.candidates[i].best->similarity >= *stop_at) {
            a.candidates.resize(i + 1);
            break;
        }
    }
    return a;
}

ChatAnalysis Detector::analyze(const RawChat& chat) const {
    const auto snap = snapshot();
    return run(chat, *snap, std::nullopt);
}

Verdict Detector::detect(const RawChat& chat) const { return detect(chat, threshold()); }

Verdict Detector::detect(const RawChat& chat, double threshold) const {
    const auto start = std::chrono::steady_clock::now();
    const auto snap = snapshot();
    const ChatAnalysis a = run(chat, *snap, threshold);

    Verdict v;
    v.chat_id = chat.id;
    v.meta_json = chat.meta_json;
    if (a.direct) {
        v.label = Label::ProfaneDirect;
        v.evidence = a.direct;
        v.stage = a.direct_stage;
    } else {
        const bool searched = std::any_of(a.candidates.begin(), a.candidates.end(), [](const auto& c) { return c.best.has_value(); });
        v.stage = searched ? Stage::Stage2 : Stage::Stage1;
        for (const auto& c : a.candidates) {
            if (c.best && c.best->similarity >= threshold) {
                v.label = Label::ProfaneLatent;
                v.evidence = Evidence{c.token, c.best->key, c.best->similarity};
                break;
            }
        }
    }
    v.latency_us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start).count();
    return v;
}

std::string Detector::add_profane_key(const std::string& key) {
    std::shared_ptr<const DetectorSnapshot> cur = snapshot();
    const std::string n = normalize(key, cur->normalization);
    if (n.empty()) throw Error(ErrorCode::EmptyToken, "'" + key + "' normalizes to nothing");
    if (n.find(' ') != std::string::npos) throw Error(ErrorCode::InvalidArgument, "profane key must be a single token: '" + n + "'");
    const CharSeq seq = encode_token(n);

    // Readers keep using whatever snapshot they already hold.
    std::lock_guard wlock(writer_mu_);
    cur = snapshot();
    if (cur->lexicon.is_profane(n)) return n;

    auto next = std::make_shared<DetectorSnapshot>(*cur);
    next->lexicon = cur->lexicon.with_profane_key(n);
    if (cur->params) {
        LatentIndex index = *cur->index;
        const Matrix<float> z = embed(*cur->params, std::span<const CharSeq>(&seq, 1));
        if (nonzero(row(z, 0))) {
            index.insert(n, row(z, 0));
        } else {
            spdlog::warn("profane key '{}' embeds to the zero vector; direct matching only", n);
        }
        next->index = std::make_shared<const LatentIndex>(std::move(index));
    }
    next->version = cur->version + 1;
    std::lock_guard lock(mu_);
    snap_ = std::move(next);
    return n;
}

}  // namespace yzr
