#include "yzr/tokenizer.hpp"

#include <atomic>
#include <fstream>

#include "yzr/error.hpp"
#include "yzr/normalizer.hpp"
#include "yzr/utf8.hpp"

namespace yzr {

const char* to_string(VocabularyKind kind) noexcept {
    switch (kind) {
        case VocabularyKind::SafeEnglish: return "safe_english";
        case VocabularyKind::SafeHinglish: return "safe_hinglish";
        case VocabularyKind::SafePlatform: return "safe_platform";
        case VocabularyKind::Profane: return "profane";
    }
    return "unknown";
}

const char* to_string(TokenClass cls) noexcept {
    switch (cls) {
        case TokenClass::Safe: return "safe";
        case TokenClass::ProfaneDirect: return "profane_direct";
        case TokenClass::Suspicious: return "suspicious";
    }
    return "unknown";
}

std::uint64_t next_vocabulary_version() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

namespace {

// Returns an error description, or empty when the normalized entry is usable.
std::string check_entry(const std::string& entry) {
    if (entry.find(' ') != std::string::npos) return "embedded space";
    if (utf8::length(entry) > static_cast<std::size_t>(kSeqLen)) return "longer than 24 characters";
    return {};
}

}  // namespace

Vocabulary load_vocabulary(const std::filesystem::path& path, VocabularyKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open vocabulary " + path.string());
    const NormalizationConfig norm;
    Vocabulary vocab{kind, {}, 0};
    std::string report;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::string entry = normalize(line, norm);
        if (entry.empty()) continue;
        if (const std::string problem = check_entry(entry); !problem.empty()) {
            report += "\n  " + path.string() + ":" + std::to_string(lineno) + ": " + problem + " ('" + line + "')";
            continue;
        }
        vocab.entries.insert(entry);
    }
    if (!report.empty()) throw Error(ErrorCode::Format, "invalid vocabulary entries:" + report);
    vocab.version = next_vocabulary_version();
    return vocab;
}

Vocabulary make_vocabulary(VocabularyKind kind, const std::vector<std::string>& tokens) {
    const NormalizationConfig norm;
    Vocabulary vocab{kind, {}, 0};
    for (const auto& t : tokens) {
        const std::string entry = normalize(t, norm);
        if (entry.empty()) continue;
        if (const std::string problem = check_entry(entry); !problem.empty()) {
            throw Error(ErrorCode::Format, "vocabulary entry '" + t + "': " + problem);
        }
        vocab.entries.insert(entry);
    }
    vocab.version = next_vocabulary_version();
    return vocab;
}

Lexicon::Lexicon(std::vector<Vocabulary> safe, Vocabulary profane)
    : safe_(std::move(safe)), profane_(std::move(profane)) {
    std::string clashes;
    for (const auto& key : profane_.entries) {
        for (const auto& v : safe_) {
            if (v.contains(key)) clashes += " '" + key + "' (" + to_string(v.kind) + ")";
        }
    }
    if (!clashes.empty()) throw Error(ErrorCode::Conflict, "tokens in both profane and safe vocabularies:" + clashes);
}

bool Lexicon::is_safe(std::string_view token) const {
    for (const auto& v : safe_) {
        if (v.contains(token)) return true;
    }
    return false;
}

TokenClass Lexicon::classify(std::string_view token) const {
    if (profane_.contains(token)) return TokenClass::ProfaneDirect;
    if (is_safe(token)) return TokenClass::Safe;
    return TokenClass::Suspicious;
}

Lexicon Lexicon::with_profane_key(const std::string& key) const {
    Vocabulary profane = profane_;
    profane.entries.insert(key);
    profane.version = next_vocabulary_version();
    return Lexicon(safe_, std::move(profane));
}

namespace {

TokenRecord make_record(std::string text, Span span, const Lexicon& lexicon) {
    TokenRecord rec;
    rec.span = span;
    if (utf8::length(text) > static_cast<std::size_t>(kSeqLen)) {
        rec.cls = TokenClass::Safe;  // too long to be matchable
    } else {
        rec.cls = lexicon.classify(text);
        rec.seq = encode_token(text);
    }
    rec.text = std::move(text);
    return rec;
}

}  // namespace

std::vector<TokenRecord> tokenize(std::string_view normalized, const Lexicon& lexicon) {
    std::vector<TokenRecord> out;
    std::size_t i = 0;
    while (i < normalized.size()) {
        if (normalized[i] == ' ') {
            ++i;
            continue;
        }
        std::size_t j = normalized.find(' ', i);
        if (j == std::string_view::npos) j = normalized.size();
        out.push_back(make_record(std::string(normalized.substr(i, j - i)), {i, j}, lexicon));
        i = j;
    }
    return out;
}

std::vector<TokenRecord> merge_suspicious(const std::vector<TokenRecord>& tokens, const Lexicon& lexicon) {
    std::vector<TokenRecord> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        const bool joinable = tok.cls == TokenClass::Suspicious && !out.empty() &&
                              out.back().cls == TokenClass::Suspicious &&
                              utf8::length(tok.text) <= kMergeSuffixMax;
        if (joinable) {
            std::string joined = out.back().text + tok.text;
            if (utf8::length(joined) <= static_cast<std::size_t>(kSeqLen)) {
                const Span span{out.back().span.begin, tok.span.end};
                out.back() = make_record(std::move(joined), span, lexicon);
                continue;
            }
        }
        out.push_back(tok);
    }
    return out;
}

}  // namespace yzr
