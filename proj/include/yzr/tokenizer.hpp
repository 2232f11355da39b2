#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "yzr/chardomain.hpp"

namespace yzr {

enum class VocabularyKind { SafeEnglish, SafeHinglish, SafePlatform, Profane };

const char* to_string(VocabularyKind kind) noexcept;

struct Vocabulary {
    VocabularyKind kind = VocabularyKind::SafeEnglish;
    std::unordered_set<std::string> entries;
    std::uint64_t version = 0;

    bool contains(std::string_view token) const { return entries.count(std::string(token)) != 0; }
    std::size_t size() const { return entries.size(); }
};

/// One token per line, '#' comments and blank lines skipped. Each line is
/// normalized before insertion; lines with an embedded space or longer than
/// 24 characters are reported together in one FormatError.
Vocabulary load_vocabulary(const std::filesystem::path& path, VocabularyKind kind);
Vocabulary make_vocabulary(VocabularyKind kind, const std::vector<std::string>& tokens);

/// Process-wide revision counter shared by every vocabulary snapshot.
std::uint64_t next_vocabulary_version();

enum class TokenClass { Safe, ProfaneDirect, Suspicious };

const char* to_string(TokenClass cls) noexcept;

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct TokenRecord {
    std::string text;
    std::optional<CharSeq> seq;  // absent for tokens over 24 characters
    TokenClass cls = TokenClass::Suspicious;
    Span span;
};

// Profane + safe vocabularies validated against each other; immutable once built.
class Lexicon {
public:
    Lexicon() = default;
    /// Throws ConflictError when any token is both profane and safe.
    Lexicon(std::vector<Vocabulary> safe, Vocabulary profane);

    TokenClass classify(std::string_view token) const;
    bool is_profane(std::string_view token) const { return profane_.contains(token); }
    bool is_safe(std::string_view token) const;

    const Vocabulary& profane() const { return profane_; }
    const std::vector<Vocabulary>& safe() const { return safe_; }

    /// Copy with one more profane key; ConflictError if the key is safe.
    Lexicon with_profane_key(const std::string& key) const;

private:
    std::vector<Vocabulary> safe_;
    Vocabulary profane_{VocabularyKind::Profane, {}, 0};
};

std::vector<TokenRecord> tokenize(std::string_view normalized, const Lexicon& lexicon);

/// Greedy left-to-right join of short suspicious tokens onto a preceding
/// suspicious token, re-classifying after each join.
std::vector<TokenRecord> merge_suspicious(const std::vector<TokenRecord>& tokens, const Lexicon& lexicon);

inline constexpr std::size_t kMergeSuffixMax = 4;

}  // namespace yzr
