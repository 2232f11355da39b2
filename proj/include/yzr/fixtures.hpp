#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "yzr/dataset.hpp"

namespace yzr {

struct CorpusSpec {
    int n_safe = 450;
    int n_profane = 50;
    int min_len = 3;
    int max_len = 12;
    std::uint64_t seed = 1;
    int variant_ops = 1;
    int min_separation = 3;  // edit distance between profane keys, and profane vs safe

    void validate() const;
};

struct Corpus {
    std::vector<std::string> safe;
    std::vector<std::string> profane;
};

/// Levenshtein distance over bytes.
int edit_distance(std::string_view a, std::string_view b);

/// Random lowercase tokens. Profane keys are pairwise min_separation apart and
/// that far from every safe token; no token is a proper prefix of a profane
/// key, so a spaced-out key never merges into a vocabulary word on the way.
/// Throws SpecInfeasible when the tokens cannot be placed.
Corpus generate_corpus(const CorpusSpec& spec);

/// Every distinct token reachable from `key` by 1..ops interior edits, each
/// edit deleting a character or replacing it with '*'. Sorted.
std::vector<std::string> variant_space(std::string_view key, int ops);

/// n distinct variants drawn from variant_space. Throws NotEnoughVariants.
std::vector<std::string> generate_variants(std::string_view key, int n, int ops, std::uint64_t seed);

enum class ProfaneStyle {
    Exact,     // the key as-is
    Censored,  // interior characters starred only
    Variant,   // any 1..ops edit
    Spaced,    // letters separated by single spaces
    Mixed,
};

struct ChatSpec {
    int n_chats = 100;
    double profane_fraction = 0.5;
    int min_words = 3;
    int max_words = 10;
    ProfaneStyle style = ProfaneStyle::Mixed;
    int variant_ops = 1;
    std::uint64_t seed = 1;
};

/// Safe-token sentences; a profane chat carries exactly one rendering of one key.
std::vector<LabeledChat> generate_chats(const Corpus& corpus, const ChatSpec& spec);

/// Writes safe.txt, profane.txt, variants.txt (key<TAB>variant) and chats.csv.
void write_fixture_files(const std::filesystem::path& dir, const Corpus& corpus, const CorpusSpec& spec,
                         const ChatSpec& chats);

}  // namespace yzr
