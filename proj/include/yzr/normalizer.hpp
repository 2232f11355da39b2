#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace yzr {

class KeyValueConfig;

struct RawChat {
    std::string id;
    std::string text;
    std::string meta_json = "{}";  // carried through untouched
};

struct CodepointRange {
    char32_t first = 0;
    char32_t last = 0;
    bool contains(char32_t c) const noexcept { return c >= first && c <= last; }
};

std::vector<CodepointRange> default_emoji_ranges();

struct NormalizationConfig {
    std::map<char32_t, char> special_to_letter_map{{U'$', 's'}, {U'@', 'a'}};
    std::vector<CodepointRange> emoji_ranges = default_emoji_ranges();
    // Lowercase single words; each is scrubbed wherever it appears as a whole word.
    std::unordered_set<std::string> name_list;
    int repeat_cap = 2;

    /// Throws InvalidArgument when a map value is not a lowercase letter, a map key
    /// is itself an output character, or repeat_cap < 1.
    void validate() const;

    /// Keys: repeat_cap, special_map ("$:s @:a"), emoji_ranges ("1F300-1FAFF ..."),
    /// name_list (path, one name per line).
    static NormalizationConfig from_config(const KeyValueConfig& kv);
    static NormalizationConfig load(const std::filesystem::path& path);
};

/// Collapses raw chat text onto the alphabet {a..z, ' ', '*', '-'}. Total; may
/// return an empty string.
std::string normalize(std::string_view text, const NormalizationConfig& cfg);
inline std::string normalize(const RawChat& chat, const NormalizationConfig& cfg) {
    return normalize(chat.text, cfg);
}

/// True iff normalize() (ignoring the name list) leaves the text unchanged.
bool is_normalized(std::string_view text, const NormalizationConfig& cfg = {});

/// Rule 1 alone: blanks out URLs and e-mail handles. Shared with the raw-text
/// prefilter so both stages agree on what counts as a link.
std::string strip_links(std::string_view text);

}  // namespace yzr
