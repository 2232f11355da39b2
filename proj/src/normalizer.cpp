#include "yzr/normalizer.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "yzr/error.hpp"
#include "yzr/kvconfig.hpp"
#include "yzr/utf8.hpp"

namespace yzr {

namespace {

// Latin-1 Supplement letters U+00C0..U+00FF; "" leaves the code point alone
// (the two math signs at U+00D7 and U+00F7).
constexpr const char* kLatin1Fold[64] = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o",  "",  "o", "u", "u", "u", "u", "y", "th", "ss",
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o",  "",  "o", "u", "u", "u", "u", "y", "th", "y",
};

// Latin Extended-A U+0100..U+017F as (count, folding) runs in code point order.
struct FoldRun {
    int count;
    const char* base;
};
constexpr FoldRun kLatinExtAFold[] = {
    {6, "a"}, {8, "c"},  {4, "d"}, {10, "e"}, {8, "g"}, {4, "h"}, {10, "i"}, {2, "ij"},
    {2, "j"}, {3, "k"},  {10, "l"}, {9, "n"}, {6, "o"}, {2, "oe"}, {6, "r"}, {8, "s"},
    {6, "t"}, {12, "u"}, {2, "w"}, {3, "y"},  {6, "z"}, {1, "s"},
};

const char* fold_accent(char32_t c) {
    if (c >= 0xC0 && c <= 0xFF) {
        const char* f = kLatin1Fold[c - 0xC0];
        return *f ? f : nullptr;
    }
    if (c >= 0x100 && c <= 0x17F) {
        int offset = static_cast<int>(c - 0x100);
        for (const auto& run : kLatinExtAFold) {
            if (offset < run.count) return run.base;
            offset -= run.count;
        }
    }
    return nullptr;
}

bool is_combining_mark(char32_t c) { return c >= 0x300 && c <= 0x36F; }

bool is_whitespace(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_math_operator(char32_t c) {
    switch (c) {
        case U'+': case U'=': case U'<': case U'>': case U'^': case U'%': case U'~':
        case 0xAC: case 0xB1: case 0xD7: case 0xF7:
            return true;
        default:
            return (c >= 0x2200 && c <= 0x22FF) || (c >= 0x2A00 && c <= 0x2AFF);
    }
}

bool is_ascii_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }
bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c; }

// Characters that survive rule 7 unchanged.
bool is_output_char(char32_t c) { return is_ascii_letter(c) || c == U' ' || c == U'-' || c == U'*'; }

bool is_word_char(char32_t c) { return is_ascii_letter(c) || is_ascii_digit(c) || (c >= 0x80 && !is_whitespace(c)); }

std::u32string scrub_names(const std::u32string& text, const std::unordered_set<std::string>& names) {
    if (names.empty()) return text;
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(text[i])) {
            out.push_back(text[i++]);
            continue;
        }
        std::size_t j = i;
        std::string word;
        while (j < text.size() && is_word_char(text[j])) utf8::append(word, ascii_lower(text[j++]));
        if (names.count(word)) {
            out.push_back(U' ');
        } else {
            out.append(text, i, j - i);
        }
        i = j;
    }
    return out;
}

const std::regex& url_pattern() {
    static const std::regex re(R"((?:[A-Za-z][A-Za-z0-9+.\-]*://|www\.)[^\s]+)", std::regex::icase);
    return re;
}

const std::regex& email_pattern() {
    static const std::regex re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
    return re;
}

std::string trim_spaces(std::string s) {
    const auto b = s.find_first_not_of(' ');
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(' ');
    return s.substr(b, e - b + 1);
}

char32_t parse_hex(const std::string& s) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used, 16);
    if (used != s.size() || v > 0x10FFFF) throw Error(ErrorCode::Format, "bad code point '" + s + "'");
    return static_cast<char32_t>(v);
}

}  // namespace

std::vector<CodepointRange> default_emoji_ranges() {
    return {
        {0x1F000, 0x1FAFF},  // mahjong .. symbols & pictographs extended-A
        {0x2600, 0x27BF},    // misc symbols, dingbats
        {0x2B00, 0x2BFF},    // arrows/stars used as emoji
        {0x1F1E6, 0x1F1FF},  // regional indicators
        {0xFE00, 0xFE0F},    // variation selectors
        {0x200D, 0x200D},    // zero width joiner
        {0xE0020, 0xE007F},  // tag sequences
    };
}

void NormalizationConfig::validate() const {
    if (repeat_cap < 1) throw Error(ErrorCode::InvalidArgument, "repeat_cap must be >= 1");
    for (const auto& [from, to] : special_to_letter_map) {
        if (to < 'a' || to > 'z') {
            throw Error(ErrorCode::InvalidArgument, "special map target must be a lowercase letter");
        }
        if (is_output_char(from) || is_whitespace(from)) {
            throw Error(ErrorCode::InvalidArgument, "special map source must not be a letter, space, '*' or '-'");
        }
    }
    for (const auto& r : emoji_ranges) {
        if (r.first > r.last) throw Error(ErrorCode::InvalidArgument, "emoji range with first > last");
    }
}

NormalizationConfig NormalizationConfig::from_config(const KeyValueConfig& kv) {
    NormalizationConfig cfg;
    cfg.repeat_cap = static_cast<int>(kv.get_int("repeat_cap", cfg.repeat_cap));
    if (const auto spec = kv.get("special_map")) {
        cfg.special_to_letter_map.clear();
        std::istringstream in(*spec);
        std::string pair;
        while (in >> pair) {
            const auto colon = pair.rfind(':');
            if (colon == std::string::npos || colon == 0 || colon + 2 != pair.size()) {
                throw Error(ErrorCode::Format, "special_map entry '" + pair + "' is not of the form X:y");
            }
            const std::u32string from = utf8::decode(pair.substr(0, colon));
            if (from.size() != 1) throw Error(ErrorCode::Format, "special_map source must be one character");
            cfg.special_to_letter_map[from[0]] = pair.back();
        }
    }
    if (const auto spec = kv.get("emoji_ranges")) {
        cfg.emoji_ranges.clear();
        std::istringstream in(*spec);
        std::string item;
        while (in >> item) {
            const auto dash = item.find('-');
            const char32_t first = parse_hex(item.substr(0, dash));
            const char32_t last = dash == std::string::npos ? first : parse_hex(item.substr(dash + 1));
            cfg.emoji_ranges.push_back({first, last});
        }
    }
    if (const auto path = kv.get_path("name_list")) {
        std::ifstream in(*path);
        if (!in) throw Error(ErrorCode::Io, "cannot open name list " + path->string());
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream words(line);
            std::string w;
            while (words >> w) {
                std::string lower;
                for (char32_t c : utf8::decode(w)) utf8::append(lower, ascii_lower(c));
                cfg.name_list.insert(lower);
            }
        }
    }
    cfg.validate();
    return cfg;
}

NormalizationConfig NormalizationConfig::load(const std::filesystem::path& path) {
    return from_config(KeyValueConfig::load(path));
}

std::string strip_links(std::string_view text) {
    std::string s(text);
    s = std::regex_replace(s, url_pattern(), " ");
    s = std::regex_replace(s, email_pattern(), " ");
    return s;
}

std::string normalize(std::string_view text, const NormalizationConfig& cfg) {
    // (1) links, e-mail handles and names
    std::u32string s = scrub_names(utf8::decode(strip_links(text)), cfg.name_list);

    // (2) look-alike symbols, (3) digits, (4) accents, (5) emoji
    std::u32string t;
    t.reserve(s.size());
    for (char32_t c : s) {
        if (const auto it = cfg.special_to_letter_map.find(c); it != cfg.special_to_letter_map.end()) {
            t.push_back(static_cast<char32_t>(it->second));
        } else {
            t.push_back(c);
        }
    }
    s.clear();
    for (char32_t c : t) {
        if (is_ascii_digit(c)) continue;
        if (is_combining_mark(c)) continue;
        if (const char* folded = fold_accent(c)) {
            for (const char* p = folded; *p; ++p) s.push_back(static_cast<char32_t>(*p));
            continue;
        }
        s.push_back(c);
    }
    t.clear();
    for (char32_t c : s) {
        bool emoji = false;
        for (const auto& r : cfg.emoji_ranges) emoji = emoji || r.contains(c);
        if (!emoji) t.push_back(c);
    }

    // (6) math operators out, whitespace runs to one space
    s.clear();
    for (char32_t c : t) {
        if (is_math_operator(c)) continue;
        if (is_whitespace(c)) {
            if (!s.empty() && s.back() == U' ') continue;
            s.push_back(U' ');
            continue;
        }
        s.push_back(c);
    }

    // (7) each maximal run of leftover symbols becomes one '*'; a run of
    // existing stars with no leftover symbol in it is kept as is.
    t.clear();
    for (std::size_t i = 0; i < s.size();) {
        const char32_t c = s[i];
        if (is_ascii_letter(c) || c == U' ' || c == U'-') {
            t.push_back(c);
            ++i;
            continue;
        }
        std::size_t j = i;
        bool residual = false;
        while (j < s.size() && !is_ascii_letter(s[j]) && s[j] != U' ' && s[j] != U'-') {
            residual = residual || s[j] != U'*';
            ++j;
        }
        if (residual) {
            t.push_back(U'*');
        } else {
            t.append(s, i, j - i);
        }
        i = j;
    }

    // (8) cap repeats (compared case-insensitively so (9) cannot create new runs)
    const auto cap = static_cast<std::size_t>(cfg.repeat_cap);
    std::string out;
    out.reserve(t.size());
    std::size_t run = 0;
    char32_t prev = 0;
    for (char32_t c : t) {
        const char32_t key = ascii_lower(c);
        run = (key == prev) ? run + 1 : 1;
        prev = key;
        // (9) lowercase
        if (run <= cap) out.push_back(static_cast<char>(key));
    }
    out = trim_spaces(std::move(out));

    // Scrubbing again on the final text keeps names that only became whole
    // words after symbol mapping from surviving into the output.
    if (!cfg.name_list.empty()) {
        std::istringstream words(out);
        std::string w, joined;
        while (words >> w) {
            if (cfg.name_list.count(w)) continue;
            if (!joined.empty()) joined.push_back(' ');
            joined += w;
        }
        out = std::move(joined);
    }
    return out;
}

bool is_normalized(std::string_view text, const NormalizationConfig& cfg) {
    NormalizationConfig plain = cfg;
    plain.name_list.clear();
    return normalize(text, plain) == text;
}

}  // namespace yzr
