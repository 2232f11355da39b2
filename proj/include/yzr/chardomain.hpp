#pragma once

#include <array>
#include <string>
#include <string_view>

namespace yzr {

inline constexpr int kSeqLen = 24;
inline constexpr int kAlphabetSize = 31;

inline constexpr int kPadId = 0;
inline constexpr int kFirstLetterId = 1;   // 'a'
inline constexpr int kFirstSpecialId = 27; // ' ', '*', '-'
inline constexpr int kOovId = 30;

inline constexpr std::array<char, 3> kSpecials = {' ', '*', '-'};

// Rendered in place of out-of-domain characters by decode().
inline constexpr char kOovGlyph = '?';

/// The closed model alphabet: 26 letters, 3 specials, an OOV id and padding.
class CharDomain {
public:
    static int id_of(char32_t c) noexcept;
    /// Inverse of id_of on in-domain ids; OOV renders as kOovGlyph, PAD as '\0'.
    static char char_of(int id) noexcept;
    static bool contains(char32_t c) noexcept { return id_of(c) != kOovId; }
};

/// A token as a fixed-length id sequence: real ids first, then padding.
struct CharSeq {
    std::array<int, kSeqLen> ids{};
    int true_len = 0;

    friend bool operator==(const CharSeq&, const CharSeq&) = default;
};

/// Throws EmptyToken / TokenTooLong. Length is measured in code points.
CharSeq encode_token(std::string_view token);
std::string decode(const CharSeq& seq);

}  // namespace yzr
