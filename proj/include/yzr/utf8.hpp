#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace yzr::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Invalid byte sequences decode to U+FFFD, one per offending byte.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

// Number of code points (invalid bytes count as one each).
std::size_t length(std::string_view bytes);

}  // namespace yzr::utf8
