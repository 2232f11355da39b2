#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace yzr {

enum class Gold { NotProfane, Profane };

struct LabeledChat {
    std::string text;
    Gold gold = Gold::NotProfane;
};

/// UTF-8 CSV with a `text,label` header; label is `profane` or `not_profane`.
/// Fields may be double-quoted with "" escapes and embedded newlines.
std::vector<LabeledChat> read_labeled_csv(const std::filesystem::path& path);
std::vector<LabeledChat> parse_labeled_csv(const std::string& content, const std::string& origin = "<string>");
void write_labeled_csv(const std::filesystem::path& path, const std::vector<LabeledChat>& chats);

/// Parses one CSV document into rows of fields.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);
/// Quotes the field when it contains a comma, quote or line break.
std::string csv_field(const std::string& field);

/// One entry per non-empty line, trailing '\r' removed.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace yzr
