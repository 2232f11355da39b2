#include <algorithm>
#include <fstream>
#include <sstream>

#include "yzr/dataset.hpp"
#include "yzr/error.hpp"

namespace yzr {

std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
            if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
            row.clear();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw Error(ErrorCode::Format, "unterminated quoted CSV field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<LabeledChat> parse_labeled_csv(const std::string& content, const std::string& origin) {
    const auto rows = parse_csv(content);
    if (rows.empty()) throw Error(ErrorCode::Format, origin + ": missing text,label header");
    const auto& header = rows.front();
    int text_col = -1, label_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string h = header[i];
        if (i == 0 && h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
        if (h == "text") text_col = static_cast<int>(i);
        if (h == "label") label_col = static_cast<int>(i);
    }
    if (text_col < 0 || label_col < 0) throw Error(ErrorCode::Format, origin + ": header must name text and label columns");
    std::vector<LabeledChat> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto need = static_cast<std::size_t>(std::max(text_col, label_col));
        if (row.size() <= need) throw Error(ErrorCode::Format, origin + ": row " + std::to_string(r + 1) + " is short");
        const std::string& label = row[static_cast<std::size_t>(label_col)];
        Gold gold;
        if (label == "profane") {
            gold = Gold::Profane;
        } else if (label == "not_profane") {
            gold = Gold::NotProfane;
        } else {
            throw Error(ErrorCode::Format, origin + ": row " + std::to_string(r + 1) + ": unknown label '" + label + "'");
        }
        out.push_back({row[static_cast<std::size_t>(text_col)], gold});
    }
    return out;
}

std::vector<LabeledChat> read_labeled_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_labeled_csv(ss.str(), path.string());
}

void write_labeled_csv(const std::filesystem::path& path, const std::vector<LabeledChat>& chats) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << "text,label\n";
    for (const auto& c : chats) out << csv_field(c.text) << ',' << (c.gold == Gold::Profane ? "profane" : "not_profane") << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed on " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed on " + path.string());
}

}  // namespace yzr
