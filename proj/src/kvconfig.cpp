#include "yzr/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "yzr/error.hpp"

namespace yzr {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    KeyValueConfig cfg = parse(ss.str(), path.string());
    cfg.base_dir_ = std::filesystem::absolute(path).parent_path();
    return cfg;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    cfg.base_dir_ = std::filesystem::current_path();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::Format, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::Format, origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return cfg;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        throw Error(ErrorCode::Format, origin_ + ": key '" + key + "' is not a number: " + *v);
    }
    return out;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
        throw Error(ErrorCode::Format, origin_ + ": key '" + key + "' is not an integer: " + *v);
    }
    return out;
}

std::optional<std::filesystem::path> KeyValueConfig::get_path(const std::string& key) const {
    const auto v = get(key);
    if (!v || v->empty()) return std::nullopt;
    std::filesystem::path p(*v);
    if (p.is_relative()) p = base_dir_ / p;
    return p.lexically_normal();
}

}  // namespace yzr
