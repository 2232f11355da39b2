#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace yzr {

// `key = value` lines, '#' comments, UTF-8. Later keys override earlier ones.
class KeyValueConfig {
public:
    static KeyValueConfig load(const std::filesystem::path& path);
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    /// Paths are resolved relative to the directory of the loaded file.
    std::optional<std::filesystem::path> get_path(const std::string& key) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }

private:
    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
    std::string origin_;
};

}  // namespace yzr
