#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace srg {

/// Plain `key = value` configuration. `#` starts a comment; blank lines are
/// ignored. Relative paths resolve against the directory of the config file.
class Config {
public:
    static Config parse(const std::string& text, std::filesystem::path base_dir = {});
    static Config load(const std::filesystem::path& path);

    /// Throws ValidationError naming the first key outside `allowed`.
    void require_known(const std::set<std::string>& allowed) const;

    [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long long get_int(const std::string& key) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::filesystem::path get_path(const std::string& key) const;
    [[nodiscard]] std::vector<std::filesystem::path> get_paths(const std::string& key) const;
    [[nodiscard]] std::vector<double> get_doubles(const std::string& key) const;
    [[nodiscard]] std::vector<int> get_ints(const std::string& key) const;

    [[nodiscard]] const std::filesystem::path& base_dir() const { return base_dir_; }

private:
    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
};

}  // namespace srg
