#include "srg/config.hpp"

#include "srg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace srg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ValidationError("config key '" + key + "': '" + text + "' is not a finite number");
    }
    return v;
}

long long to_int(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError("config key '" + key + "': '" + text + "' is not an integer");
    }
    return v;
}

}  // namespace

Config Config::parse(const std::string& text, std::filesystem::path base_dir) {
    Config cfg;
    cfg.base_dir_ = std::move(base_dir);
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(n) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ValidationError("config line " + std::to_string(n) + ": empty key");
        }
        if (cfg.values_.contains(key)) {
            throw ValidationError("config line " + std::to_string(n) + ": duplicate key '" + key + "'");
        }
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot read config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path());
}

void Config::require_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
        if (!allowed.contains(key)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ValidationError("missing required config key '" + key + "'");
    }
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    return to_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
    return to_int(key, get_string(key));
}

long long Config::get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string text = get_string(key);
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError("config key '" + key + "': '" + text + "' is not an unsigned integer");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ValidationError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::filesystem::path Config::get_path(const std::string& key) const {
    std::filesystem::path p = get_string(key);
    if (p.empty()) {
        throw ValidationError("config key '" + key + "' is empty");
    }
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

std::vector<std::filesystem::path> Config::get_paths(const std::string& key) const {
    std::vector<std::filesystem::path> out;
    for (const auto& item : split_list(get_string(key))) {
        std::filesystem::path p = item;
        out.push_back(p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p);
    }
    if (out.empty()) {
        throw ValidationError("config key '" + key + "' lists no paths");
    }
    return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) {
        out.push_back(to_double(key, item));
    }
    return out;
}

std::vector<int> Config::get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(get_string(key))) {
        out.push_back(static_cast<int>(to_int(key, item)));
    }
    return out;
}

}  // namespace srg
