#include "fairsel/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

double parse_real(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) {
        throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    }
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    if (s.empty() || s[0] == '-' || s[0] == '+') {
        throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + s + "'");
    }
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + s + "'");
    }
    return v;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
    RunConfig config;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
        if (config.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        config.values_[key] = value;
    }
    return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void RunConfig::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

void RunConfig::reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
}

const std::string& RunConfig::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

std::string RunConfig::text(const std::string& key) const { return raw(key); }

double RunConfig::real(const std::string& key) const { return parse_real(key, raw(key)); }

std::size_t RunConfig::count(const std::string& key) const {
    return static_cast<std::size_t>(parse_unsigned(key, raw(key)));
}

std::uint64_t RunConfig::integer(const std::string& key) const { return parse_unsigned(key, raw(key)); }

std::vector<double> RunConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(raw(key))) out.push_back(parse_real(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "' lists no values");
    return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(raw(key))) {
        out.push_back(static_cast<std::size_t>(parse_unsigned(key, item)));
    }
    if (out.empty()) throw ConfigError("key '" + key + "' lists no values");
    return out;
}

std::vector<std::string> RunConfig::words(const std::string& key) const {
    auto out = split_list(raw(key));
    if (out.empty()) throw ConfigError("key '" + key + "' lists no values");
    return out;
}

std::string RunConfig::text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

double RunConfig::real_or(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
}

std::size_t RunConfig::count_or(const std::string& key, std::size_t fallback) const {
    return has(key) ? count(key) : fallback;
}

}  // namespace fairsel
