#pragma once

// Flat "key = value" run configuration. Lines starting with '#' and blank
// lines are ignored; a '#' after a value starts a trailing comment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fairsel {

class RunConfig {
public:
    static RunConfig parse(std::istream& in, const std::string& source = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    /// Flag values override file values.
    void set(const std::string& key, std::string value);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Throws ConfigError naming the first key not in `allowed`.
    void reject_unknown(const std::set<std::string>& allowed) const;

    // Typed accessors; a missing key raises ConfigError naming it.
    std::string text(const std::string& key) const;
    double real(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t integer(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<std::size_t> counts(const std::string& key) const;
    std::vector<std::string> words(const std::string& key) const;

    std::string text_or(const std::string& key, const std::string& fallback) const;
    double real_or(const std::string& key, double fallback) const;
    std::size_t count_or(const std::string& key, std::size_t fallback) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    const std::string& raw(const std::string& key) const;

    std::map<std::string, std::string> values_;
};

}  // namespace fairsel
