#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace qcrit {

/// Sectioned key = value text: '[section]' headers, '#' comments, blank
/// lines ignored.  Lookups are by (section, key) with typed accessors;
/// every diagnostic names the file, the line, and the field.
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    long long integer(const std::string& section, const std::string& key,
                      long long fallback) const;

    /// Hash of the raw bytes, embedded in reports for provenance.
    std::uint64_t content_hash() const;
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> kv_;  // "section.key" -> value
    std::string raw_;
    std::string origin_ = "<none>";
};

}  // namespace qcrit
