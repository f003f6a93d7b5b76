#include "qcrit/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qcrit/common.hpp"

namespace qcrit {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& origin) {
    Config c;
    c.raw_ = text;
    c.origin_ = origin;

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InvalidInput(origin + ":" + std::to_string(lineno) +
                                   ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw InvalidInput(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw InvalidInput(origin + ":" + std::to_string(lineno) + ": empty key");
        c.kv_[section + "." + key] = value;
    }
    return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return kv_.count(section + "." + key) != 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    auto it = kv_.find(section + "." + key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::number(const std::string& section, const std::string& key,
                      double fallback) const {
    auto it = kv_.find(section + "." + key);
    if (it == kv_.end()) return fallback;
    const char* begin = it->second.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw InvalidInput(origin_ + ": [" + section + "] " + key + ": not a number: '" +
                           it->second + "'");
    return v;
}

long long Config::integer(const std::string& section, const std::string& key,
                          long long fallback) const {
    auto it = kv_.find(section + "." + key);
    if (it == kv_.end()) return fallback;
    const char* begin = it->second.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw InvalidInput(origin_ + ": [" + section + "] " + key + ": not an integer: '" +
                           it->second + "'");
    return v;
}

std::uint64_t Config::content_hash() const { return fnv1a64(raw_.data(), raw_.size()); }

}  // namespace qcrit
