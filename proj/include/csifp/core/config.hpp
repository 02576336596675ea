#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csifp/core/error.hpp"

namespace csifp {

/// Plain-text configuration: `[section]` headers followed by `key = value`
/// lines. `#` starts a comment. A key may repeat (e.g. `building`); all
/// occurrences are kept in file order.
class ConfigFile {
public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
    };

    static ConfigFile parse(const std::string& text, const std::string& origin = "<string>") {
        ConfigFile cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3) {
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
                }
                section = trim(line.substr(1, line.size() - 2));
                cfg.touch_section(section);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside of any section");
            }
            auto key = trim(line.substr(0, eq));
            auto value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            }
            cfg.sections_[section].push_back({std::move(key), std::move(value), lineno});
        }
        return cfg;
    }

    static ConfigFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open config file '" + path + "'");
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    bool has_section(const std::string& section) const { return sections_.count(section) != 0; }

    std::vector<std::string> section_names() const {
        std::vector<std::string> out;
        for (const auto& [name, entries] : sections_) {
            out.push_back(name);
        }
        return out;
    }

    /// File path or label the text was parsed from.
    const std::string& origin() const noexcept { return origin_; }

    bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

    /// Last occurrence wins for scalar lookups.
    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        if (const auto* e = find(section, key)) {
            return e->value;
        }
        return std::nullopt;
    }

    std::vector<std::string> get_all(const std::string& section, const std::string& key) const {
        std::vector<std::string> out;
        if (auto it = sections_.find(section); it != sections_.end()) {
            for (const auto& e : it->second) {
                if (e.key == key) {
                    out.push_back(e.value);
                }
            }
        }
        return out;
    }

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
        return get(section, key).value_or(fallback);
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        const auto v = get(section, key);
        return v ? to_double(*v, section + "." + key) : fallback;
    }

    template <typename Int = std::int64_t>
    Int get_int(const std::string& section, const std::string& key, Int fallback) const {
        const auto v = get(section, key);
        return v ? to_int<Int>(*v, section + "." + key) : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const auto v = get(section, key);
        if (!v) {
            return fallback;
        }
        if (*v == "true" || *v == "1" || *v == "yes") {
            return true;
        }
        if (*v == "false" || *v == "0" || *v == "no") {
            return false;
        }
        throw ConfigError(section + "." + key + ": expected boolean, got '" + *v + "'");
    }

    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
        const auto v = get(section, key);
        return v ? split_doubles(*v, section + "." + key) : fallback;
    }

    /// Replaces every occurrence of a key (override semantics).
    void set(const std::string& section, const std::string& key, const std::string& value) {
        auto& entries = sections_[section];
        auto first = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.key == key; });
        if (first == entries.end()) {
            entries.push_back({key, value, 0});
            return;
        }
        first->value = value;
        entries.erase(std::remove_if(std::next(first), entries.end(), [&](const Entry& e) { return e.key == key; }),
                      entries.end());
    }

    void add(const std::string& section, const std::string& key, const std::string& value) {
        sections_[section].push_back({key, value, 0});
    }

    /// Applies `section.key=value`.
    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
        }
        set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)));
    }

    /// Canonical text of the given sections for hashing: sections in the
    /// requested order, keys sorted (repeated keys keep their relative order),
    /// whitespace runs inside values collapsed to one space.
    std::string canonical(const std::vector<std::string>& section_names) const {
        std::string out;
        for (const auto& name : section_names) {
            out += "[" + name + "]\n";
            auto it = sections_.find(name);
            if (it == sections_.end()) {
                continue;
            }
            auto entries = it->second;
            std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
            for (const auto& e : entries) {
                std::istringstream words(e.value);
                std::string word, value;
                while (words >> word) {
                    value += (value.empty() ? "" : " ") + word;
                }
                out += e.key + " = " + value + "\n";
            }
        }
        return out;
    }

    const std::vector<Entry>& entries(const std::string& section) const {
        static const std::vector<Entry> kEmpty;
        auto it = sections_.find(section);
        return it == sections_.end() ? kEmpty : it->second;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) {
            return {};
        }
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& text, const std::string& what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) {
                throw ConfigError(what + ": trailing characters in number '" + text + "'");
            }
            return v;
        } catch (const std::logic_error&) {
            throw ConfigError(what + ": expected number, got '" + text + "'");
        }
    }

    template <typename Int>
    static Int to_int(const std::string& text, const std::string& what) {
        Int v{};
        const auto* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc{} || ptr != end) {
            throw ConfigError(what + ": expected integer, got '" + text + "'");
        }
        return v;
    }

    static std::vector<double> split_doubles(const std::string& text, const std::string& what) {
        std::istringstream in(text);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) {
            out.push_back(to_double(tok, what));
        }
        return out;
    }

private:
    void touch_section(const std::string& s) { sections_[s]; }

    const Entry* find(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end()) {
            return nullptr;
        }
        const Entry* hit = nullptr;
        for (const auto& e : it->second) {
            if (e.key == key) {
                hit = &e;
            }
        }
        return hit;
    }

    std::map<std::string, std::vector<Entry>> sections_;
    std::string origin_ = "<string>";
};

} // namespace csifp
