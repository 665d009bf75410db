#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rbridge/core/error.hpp"
#include "rbridge/core/rng.hpp"
#include "rbridge/io/hash.hpp"

namespace rbridge::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && ws(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

/// Shortest decimal that reads back to the same double.
inline std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

} // namespace detail

/**
 * Flat key=value configuration with dotted keys:
 *
 *     # comment
 *     bridge.T = 0.1
 *     target.points = 0,0; 1,1
 *
 * Every typed lookup records the value it resolved to (the default when the
 * key is absent), so `resolved_text()` lists the complete effective
 * configuration of a run.
 */
class KeyValueConfig {
  public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>") {
        KeyValueConfig cfg;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) {
                end = text.size();
            }
            std::string_view line = text.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            line = detail::trim(line);
            if (line.empty()) {
                if (end == text.size()) {
                    break;
                }
                continue;
            }
            const auto eq = line.find('=');
            const std::string where = source + ":" + std::to_string(line_no);
            if (eq == std::string_view::npos) {
                throw ConfigError(where + ": expected key = value");
            }
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (key.empty()) {
                throw ConfigError(where + ": empty key");
            }
            if (!cfg.values_.emplace(key, value).second) {
                throw ConfigError(where + ": duplicate key '" + key + "'");
            }
            if (end == text.size()) {
                break;
            }
        }
        return cfg;
    }

    static KeyValueConfig load(const std::string& path) { return parse(read_file(path), path); }

    /// Sets or replaces a value (command-line overrides).
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        const auto it = values_.find(key);
        const std::string v = it == values_.end() ? fallback : it->second;
        resolved_[key] = v;
        return v;
    }

    /// Required string; throws when absent.
    std::string require_string(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            throw ConfigError("missing required key '" + key + "'");
        }
        resolved_[key] = it->second;
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        const auto it = values_.find(key);
        const double v = it == values_.end() ? fallback : parse_double(key, it->second);
        resolved_[key] = detail::shortest(v);
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        const auto it = values_.find(key);
        std::uint64_t v = fallback;
        if (it != values_.end()) {
            const std::string& s = it->second;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + s + "'");
            }
        }
        resolved_[key] = std::to_string(v);
        return v;
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) {
        return static_cast<std::size_t>(get_u64(key, fallback));
    }

    /// Comma-separated list of doubles.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) {
        const auto it = values_.find(key);
        std::vector<double> v = it == values_.end() ? fallback : parse_list(key, it->second);
        resolved_[key] = format_list(v);
        return v;
    }

    /// Semicolon-separated points of comma-separated coordinates.
    std::vector<Vector> get_points(const std::string& key, const std::vector<Vector>& fallback) {
        const auto it = values_.find(key);
        std::vector<Vector> pts;
        if (it == values_.end()) {
            pts = fallback;
        } else {
            std::string_view rest = it->second;
            while (true) {
                const auto semi = rest.find(';');
                const auto chunk = detail::trim(rest.substr(0, semi));
                if (!chunk.empty()) {
                    const auto coords = parse_list(key, std::string(chunk));
                    pts.push_back(Eigen::Map<const Vector>(coords.data(), static_cast<Eigen::Index>(coords.size())));
                }
                if (semi == std::string_view::npos) {
                    break;
                }
                rest = rest.substr(semi + 1);
            }
            if (pts.empty()) {
                throw ConfigError("key '" + key + "': no points given");
            }
        }
        std::string text;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) {
                text += "; ";
            }
            text += format_list(std::vector<double>(pts[i].data(), pts[i].data() + pts[i].size()));
        }
        resolved_[key] = text;
        return pts;
    }

    /// Throws ConfigError naming every key not in `known`.
    void check_known(const std::set<std::string>& known) const {
        std::string unknown;
        for (const auto& [k, v] : values_) {
            if (known.count(k) == 0) {
                unknown += (unknown.empty() ? "" : ", ") + k;
            }
        }
        if (!unknown.empty()) {
            throw ConfigError("unknown configuration key(s): " + unknown);
        }
    }

    /// Every resolved key as sorted key = value lines; parses back to the same run.
    [[nodiscard]] std::string resolved_text() const {
        std::string out;
        for (const auto& [k, v] : resolved_) {
            out += k + " = " + v + "\n";
        }
        return out;
    }

    [[nodiscard]] const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

  private:
    static double parse_double(const std::string& key, const std::string& s) {
        double v = 0.0;
        const auto t = detail::trim(s);
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size()) {
            throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
        }
        return v;
    }

    static std::vector<double> parse_list(const std::string& key, const std::string& s) {
        std::vector<double> out;
        std::string_view rest = s;
        while (true) {
            const auto comma = rest.find(',');
            out.push_back(parse_double(key, std::string(detail::trim(rest.substr(0, comma)))));
            if (comma == std::string_view::npos) {
                break;
            }
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    static std::string format_list(const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out += (i ? "," : "") + detail::shortest(v[i]);
        }
        return out;
    }

    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> resolved_;
};

} // namespace rbridge::io
