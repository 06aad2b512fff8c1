// csv.hpp
//
// Minimal CSV reading/writing helpers.  All file formats used by the
// toolkit are plain comma-separated text without quoting, so this stays a
// simple splitter that tracks line numbers for error messages.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cesplan/errors.hpp"

namespace cesplan::csv {

// Reads one file line by line; skips blank lines and '#' comments.
// Comment lines of the shape "# key = value" are collected as directives
// (used by the feeder file for base quantities).
class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw ParseError("cannot open file: " + path);
    }

    // Fetch the next data row split on ','.  Returns false at EOF.
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string_view sv = trim(line);
            if (sv.empty()) continue;
            if (sv.front() == '#') {
                record_directive(sv);
                continue;
            }
            fields.clear();
            std::size_t start = 0;
            const std::string s(sv);
            while (true) {
                std::size_t pos = s.find(',', start);
                if (pos == std::string::npos) {
                    fields.push_back(std::string(trim(s.substr(start))));
                    break;
                }
                fields.push_back(std::string(trim(s.substr(start, pos - start))));
                start = pos + 1;
            }
            return true;
        }
        return false;
    }

    int line() const { return line_no_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " + what);
    }

    double to_double(const std::string& f, const char* what) const {
        double v = 0.0;
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || p != f.data() + f.size())
            fail(std::string("bad numeric value for ") + what + ": '" + f + "'");
        return v;
    }

    long to_int(const std::string& f, const char* what) const {
        long v = 0;
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || p != f.data() + f.size())
            fail(std::string("bad integer value for ") + what + ": '" + f + "'");
        return v;
    }

    const std::vector<std::pair<std::string, std::string>>& directives() const { return directives_; }

    static std::string_view trim(std::string_view sv) {
        while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
        while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
        return sv;
    }

private:
    void record_directive(std::string_view sv) {
        sv.remove_prefix(1);  // '#'
        std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos) return;  // ordinary comment
        std::string key(trim(sv.substr(0, eq)));
        std::string val(trim(sv.substr(eq + 1)));
        if (!key.empty()) directives_.emplace_back(key, val);
    }

    std::string path_;
    std::ifstream in_;
    int line_no_ = 0;
    std::vector<std::pair<std::string, std::string>> directives_;
};

// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

// Open an output file or throw.
inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    return out;
}

// FNV-1a over raw bytes; used for determinism checks and file digests.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::vector<double>& v, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

}  // namespace cesplan::csv
