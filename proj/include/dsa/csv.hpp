#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dsa/error.hpp"

namespace dsa {

/// Shortest decimal representation that round-trips the exact double.
/// '.' decimal separator, never locale-dependent.
inline std::string format_double(double value) {
    if (!std::isfinite(value))
        raise(ErrorKind::domain, "refusing to format a non-finite value");
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) raise(ErrorKind::io, "number formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t value) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    return text;
}

inline double parse_double(std::string_view text, const std::string& what) {
    double value{};
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        raise(ErrorKind::parse, "expected a number for " + what + ", got '" +
                                    std::string(text) + "'");
    return value;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& what) {
    std::uint64_t value{};
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        raise(ErrorKind::parse, "expected an unsigned integer for " + what + ", got '" +
                                    std::string(text) + "'");
    return value;
}

/// Comma-separated values; '#'-prefixed metadata comments, then one
/// header row, then data rows. Degenerate cells carry a
/// "DEGENERATE:<kind>" token instead of a number.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& key, const std::string& value) {
        out_ << "# " << key << " = " << value << "\n";
    }

    void header(const std::vector<std::string>& columns) { row_of_strings(columns); }

    void row_of_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

inline std::string degenerate_token(ErrorKind kind) {
    return std::string("DEGENERATE:") + error_kind_name(kind);
}

} // namespace dsa
