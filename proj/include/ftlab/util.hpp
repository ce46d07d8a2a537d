#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ftlab/error.hpp"

namespace ftlab {

/// Calendar date at day granularity, stored as days since 1970-01-01.
struct Date {
    int64_t days = 0;

    static Date from_iso(std::string_view iso);  // "YYYY-MM-DD"
    static std::optional<Date> try_from_iso(std::string_view iso);
    std::string to_iso() const;

    auto operator<=>(const Date&) const = default;
    Date operator+(int n) const { return Date{days + n}; }
    int64_t operator-(const Date& other) const { return days - other.days; }
};

/// RFC-4180-ish CSV: quoted fields, embedded commas/quotes/newlines.
/// Rows are returned verbatim; interpretation is the caller's job.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::vector<std::vector<std::string>> read_csv_file(const std::string& path);
std::string csv_escape(std::string_view field);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// FNV-1a over bytes; the deterministic hash behind fraction splits.
uint64_t fnv1a64(std::string_view bytes);

std::string lowercase_ascii(std::string_view s);
std::string trim(std::string_view s);

}  // namespace ftlab
