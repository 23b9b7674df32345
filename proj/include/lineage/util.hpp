#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lineage::util {

// ---- UTF-8 -----------------------------------------------------------------

/// Decodes UTF-8 into Unicode scalar values. Invalid bytes decode as
/// themselves so that no input is ever rejected.
std::vector<uint32_t> utf8_codepoints(std::string_view s);

/// Number of Unicode scalar values in `s`.
std::size_t utf8_length(std::string_view s);

std::string to_lower_ascii(std::string_view s);

/// Collapses every run of whitespace to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// ---- Time ------------------------------------------------------------------

/// Seconds since the Unix epoch for a civil UTC date-time (proleptic
/// Gregorian, no leap seconds).
int64_t civil_to_epoch(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);

struct CivilDate {
    int year;
    int month;
    int day;
    int hour;
    int minute;
    int second;
};

CivilDate epoch_to_civil(int64_t epoch_seconds);

/// Parses an ISO-8601 timestamp ("2024-05-01T12:30:00Z", fractional seconds
/// and numeric offsets accepted, bare dates accepted). Returns epoch seconds
/// in UTC, or nullopt if the string does not parse.
std::optional<int64_t> parse_iso8601(std::string_view s);

/// "YYYY-MM-DDTHH:MM:SSZ" for an epoch-seconds value.
std::string format_iso8601(int64_t epoch_seconds);

// ---- Formatting ------------------------------------------------------------

/// Shortest decimal form that is stable across runs; used everywhere a real
/// number lands in an output file.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// ---- Misc ------------------------------------------------------------------

/// RFC 3986 percent-encoding; unreserved characters pass through.
std::string percent_encode(std::string_view s);

std::optional<std::string> percent_decode(std::string_view s);

/// FNV-1a over a byte sequence; used for content-addressed cache keys.
uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 14695981039346656037ULL);

bool starts_with(std::string_view s, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);

} // namespace lineage::util
