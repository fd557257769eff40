#pragma once

// CSV (RFC 4180) and JSON persistence of scenario tables.

#include <string>

#include "cavens/scenarios.hpp"

namespace cavens::io {

/// Shortest decimal representation that round-trips to the same double;
/// non-finite values are written as nan / inf / -inf.
std::string format_number(double v);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

/// Header row plus one line per row, CRLF line endings as in RFC 4180.
std::string to_csv(const scenarios::Table& table);

/// Parses text produced by to_csv (numeric columns followed by `status`).
scenarios::Table parse_csv(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Hex SHA-1 digest.
std::string sha1_hex(const std::string& data);

}  // namespace cavens::io
