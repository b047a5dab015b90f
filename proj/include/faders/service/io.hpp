// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace faders {

// Writes to a sibling temp file, then renames over `path`. IoError on failure.
void write_file_atomic(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

// RFC 4180: fields containing a comma, quote, CR or LF are quoted with
// embedded quotes doubled. Rows end in CRLF.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

// Shortest round-tripping decimal form.
std::string format_double(double v);

}  // namespace faders
