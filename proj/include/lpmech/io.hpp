#pragma once

#include <string>
#include <vector>

namespace lpmech {

/// Round-trip decimal text: 17 significant digits, '.' separator.
std::string format_double(double x);

/// Comma-joined row terminated by LF.
std::string csv_row(const std::vector<double>& values);

/// Writes via a sibling temporary file and rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace lpmech
