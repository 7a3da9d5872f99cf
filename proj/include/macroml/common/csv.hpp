#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace macroml::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name, or -1.
    int column(std::string_view name) const;
};

/// Comma-separated, optional double-quoted fields, LF or CRLF line ends.
/// Rows whose field count differs from the header raise DataError.
Table read(std::istream& in);
Table read_file(const std::string& path);

std::string escape(std::string_view field);

/// Shortest round-trip representation of a double ("NA" for NaN).
std::string format_double(double v);

}  // namespace macroml::csv
