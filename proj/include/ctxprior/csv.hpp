#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ctxprior {

// Minimal CSV layer for the toolkit's data files: comma-separated, no quoting,
// first row is the header. Empty cells map to absent optional values.
struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;           // -1 when absent
    int require_column(const std::string& name) const;   // MissingColumn otherwise
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Strict numeric parsing (std::from_chars); context goes into the error message.
double parse_double(const std::string& cell, const std::string& context);
std::optional<double> parse_optional_double(const std::string& cell, const std::string& context);

// Round-trip-exact formatting for doubles written to data CSVs.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ctxprior
