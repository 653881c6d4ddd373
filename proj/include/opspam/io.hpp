#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opspam {

// Data/validation failure: bad file, bad value, broken invariant. The CLI
// maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

std::string slurp_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

bool valid_utf8(std::string_view bytes);

// Number of Unicode code points; throws Error on invalid UTF-8.
std::size_t utf8_length(std::string_view bytes, std::string_view what);

// RFC-4180-style CSV: header row, comma separators, optional double-quoted
// fields with "" escapes, LF or CRLF line ends.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // each padded/checked to header size

    int column(std::string_view name) const;  // -1 when absent
};

CsvTable parse_csv(std::string_view text, std::string_view source_name);
std::string csv_escape(std::string_view field);

// FNV-1a, used for corpus/config/space fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string format_double(double v, int decimals);

}  // namespace opspam
