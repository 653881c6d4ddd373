#include "opspam/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace opspam {

std::string slurp_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error("read failure: " + path.string());
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failure: " + path.string());
}

namespace {

// Returns the code point count, or SIZE_MAX on malformed input.
std::size_t count_code_points(std::string_view s) {
    std::size_t count = 0;
    std::size_t i = 0;
    const auto bad = static_cast<std::size_t>(-1);
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        std::uint32_t cp;
        if (c < 0x80) {
            extra = 0;
            cp = c;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return bad;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            if (i + k >= s.size()) return bad;
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return bad;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // overlong encodings and surrogates are malformed
        if (extra == 1 && cp < 0x80) return bad;
        if (extra == 2 && cp < 0x800) return bad;
        if (extra == 3 && cp < 0x10000) return bad;
        if (cp >= 0xd800 && cp <= 0xdfff) return bad;
        if (cp > 0x10ffff) return bad;
        i += extra + 1;
        ++count;
    }
    return count;
}

}  // namespace

bool valid_utf8(std::string_view bytes) {
    return count_code_points(bytes) != static_cast<std::size_t>(-1);
}

std::size_t utf8_length(std::string_view bytes, std::string_view what) {
    std::size_t n = count_code_points(bytes);
    if (n == static_cast<std::size_t>(-1))
        throw Error("undecodable UTF-8 in " + std::string(what));
    return n;
}

int CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable parse_csv(std::string_view text, std::string_view source_name) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // skip blank lines (a single empty field)
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; the \n ends the record
        } else if (c == '\n') {
            end_record();
            ++line;
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (in_quotes)
        throw Error(std::string(source_name) + ":" + std::to_string(line) +
                    ": unterminated quoted field");
    if (field_started || !record.empty()) end_record();

    if (records.empty())
        throw Error(std::string(source_name) + ": empty CSV (no header row)");

    CsvTable t;
    t.header = std::move(records[0]);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            throw Error(std::string(source_name) + ": row " + std::to_string(r + 1) + " has " +
                        std::to_string(records[r].size()) + " fields, expected " +
                        std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

std::string csv_escape(std::string_view field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace opspam
