#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobdemo {

/// Splits one CSV record (RFC-4180 quoting, comma separator).
std::vector<std::string> split_csv_record(const std::string &line);

/// Quotes a field if it contains a separator, quote or newline.
std::string csv_field(std::string_view value);

/// Formats doubles with round-trip precision; NaN prints as "nan".
std::string format_double(double value);

/// Streaming reader: header first, then records with their 1-based
/// physical line numbers. Blank lines and lines starting with '#' are skipped.
class CsvReader {
public:
    explicit CsvReader(std::istream &in);

    const std::vector<std::string> &header() const noexcept { return header_; }
    /// Column position by exact header name.
    std::optional<std::size_t> column(std::string_view name) const;

    bool next(std::vector<std::string> &fields);
    std::size_t line_number() const noexcept { return line_; }

private:
    std::istream &in_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

} // namespace mobdemo
