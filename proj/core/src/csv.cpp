#include "mobdemo/csv.hpp"

#include <boost/tokenizer.hpp>

#include <charconv>
#include <cmath>
#include <istream>

namespace mobdemo {

std::vector<std::string> split_csv_record(const std::string &line) {
    using Separator = boost::escaped_list_separator<char>;
    // Backslash is not an escape character in CSV; use an unlikely byte.
    boost::tokenizer<Separator> tokens{line, Separator{'\x01', ',', '"'}};
    return {tokens.begin(), tokens.end()};
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string{value};
    }
    std::string out{"\""};
    for (char c : value) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

CsvReader::CsvReader(std::istream &in) : in_{in} {
    std::vector<std::string> fields;
    if (next(fields)) {
        header_ = std::move(fields);
        for (auto &name : header_) {
            auto begin = name.find_first_not_of(" \t\xEF\xBB\xBF");
            auto end = name.find_last_not_of(" \t\r");
            name = begin == std::string::npos ? std::string{} : name.substr(begin, end - begin + 1);
        }
    }
}

std::optional<std::size_t> CsvReader::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) {
            return i;
        }
    }
    return std::nullopt;
}

bool CsvReader::next(std::vector<std::string> &fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        fields = split_csv_record(line);
        return true;
    }
    return false;
}

} // namespace mobdemo
