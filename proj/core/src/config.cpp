#include "mobdemo/config.hpp"

#include "mobdemo/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace mobdemo {

std::string to_lower_trimmed(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = text.find_last_not_of(" \t\r\n");
    std::string out{text.substr(begin, end - begin + 1)};
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_list(std::string_view text, char separator) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(separator, start);
        if (pos == std::string_view::npos) {
            pos = text.size();
        }
        auto item = to_lower_trimmed(text.substr(start, pos - start));
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        start = pos + 1;
    }
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> codes,
                       const std::map<std::string, std::string> &aliases) {
    for (auto &code : codes) {
        auto key = to_lower_trimmed(code);
        if (key.empty()) {
            throw Error("bad_config", "empty vocabulary code");
        }
        if (index_.contains(key)) {
            throw Error("bad_config", "duplicate vocabulary code '" + key + "'");
        }
        index_.emplace(key, codes_.size());
        codes_.push_back(std::move(key));
    }
    for (const auto &[raw, target] : aliases) {
        auto key = to_lower_trimmed(raw);
        auto canonical = to_lower_trimmed(target);
        auto it = index_.find(canonical);
        if (it == index_.end()) {
            throw Error("bad_config", "alias '" + key + "' targets unknown code '" + canonical + "'");
        }
        auto existing = index_.find(key);
        if (existing != index_.end() && existing->second != it->second) {
            throw Error("bad_config", "alias '" + key + "' collides with another code");
        }
        index_.emplace(key, it->second);
    }
}

std::optional<std::size_t> Vocabulary::lookup(std::string_view raw) const {
    auto it = index_.find(to_lower_trimmed(raw));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t Vocabulary::index_of(std::string_view code) const {
    auto found = lookup(code);
    if (!found) {
        throw Error("bad_config", "unknown code '" + std::string{code} + "'");
    }
    return *found;
}

bool PipelineConfig::is_anchor(std::size_t purpose) const noexcept {
    return std::find(anchors.begin(), anchors.end(), purpose) != anchors.end();
}

namespace {

// Function-local so that other translation units can build defaults
// during their own static initialization.
const std::vector<std::string> &default_purposes() {
    static const std::vector<std::string> v{"home",    "work",   "school", "shopping", "errand",
                                            "leisure", "escort", "gym",    "other"};
    return v;
}
const std::map<std::string, std::string> &default_purpose_aliases() {
    static const std::map<std::string, std::string> v{
    {"store", "shopping"},      {"shop", "shopping"},   {"grocery", "shopping"},
    {"appointment", "errand"},  {"personal business", "errand"},
    {"pick up/drop off", "escort"}, {"dropoff", "escort"}, {"pickup", "escort"},
    {"exercise", "gym"},        {"social", "leisure"},  {"recreation", "leisure"},
    {"meal", "leisure"},        {"college", "school"},  {"office", "work"}};
    return v;
}
const std::vector<std::string> &default_modes() {
    static const std::vector<std::string> v{"drive", "passenger", "transit", "walk", "bike", "school-bus", "other"};
    return v;
}
const std::map<std::string, std::string> &default_mode_aliases() {
    static const std::map<std::string, std::string> v{
    {"car", "drive"},       {"auto", "drive"},       {"carpool", "passenger"},
    {"bus", "transit"},     {"rail", "transit"},     {"train", "transit"},
    {"ferry", "transit"},   {"bicycle", "bike"},     {"schoolbus", "school-bus"},
    {"school bus", "school-bus"}};
    return v;
}

TimeWindow parse_window(std::string_view text) {
    auto dash = text.find('-');
    if (dash == std::string_view::npos) {
        throw Error("bad_config", "peak window needs HH:MM-HH:MM, got '" + std::string{text} + "'");
    }
    auto begin = parse_clock(to_lower_trimmed(text.substr(0, dash)));
    auto end = parse_clock(to_lower_trimmed(text.substr(dash + 1)));
    if (!begin || !end || *end <= *begin) {
        throw Error("bad_config", "bad peak window '" + std::string{text} + "'");
    }
    return {*begin, *end};
}

std::map<std::string, std::string> read_aliases(const boost::property_tree::ptree &tree,
                                                const std::string &section,
                                                const std::map<std::string, std::string> &fallback) {
    auto child = tree.get_child_optional(section);
    if (!child) {
        return fallback;
    }
    std::map<std::string, std::string> out;
    for (const auto &[key, value] : *child) {
        out.emplace(key, value.data());
    }
    return out;
}

} // namespace

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig cfg;
    cfg.purposes = Vocabulary{default_purposes(), default_purpose_aliases()};
    cfg.modes = Vocabulary{default_modes(), default_mode_aliases()};
    cfg.anchors = {cfg.purposes.index_of("home"), cfg.purposes.index_of("work")};
    cfg.peak_windows = {{7 * 60, 9 * 60}, {16 * 60, 18 * 60}};
    return cfg;
}

PipelineConfig parse_config(std::istream &in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw Error("bad_config", e.what());
    }

    PipelineConfig cfg;
    auto purpose_codes = tree.get_optional<std::string>("purposes.codes");
    auto purpose_aliases = read_aliases(tree, "purpose_aliases",
                                        purpose_codes ? std::map<std::string, std::string>{}
                                                      : default_purpose_aliases());
    cfg.purposes = Vocabulary{purpose_codes ? split_list(*purpose_codes, ',') : default_purposes(),
                              purpose_aliases};

    auto mode_codes = tree.get_optional<std::string>("modes.codes");
    auto mode_aliases = read_aliases(tree, "mode_aliases",
                                     mode_codes ? std::map<std::string, std::string>{}
                                                : default_mode_aliases());
    cfg.modes = Vocabulary{mode_codes ? split_list(*mode_codes, ',') : default_modes(), mode_aliases};
    if (cfg.modes.size() > 64) {
        throw Error("bad_config", "at most 64 mode codes are supported");
    }

    auto anchors = split_list(tree.get<std::string>("purposes.anchors", "home,work"), ',');
    if (anchors.empty()) {
        throw Error("bad_config", "at least one anchor purpose is required");
    }
    for (const auto &anchor : anchors) {
        cfg.anchors.push_back(cfg.purposes.index_of(anchor));
    }

    auto windows = tree.get_optional<std::string>("peak.windows");
    if (windows) {
        for (const auto &item : split_list(*windows, ',')) {
            cfg.peak_windows.push_back(parse_window(item));
        }
    } else {
        cfg.peak_windows = PipelineConfig::defaults().peak_windows;
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw DataError("missing_file", "cannot open config " + path.string());
    }
    return parse_config(in);
}

std::optional<int> parse_clock(std::string_view text) {
    std::string digits;
    for (char c : text) {
        if (c == ':') {
            continue;
        }
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        digits.push_back(c);
    }
    if (digits.size() < 3 || digits.size() > 4) {
        return std::nullopt;
    }
    int value = 0;
    std::from_chars(digits.data(), digits.data() + digits.size(), value);
    int hours = value / 100;
    int minutes = value % 100;
    // 24:00 is accepted as an end-of-day marker.
    if (hours > 24 || minutes > 59 || (hours == 24 && minutes != 0)) {
        return std::nullopt;
    }
    return hours * 60 + minutes;
}

std::string format_clock(int minute) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
    return buf;
}

} // namespace mobdemo
