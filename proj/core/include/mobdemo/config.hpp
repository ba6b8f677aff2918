#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobdemo {

/// Ordered list of canonical codes plus raw-string aliases. Lookups are
/// case-insensitive and ignore surrounding whitespace.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> codes,
                        const std::map<std::string, std::string> &aliases = {});

    std::size_t size() const noexcept { return codes_.size(); }
    const std::string &code(std::size_t index) const { return codes_.at(index); }
    const std::vector<std::string> &codes() const noexcept { return codes_; }

    /// Canonical index for a raw survey string, or nullopt if unknown.
    std::optional<std::size_t> lookup(std::string_view raw) const;

    /// Same as lookup() but throws Error("bad_config") when absent.
    std::size_t index_of(std::string_view code) const;

private:
    std::vector<std::string> codes_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Half-open minute-of-day window [begin, end).
struct TimeWindow {
    int begin_min = 0;
    int end_min = 0;

    bool contains(int minute) const noexcept { return minute >= begin_min && minute < end_min; }
};

struct PipelineConfig {
    Vocabulary purposes;
    Vocabulary modes;
    /// Purpose indices that open and close tours, in declaration order.
    std::vector<std::size_t> anchors;
    std::vector<TimeWindow> peak_windows;

    bool is_anchor(std::size_t purpose) const noexcept;

    /// 9 purposes, 7 modes, anchors {home, work}, peaks 07-09 and 16-18.
    static PipelineConfig defaults();
};

/// INI-style key/value config. Sections: [purposes] codes/anchors,
/// [purpose_aliases], [modes] codes, [mode_aliases], [peak] windows.
/// Missing sections fall back to defaults().
PipelineConfig parse_config(std::istream &in);
PipelineConfig load_config(const std::filesystem::path &path);

/// Parses "HH:MM" or "HHMM" into minutes since midnight.
std::optional<int> parse_clock(std::string_view text);
std::string format_clock(int minute);

std::string to_lower_trimmed(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char separator);

} // namespace mobdemo
