#include "mobdemo/types.hpp"

#include "mobdemo/config.hpp"

#include <charconv>
#include <cstdio>

namespace mobdemo {

namespace {

constexpr std::array<std::string_view, kNumTasks> kTaskNames{"age", "gender", "income", "children"};

constexpr std::array<std::string_view, 6> kAgeLabels{"0-11", "12-17", "18-34", "35-54", "55-74", "75+"};
constexpr std::array<std::string_view, 3> kGenderLabels{"male", "female", "non-binary"};
constexpr std::array<std::string_view, 5> kIncomeLabels{"<25k", "25-50k", "50-75k", "75-100k", "100k+"};
constexpr std::array<std::string_view, 4> kChildrenLabels{"0", "1", "2", "3+"};

} // namespace

std::string_view task_name(Task task) noexcept { return kTaskNames[task_index(task)]; }

std::optional<Task> parse_task(std::string_view name) {
    auto key = to_lower_trimmed(name);
    for (auto task : kAllTasks) {
        if (task_name(task) == key) {
            return task;
        }
    }
    return std::nullopt;
}

std::string_view class_label(Task task, int cls) {
    switch (task) {
    case Task::Age:
        return kAgeLabels.at(static_cast<std::size_t>(cls));
    case Task::Gender:
        return kGenderLabels.at(static_cast<std::size_t>(cls));
    case Task::Income:
        return kIncomeLabels.at(static_cast<std::size_t>(cls));
    case Task::Children:
        return kChildrenLabels.at(static_cast<std::size_t>(cls));
    }
    return {};
}

int weekday_index(Day day) noexcept {
    // iso_encoding: Monday = 1 ... Sunday = 7
    return static_cast<int>(std::chrono::weekday{day}.iso_encoding()) - 1;
}

std::optional<Day> parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    auto ok = [](auto result, const char *expected_end) {
        return result.ec == std::errc{} && result.ptr == expected_end;
    };
    const char *p = text.data();
    if (!ok(std::from_chars(p, p + 4, y), p + 4) || !ok(std::from_chars(p + 5, p + 7, m), p + 7) ||
        !ok(std::from_chars(p + 8, p + 10, d), p + 10)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Day{ymd};
}

std::string format_date(Day day) {
    std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace mobdemo
