#pragma once

#include <array>
#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mobdemo {

/// The four prediction targets, in head order.
enum class Task : int { Age = 0, Gender = 1, Income = 2, Children = 3 };

inline constexpr std::size_t kNumTasks = 4;
inline constexpr std::array<Task, kNumTasks> kAllTasks{Task::Age, Task::Gender, Task::Income,
                                                       Task::Children};
/// Class counts per task: age 6 bins, gender 3, income 5 bins, children 4 bins.
inline constexpr std::array<int, kNumTasks> kTaskClasses{6, 3, 5, 4};

constexpr int num_classes(Task task) noexcept { return kTaskClasses[static_cast<std::size_t>(task)]; }
constexpr std::size_t task_index(Task task) noexcept { return static_cast<std::size_t>(task); }

std::string_view task_name(Task task) noexcept;
std::optional<Task> parse_task(std::string_view name);
/// Human label of a class bin, e.g. (Age, 2) -> "18-34".
std::string_view class_label(Task task, int cls);

/// Binned ground truth; a disengaged optional marks a missing label.
struct Labels {
    std::array<std::optional<int>, kNumTasks> classes{};

    std::optional<int> &operator[](Task t) noexcept { return classes[task_index(t)]; }
    const std::optional<int> &operator[](Task t) const noexcept { return classes[task_index(t)]; }

    bool operator==(const Labels &) const = default;
};

using Day = std::chrono::sys_days;

/// Weekday index with Monday = 0 ... Sunday = 6.
int weekday_index(Day day) noexcept;
std::optional<Day> parse_date(std::string_view text);
std::string format_date(Day day);

/// One cleaned trip-diary row. Purposes index the configured purpose
/// vocabulary; modes are a bitmask over the mode vocabulary.
struct Trip {
    std::string person_id;
    std::string household_id;
    int wave = 0;
    Day day{};
    std::size_t origin = 0;
    std::size_t dest = 0;
    std::uint64_t modes = 0;
    int depart_min = 0;
    int arrive_min = 0;
    double duration_min = 0.0;
    double distance_km = 0.0;
    int n_hh_companions = 0;
    int n_nonhh_companions = 0;

    int weekday() const noexcept { return weekday_index(day); }
    bool on_weekend() const noexcept { return weekday() >= 5; }
    int mode_count() const noexcept { return std::popcount(modes); }
    bool uses_mode(std::size_t mode) const noexcept { return (modes >> mode) & 1U; }

    bool operator==(const Trip &) const = default;
};

struct PersonRecord {
    std::string person_id;
    std::string household_id;
    int wave = 0;
    /// Persons listed under the same (wave, household) in the persons table.
    int household_size = 1;
    /// Sorted by (day, depart_min).
    std::vector<Trip> trips;
    Labels labels;
};

} // namespace mobdemo
