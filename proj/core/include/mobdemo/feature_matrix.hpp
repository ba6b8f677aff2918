#pragma once

#include "mobdemo/config.hpp"
#include "mobdemo/descriptors.hpp"
#include "mobdemo/types.hpp"

#include "mobdemo/matrix.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mobdemo {

/// Descriptor family of a column.
enum class Family : int { C = 0, ST = 1, D = 2, M = 3, CT = 4 };

/// Nested feature set: each includes every family up to and including its own.
enum class FeatureSet : int { C = 0, ST = 1, D = 2, M = 3, CT = 4 };
inline constexpr std::array<FeatureSet, 5> kAllFeatureSets{FeatureSet::C, FeatureSet::ST, FeatureSet::D,
                                                           FeatureSet::M, FeatureSet::CT};

std::string_view family_name(Family family) noexcept;
/// "C", "+ST", "+D", "+M", "+CT".
std::string_view feature_set_name(FeatureSet set) noexcept;
/// Accepts "C", "ST"/"+ST", ... ; throws Error("unknown_feature_set").
FeatureSet parse_feature_set(std::string_view name);

struct FeatureColumn {
    std::string name;
    Family family;
};

/// Column manifest of a feature set; smaller sets are prefixes of larger ones.
std::vector<FeatureColumn> feature_columns(FeatureSet set, const PipelineConfig &config);

/// Named values for one person. Undefined descriptors are NaN and have a
/// companion 0/1 "*_missing" indicator column in the same family.
struct FeatureVector {
    std::vector<FeatureColumn> columns;
    std::vector<double> values;

    std::optional<double> get(std::string_view name) const;
};

FeatureVector assemble_features(const PersonDescriptors &descriptors, FeatureSet set,
                                const PipelineConfig &config);

struct DesignMatrix {
    RowMatrix values;
    std::vector<std::string> row_ids; ///< person_id per row
    std::vector<FeatureColumn> columns;
};

DesignMatrix build_design_matrix(std::span<const PersonRecord> persons,
                                 std::span<const PersonDescriptors> descriptors, FeatureSet set,
                                 const PipelineConfig &config);

/// Column z-scoring with statistics from training rows only. NaNs are
/// imputed to the training mean (0 after scaling); zero-variance columns
/// map to 0.
class Standardizer {
public:
    void fit(const RowMatrix &values, std::span<const std::size_t> rows);
    void fit(const RowMatrix &values);

    /// Throws Error("standardizer_not_fitted") before fit().
    RowMatrix apply(const RowMatrix &values) const;
    RowMatrix apply(const RowMatrix &values, std::span<const std::size_t> rows) const;

    bool fitted() const noexcept { return !mean_.empty(); }
    const std::vector<double> &mean() const noexcept { return mean_; }
    const std::vector<double> &stddev() const noexcept { return stddev_; }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

/// Per-task class indices; -1 marks a missing label.
using TaskTargets = std::array<int, kNumTasks>;

TaskTargets encode_labels(const PersonRecord &person);
inline bool is_masked(const TaskTargets &targets, Task task) noexcept { return targets[task_index(task)] < 0; }

/// CSV (person_id, optional partition, columns...) plus a JSON sidecar
/// with the column manifest and standardizer statistics.
void export_design_matrix(const std::filesystem::path &csv_path, const std::filesystem::path &sidecar_path,
                          const DesignMatrix &matrix, const Standardizer &standardizer,
                          std::span<const std::string> partitions, const std::string &run_id);

} // namespace mobdemo
