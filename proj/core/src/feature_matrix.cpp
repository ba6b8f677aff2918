#include "mobdemo/feature_matrix.hpp"

#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>

namespace mobdemo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double value_or_nan(const OptionalValue &v) { return v.missing ? kNaN : v.value; }

struct Builder {
    FeatureVector out;
    void add(std::string name, Family family, double value) {
        out.columns.push_back({std::move(name), family});
        out.values.push_back(value);
    }
};

/// Appends the columns of one family; the single source of truth for both
/// the manifest and the values.
void append_family(Builder &b, Family family, const PersonDescriptors *d, const PipelineConfig &config) {
    auto val = [d](auto getter) { return d ? getter(*d) : 0.0; };
    switch (family) {
    case Family::C:
        for (std::size_t p = 0; p < config.purposes.size(); ++p) {
            b.add("purpose_share_" + config.purposes.code(p), family,
                  val([p](const PersonDescriptors &x) { return x.purpose_shares[p]; }));
        }
        for (std::size_t m = 0; m < config.modes.size(); ++m) {
            b.add("mode_share_" + config.modes.code(m), family,
                  val([m](const PersonDescriptors &x) { return x.mode_shares[m]; }));
        }
        b.add("n_tour", family, val([](const PersonDescriptors &x) { return x.n_tour; }));
        for (std::size_t a = 0; a < config.anchors.size(); ++a) {
            b.add("tour_share_" + config.purposes.code(config.anchors[a]), family,
                  val([a](const PersonDescriptors &x) { return value_or_nan(x.anchor_tour_shares[a]); }));
        }
        b.add("tour_share_missing", family, val([](const PersonDescriptors &x) {
                  return x.n_tour == 0.0 ? 1.0 : 0.0;
              }));
        break;
    case Family::ST:
        b.add("depart_first", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.depart_first; }));
        b.add("depart_mean", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.depart_mean; }));
        b.add("depart_last", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.depart_last; }));
        b.add("duration_mean", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.duration_mean; }));
        b.add("duration_max", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.duration_max; }));
        b.add("f_rush", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.f_rush; }));
        b.add("f_weekend", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.f_weekend; }));
        b.add("speed_mean", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.speed_mean; }));
        b.add("speed_max", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.speed_max; }));
        b.add("distance_mean", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.distance_mean; }));
        b.add("distance_max", family, val([](const PersonDescriptors &x) { return x.spatiotemporal.distance_max; }));
        break;
    case Family::D:
        b.add("trip_entropy", family, val([](const PersonDescriptors &x) { return x.trip_entropy; }));
        b.add("trip_gini", family, val([](const PersonDescriptors &x) { return x.trip_gini; }));
        b.add("global_clustering", family, val([](const PersonDescriptors &x) { return x.global_clustering; }));
        b.add("mean_local_clustering", family,
              val([](const PersonDescriptors &x) { return x.mean_local_clustering; }));
        b.add("f_mm", family, val([](const PersonDescriptors &x) { return value_or_nan(x.multimodal_fraction); }));
        b.add("f_mm_missing", family,
              val([](const PersonDescriptors &x) { return x.multimodal_fraction.missing ? 1.0 : 0.0; }));
        break;
    case Family::M:
        for (std::size_t j = 0; j < kCanonicalMotifs; ++j) {
            b.add("motif_" + std::string{motif_name(kCanonicalMotifList[j])}, family,
                  val([j](const PersonDescriptors &x) {
                      return x.motif_entropy.missing ? kNaN : x.motifs.fractions()[j];
                  }));
        }
        b.add("motif_entropy", family, val([](const PersonDescriptors &x) { return value_or_nan(x.motif_entropy); }));
        b.add("motif_missing", family,
              val([](const PersonDescriptors &x) { return x.motif_entropy.missing ? 1.0 : 0.0; }));
        break;
    case Family::CT:
        b.add("f_solo", family, val([](const PersonDescriptors &x) { return x.cotravel.f_solo; }));
        b.add("f_hh", family, val([](const PersonDescriptors &x) { return x.cotravel.f_hh; }));
        b.add("f_nonhh", family, val([](const PersonDescriptors &x) { return x.cotravel.f_nonhh; }));
        b.add("f_comp", family, val([](const PersonDescriptors &x) { return x.cotravel.f_comp; }));
        break;
    }
}

FeatureVector build(const PersonDescriptors *d, FeatureSet set, const PipelineConfig &config) {
    Builder b;
    for (int f = 0; f <= static_cast<int>(set); ++f) {
        append_family(b, static_cast<Family>(f), d, config);
    }
    return std::move(b.out);
}

} // namespace

std::string_view family_name(Family family) noexcept {
    constexpr std::array<std::string_view, 5> names{"C", "ST", "D", "M", "CT"};
    return names[static_cast<std::size_t>(family)];
}

std::string_view feature_set_name(FeatureSet set) noexcept {
    constexpr std::array<std::string_view, 5> names{"C", "+ST", "+D", "+M", "+CT"};
    return names[static_cast<std::size_t>(set)];
}

FeatureSet parse_feature_set(std::string_view name) {
    auto key = to_lower_trimmed(name);
    if (!key.empty() && key.front() == '+') {
        key.erase(0, 1);
    }
    constexpr std::array<std::string_view, 5> keys{"c", "st", "d", "m", "ct"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (key == keys[i]) {
            return static_cast<FeatureSet>(i);
        }
    }
    throw Error("unknown_feature_set", "unknown feature set '" + std::string{name} + "'");
}

std::vector<FeatureColumn> feature_columns(FeatureSet set, const PipelineConfig &config) {
    return build(nullptr, set, config).columns;
}

std::optional<double> FeatureVector::get(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) {
            return values[i];
        }
    }
    return std::nullopt;
}

FeatureVector assemble_features(const PersonDescriptors &descriptors, FeatureSet set,
                                const PipelineConfig &config) {
    return build(&descriptors, set, config);
}

DesignMatrix build_design_matrix(std::span<const PersonRecord> persons,
                                 std::span<const PersonDescriptors> descriptors, FeatureSet set,
                                 const PipelineConfig &config) {
    if (persons.size() != descriptors.size()) {
        throw Error("shape_mismatch", "persons and descriptors differ in length");
    }
    DesignMatrix m;
    m.columns = feature_columns(set, config);
    m.values.resize(static_cast<Eigen::Index>(persons.size()), static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t i = 0; i < persons.size(); ++i) {
        auto fv = assemble_features(descriptors[i], set, config);
        for (std::size_t j = 0; j < fv.values.size(); ++j) {
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fv.values[j];
        }
        m.row_ids.push_back(persons[i].person_id);
    }
    return m;
}

void Standardizer::fit(const RowMatrix &values, std::span<const std::size_t> rows) {
    if (rows.empty()) {
        throw Error("empty_split", "cannot fit a standardizer on zero rows");
    }
    const auto cols = static_cast<std::size_t>(values.cols());
    mean_.assign(cols, 0.0);
    stddev_.assign(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double sum = 0.0;
        double count = 0.0;
        for (auto r : rows) {
            double x = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
            if (!std::isnan(x)) {
                sum += x;
                count += 1.0;
            }
        }
        double mu = count > 0.0 ? sum / count : 0.0;
        double ss = 0.0;
        for (auto r : rows) {
            double x = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
            if (!std::isnan(x)) {
                ss += (x - mu) * (x - mu);
            }
        }
        mean_[j] = mu;
        stddev_[j] = count > 0.0 ? std::sqrt(ss / count) : 0.0;
    }
}

void Standardizer::fit(const RowMatrix &values) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(values.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
    }
    fit(values, rows);
}

RowMatrix Standardizer::apply(const RowMatrix &values) const {
    if (!fitted()) {
        throw Error("standardizer_not_fitted", "apply() called before fit()");
    }
    if (static_cast<std::size_t>(values.cols()) != mean_.size()) {
        throw Error("shape_mismatch", "column count differs from the fitted standardizer");
    }
    RowMatrix out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            double x = values(i, j);
            auto c = static_cast<std::size_t>(j);
            // Constant columns (tiny std from rounding included) carry no signal.
            if (std::isnan(x) || stddev_[c] <= 1e-12 * std::max(1.0, std::abs(mean_[c]))) {
                out(i, j) = 0.0;
            } else {
                out(i, j) = (x - mean_[c]) / stddev_[c];
            }
        }
    }
    return out;
}

RowMatrix Standardizer::apply(const RowMatrix &values, std::span<const std::size_t> rows) const {
    RowMatrix subset(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        subset.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
    }
    return apply(subset);
}

TaskTargets encode_labels(const PersonRecord &person) {
    TaskTargets out{};
    for (auto task : kAllTasks) {
        const auto &label = person.labels[task];
        out[task_index(task)] = label ? *label : -1;
    }
    return out;
}

void export_design_matrix(const std::filesystem::path &csv_path, const std::filesystem::path &sidecar_path,
                          const DesignMatrix &matrix, const Standardizer &standardizer,
                          std::span<const std::string> partitions, const std::string &run_id) {
    std::ofstream csv{csv_path};
    if (!csv) {
        throw DataError("io_error", "cannot write " + csv_path.string());
    }
    auto standardized = standardizer.apply(matrix.values);
    csv << "# run_id: " << run_id << '\n';
    csv << "person_id";
    if (!partitions.empty()) {
        csv << ",partition";
    }
    for (const auto &c : matrix.columns) {
        csv << ',' << csv_field(c.name);
    }
    csv << '\n';
    for (Eigen::Index i = 0; i < standardized.rows(); ++i) {
        csv << csv_field(matrix.row_ids[static_cast<std::size_t>(i)]);
        if (!partitions.empty()) {
            csv << ',' << partitions[static_cast<std::size_t>(i)];
        }
        for (Eigen::Index j = 0; j < standardized.cols(); ++j) {
            csv << ',' << format_double(standardized(i, j));
        }
        csv << '\n';
    }

    nlohmann::json sidecar;
    sidecar["run_id"] = run_id;
    sidecar["rows"] = matrix.values.rows();
    auto &columns = sidecar["columns"] = nlohmann::json::array();
    for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
        columns.push_back({{"name", matrix.columns[j].name},
                           {"family", family_name(matrix.columns[j].family)},
                           {"mean", standardizer.mean()[j]},
                           {"std", standardizer.stddev()[j]}});
    }
    std::ofstream side{sidecar_path};
    if (!side) {
        throw DataError("io_error", "cannot write " + sidecar_path.string());
    }
    side << sidecar.dump(2) << '\n';
}

} // namespace mobdemo
