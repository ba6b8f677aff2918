#include "mobdemo/synthgen.hpp"

#include "mobdemo/config.hpp"
#include "mobdemo/csv.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

namespace mobdemo {

namespace {

constexpr std::array<std::string_view, kNumTasks> kLabelKeys{"age", "gender", "income", "children"};

/// Household-size distribution (1..4 persons).
constexpr std::array<double, 4> kHouseholdSize{0.30, 0.35, 0.20, 0.15};

/// Person-level spread of each knob before scaling by CohortSpec::noise.
double knob_spread(const std::string &knob) {
    if (knob == "weekend") {
        return 0.0;
    }
    if (knob.starts_with("purpose.") || knob.starts_with("mode.")) {
        return 0.4;
    }
    return 0.3;
}

struct Draw {
    Rng rng;

    double uniform() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
    // Box-Muller on raw bits keeps streams identical across standard libraries.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) {
            u1 = 1e-300;
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    bool bernoulli(double p) { return uniform() < p; }
    int poisson(double lambda) {
        const double limit = std::exp(-lambda);
        int k = 0;
        double prod = uniform();
        while (prod > limit && k < 50) {
            ++k;
            prod *= uniform();
        }
        return k;
    }
    std::size_t categorical(std::span<const double> weights) {
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (u < weights[i]) {
                return i;
            }
            u -= weights[i];
        }
        return weights.size() - 1;
    }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

int class_from_latent(double z, const std::vector<double> &probs) {
    double u = normal_cdf(z);
    double cum = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum) {
            return static_cast<int>(k);
        }
    }
    return static_cast<int>(probs.size()) - 1;
}

/// Label score in [-1, 1]: ordinal position for age, income and children;
/// male -1, female +1, non-binary 0 for gender.
double label_score(Task task, int cls) {
    if (task == Task::Gender) {
        constexpr std::array<double, 3> g{-1.0, 1.0, 0.0};
        return g[static_cast<std::size_t>(cls)];
    }
    const double half = (num_classes(task) - 1) / 2.0;
    return (cls - half) / half;
}

const std::vector<std::string> &purpose_codes() {
    static const auto codes = PipelineConfig::defaults().purposes.codes();
    return codes;
}
const std::vector<std::string> &mode_codes() {
    static const auto codes = PipelineConfig::defaults().modes.codes();
    return codes;
}

std::string clean_value(std::string v) {
    v = to_lower_trimmed(v);
    v.erase(std::remove_if(v.begin(), v.end(), [](char c) { return c == '"' || c == '\'' || c == '[' || c == ']'; }),
            v.end());
    return v;
}

double parse_double(const std::string &raw, const std::string &what) {
    auto v = clean_value(raw);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error("bad_spec", "'" + raw + "' is not a number (" + what + ")");
    }
    return out;
}

std::vector<double> parse_doubles(const std::string &raw, const std::string &what) {
    std::vector<double> out;
    for (const auto &item : split_list(clean_value(raw), ',')) {
        out.push_back(parse_double(item, what));
    }
    return out;
}

std::optional<Task> task_from_key(std::string_view key) {
    for (std::size_t t = 0; t < kLabelKeys.size(); ++t) {
        if (key == kLabelKeys[t]) {
            return static_cast<Task>(t);
        }
    }
    return std::nullopt;
}

double round_to(double x, double scale) { return std::round(x * scale) / scale; }

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

/// Minutes spent at an activity, by purpose code.
double dwell_minutes(const std::string &purpose, Draw &draw) {
    double median = 45.0;
    if (purpose == "work") {
        median = 300.0;
    } else if (purpose == "school") {
        median = 330.0;
    } else if (purpose == "escort") {
        median = 10.0;
    } else if (purpose == "leisure") {
        median = 90.0;
    } else if (purpose == "gym") {
        median = 60.0;
    } else if (purpose == "shopping" || purpose == "errand") {
        median = 30.0;
    }
    return median * std::exp(0.3 * draw.normal());
}

double base_speed_kmh(const std::string &mode) {
    if (mode == "drive" || mode == "passenger") {
        return 35.0;
    }
    if (mode == "transit") {
        return 20.0;
    }
    if (mode == "walk") {
        return 5.0;
    }
    if (mode == "bike") {
        return 15.0;
    }
    return 25.0;
}

/// Knob values of one person: wave baseline + scaled label effects + noise.
class PersonBehavior {
public:
    PersonBehavior(const CohortSpec &spec, const BehaviorParams &params, const Labels &labels, Draw &draw) {
        for (const auto &[knob, base] : params.knobs) {
            double value = base;
            for (std::size_t t = 0; t < kNumTasks; ++t) {
                auto task = static_cast<Task>(t);
                auto it = spec.effects.find({task, knob});
                if (it != spec.effects.end() && labels[task]) {
                    value += params.effect_scale * it->second * label_score(task, *labels[task]);
                }
            }
            value += spec.noise * knob_spread(knob) * draw.normal();
            knobs_[knob] = value;
        }
        weekend_probability_ = sigmoid(logit(std::clamp(params.weekend_probability, 1e-6, 1.0 - 1e-6)) +
                                       knobs_.at("weekend"));
        for (const auto &code : purpose_codes()) {
            purpose_weights_.push_back(code == "home" ? 0.0 : std::exp(knobs_.at("purpose." + code)));
        }
        for (const auto &code : mode_codes()) {
            mode_weights_.push_back(std::exp(knobs_.at("mode." + code)));
        }
    }

    double operator[](const std::string &knob) const { return knobs_.at(knob); }
    double weekend_probability() const noexcept { return weekend_probability_; }
    const std::vector<double> &purpose_weights() const noexcept { return purpose_weights_; }
    const std::vector<double> &mode_weights() const noexcept { return mode_weights_; }

private:
    std::map<std::string, double> knobs_;
    double weekend_probability_ = 2.0 / 7.0;
    std::vector<double> purpose_weights_;
    std::vector<double> mode_weights_;
};

struct PersonContext {
    std::string person_id;
    std::string household_id;
    int wave = 0;
    int household_size = 1;
};

std::vector<Day> diary_dates(const WaveSpec &wave, int count, double weekend_probability, Draw &draw) {
    std::vector<Day> weekdays;
    std::vector<Day> weekends;
    for (int d = 0; d < wave.field_days; ++d) {
        Day day = wave.field_start + std::chrono::days{d};
        (weekday_index(day) >= 5 ? weekends : weekdays).push_back(day);
    }
    std::set<Day> chosen;
    for (int i = 0; i < count; ++i) {
        auto &pool = draw.bernoulli(weekend_probability) ? weekends : weekdays;
        if (pool.empty()) {
            continue;
        }
        for (int attempt = 0; attempt < 20; ++attempt) {
            Day day = pool[static_cast<std::size_t>(draw.uniform_int(0, static_cast<int>(pool.size()) - 1))];
            if (chosen.insert(day).second) {
                break;
            }
        }
    }
    return {chosen.begin(), chosen.end()};
}

void generate_day(const PersonContext &who, Day day, const PersonBehavior &b, Draw &draw,
                  std::vector<TripRow> &out) {
    const auto &purposes = purpose_codes();
    const auto &modes = mode_codes();
    const std::size_t home = 0;
    const std::size_t work = 1;

    double t = 420.0 + 60.0 * b["depart"] + 40.0 * draw.normal();
    t = std::clamp(t, 240.0, 660.0);
    const int n_tours = 1 + std::min(draw.poisson(std::exp(b["tours"])), 3);
    std::size_t location = home;

    auto draw_purpose = [&](std::size_t exclude1, std::size_t exclude2) {
        auto w = b.purpose_weights();
        w[exclude1] = 0.0;
        w[exclude2] = 0.0;
        return draw.categorical(w);
    };

    for (int tour = 0; tour < n_tours; ++tour) {
        if (t > 1260.0) {
            break;
        }
        const std::size_t primary = draw.categorical(b.mode_weights());
        const bool multimodal = draw.bernoulli(sigmoid(b["multimodal"]));
        const std::size_t access = modes[primary] == "walk" ? 2 : 3; // transit or walk leg

        std::vector<std::size_t> stops{draw_purpose(home, home)};
        if (stops.front() == work && draw.bernoulli(sigmoid(b["work_subtour"]))) {
            stops.push_back(draw_purpose(home, work));
            stops.push_back(work);
        }
        const int extra = std::min(draw.poisson(std::exp(b["stops"])), 3);
        for (int s = 0; s < extra; ++s) {
            stops.push_back(draw_purpose(home, stops.back()));
        }
        const bool last = tour + 1 == n_tours;
        if (!(last && draw.bernoulli(sigmoid(b["open_day"])))) {
            stops.push_back(home);
        }

        for (std::size_t leg = 0; leg < stops.size(); ++leg) {
            if (t >= 1430.0) {
                return;
            }
            TripRow row;
            row.person_id = who.person_id;
            row.household_id = who.household_id;
            row.wave = who.wave;
            row.day = day;
            row.origin_purpose = purposes[location];
            row.dest_purpose = purposes[stops[leg]];
            row.modes.push_back(modes[primary]);
            if (multimodal && (leg == 0 || leg + 1 == stops.size())) {
                row.modes.push_back(modes[access]);
            }
            double distance = std::exp(b["distance"] + 0.6 * draw.normal());
            distance = round_to(std::max(distance, 0.2), 1000.0);
            double speed = base_speed_kmh(modes[primary]) * std::exp(b["speed"] + 0.2 * draw.normal());
            double duration = round_to(std::max(1.0, distance / speed * 60.0), 10.0);
            row.distance_km = distance;
            row.duration_min = duration;
            row.depart_min = static_cast<int>(t);
            row.arrive_min = std::min(1439, row.depart_min + static_cast<int>(std::lround(duration)));
            if (draw.bernoulli(sigmoid(b["companion_hh"]))) {
                row.n_hh_companions = 1 + draw.poisson(0.3);
            } else if (draw.bernoulli(sigmoid(b["companion_nonhh"]))) {
                row.n_nonhh_companions = 1 + draw.poisson(0.3);
            }
            out.push_back(std::move(row));
            location = stops[leg];
            t = out.back().arrive_min + dwell_minutes(purposes[location], draw);
        }
        t += std::abs(60.0 + 30.0 * draw.normal());
    }
}

struct AgeBin {
    int lo;
    int hi;
};
constexpr std::array<AgeBin, 6> kAgeYears{{{0, 11}, {12, 17}, {18, 34}, {35, 54}, {55, 74}, {75, 95}}};
constexpr std::array<AgeBin, 5> kIncomeHundreds{{{50, 249}, {250, 499}, {500, 749}, {750, 999}, {1000, 2500}}};

RawPersonAttributes raw_attributes(const Labels &labels, Draw &draw) {
    RawPersonAttributes raw;
    auto age = static_cast<std::size_t>(*labels[Task::Age]);
    raw.age_years = draw.uniform_int(kAgeYears[age].lo, kAgeYears[age].hi);
    constexpr std::array<const char *, 3> genders{"male", "female", "non-binary"};
    raw.gender = genders[static_cast<std::size_t>(*labels[Task::Gender])];
    auto income = static_cast<std::size_t>(*labels[Task::Income]);
    raw.income = std::to_string(100 * draw.uniform_int(kIncomeHundreds[income].lo, kIncomeHundreds[income].hi));
    int children = *labels[Task::Children];
    raw.n_children = children < 3 ? children : 3 + draw.uniform_int(0, 1);
    return raw;
}

void generate_household(const CohortSpec &spec, const WaveSpec &wave, const BehaviorParams &params,
                        std::size_t index, GeneratedCohort &out) {
    Draw draw{Rng{derive_seed(spec.seed, "household", index)}};
    const double rho = spec.label_correlation;

    // Household-level latents (income, children), then person-level (age,
    // gender) from their conditional law under an equicorrelated copula.
    const double z_income = draw.normal();
    const double z_children = rho * z_income + std::sqrt(1.0 - rho * rho) * draw.normal();
    const double cond_mean = rho / (1.0 + rho) * (z_income + z_children);
    const double cond_var = 1.0 - 2.0 * rho * rho / (1.0 + rho);
    const double cond_cov = rho - 2.0 * rho * rho / (1.0 + rho);
    const double l11 = std::sqrt(cond_var);
    const double l21 = cond_cov / l11;
    const double l22 = std::sqrt(std::max(0.0, cond_var - l21 * l21));

    const int income = class_from_latent(z_income, wave.marginals[task_index(Task::Income)]);
    const int children = class_from_latent(z_children, wave.marginals[task_index(Task::Children)]);
    const int size = 1 + static_cast<int>(draw.categorical(kHouseholdSize));

    char hh_buf[32];
    std::snprintf(hh_buf, sizeof hh_buf, "h%06zu", index);
    const std::string household_id = hh_buf;

    for (int member = 0; member < size; ++member) {
        const double e1 = draw.normal();
        const double e2 = draw.normal();
        const double z_age = cond_mean + l11 * e1;
        const double z_gender = cond_mean + l21 * e1 + l22 * e2;

        Labels labels;
        labels[Task::Age] = class_from_latent(z_age, wave.marginals[task_index(Task::Age)]);
        labels[Task::Gender] = class_from_latent(z_gender, wave.marginals[task_index(Task::Gender)]);
        labels[Task::Income] = income;
        labels[Task::Children] = children;

        PersonContext who{household_id + "-" + std::to_string(member + 1), household_id, wave.wave, size};
        PersonRow person;
        person.person_id = who.person_id;
        person.household_id = household_id;
        person.wave = wave.wave;
        person.attributes = raw_attributes(labels, draw);
        person.labels = labels;

        PersonBehavior behavior{spec, params, labels, draw};
        for (auto day : diary_dates(wave, spec.diary_days, behavior.weekend_probability(), draw)) {
            generate_day(who, day, behavior, draw, out.trips);
        }
        out.persons.push_back(std::move(person));
    }
}

/// Households per wave in proportion to the weights; the last wave absorbs
/// rounding so the total is exact.
std::vector<std::size_t> households_per_wave(const CohortSpec &spec) {
    double total = 0.0;
    for (const auto &w : spec.waves) {
        total += w.weight;
    }
    std::vector<std::size_t> counts;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < spec.waves.size(); ++i) {
        std::size_t n = i + 1 == spec.waves.size()
                            ? spec.n_households - assigned
                            : static_cast<std::size_t>(std::llround(spec.waves[i].weight / total *
                                                                    static_cast<double>(spec.n_households)));
        n = std::min(n, spec.n_households - assigned);
        counts.push_back(n);
        assigned += n;
    }
    return counts;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng{seed};
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    return order;
}

void corrupt(TripRow &row, std::string_view category) {
    if (category == "invalid_purpose") {
        row.dest_purpose.clear();
    } else if (category == "blank_mode") {
        row.modes.clear();
    } else if (category == "zero_or_missing_spatial") {
        row.distance_km = 0.0;
    } else {
        row.duration_min = -row.duration_min;
    }
}

Day make_day(int y, unsigned m, unsigned d) {
    return Day{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

} // namespace

LabelMarginals reference_marginals(int wave) {
    // Default person shares per wave, after cleaning.
    LabelMarginals m;
    if (wave == 2019) {
        m[0] = {0.101, 0.0336, 0.319, 0.313, 0.199, 0.0344};
        m[1] = {0.484, 0.495, 0.0045};
        m[2] = {0.0663, 0.124, 0.151, 0.139, 0.519};
        m[3] = {0.696, 0.124, 0.122, 0.0528};
    } else if (wave == 2023) {
        m[0] = {0.108, 0.0393, 0.267, 0.303, 0.230, 0.0533};
        m[1] = {0.436, 0.479, 0.0203};
        m[2] = {0.0707, 0.106, 0.129, 0.106, 0.588};
        m[3] = {0.673, 0.121, 0.151, 0.0553};
    } else {
        m[0] = {0.0974, 0.0297, 0.342, 0.307, 0.191, 0.0325};
        m[1] = {0.489, 0.491, 0.0031};
        m[2] = {0.0807, 0.126, 0.146, 0.143, 0.503};
        m[3] = {0.696, 0.138, 0.140, 0.0257};
    }
    // Respondents without a reported value are left out of the published
    // shares; renormalize so each label sums to one.
    for (auto &probs : m) {
        double total = std::accumulate(probs.begin(), probs.end(), 0.0);
        for (auto &p : probs) {
            p /= total;
        }
    }
    return m;
}

std::vector<std::string> known_knobs() {
    std::vector<std::string> knobs{"tours",          "stops", "open_day", "work_subtour", "multimodal",
                                   "companion_hh",   "companion_nonhh", "speed", "distance", "depart",
                                   "weekend"};
    for (const auto &p : purpose_codes()) {
        if (p != "home") {
            knobs.push_back("purpose." + p);
        }
    }
    for (const auto &m : mode_codes()) {
        knobs.push_back("mode." + m);
    }
    return knobs;
}

std::map<std::string, double> default_baseline() {
    return {
        {"tours", std::log(0.6)},
        {"stops", std::log(0.5)},
        {"open_day", -2.5},
        {"work_subtour", -1.5},
        {"multimodal", -1.8},
        {"companion_hh", -1.2},
        {"companion_nonhh", -1.5},
        {"speed", 0.0},
        {"distance", std::log(5.0)},
        {"depart", 0.0},
        {"weekend", 0.0},
        {"purpose.work", 1.0},
        {"purpose.school", -0.5},
        {"purpose.shopping", 0.5},
        {"purpose.errand", 0.3},
        {"purpose.leisure", 0.6},
        {"purpose.escort", -1.0},
        {"purpose.gym", -1.0},
        {"purpose.other", -1.5},
        {"mode.drive", 1.5},
        {"mode.passenger", 0.2},
        {"mode.transit", -0.3},
        {"mode.walk", 0.0},
        {"mode.bike", -1.5},
        {"mode.school-bus", -2.5},
        {"mode.other", -3.0},
    };
}

std::map<std::pair<Task, std::string>, double> default_effects() {
    // Signs follow commonly reported associations; magnitudes are arbitrary.
    return {
        {{Task::Age, "purpose.school"}, -2.0},
        {{Task::Age, "mode.drive"}, 1.0},
        {{Task::Age, "mode.school-bus"}, -1.5},
        {{Task::Age, "mode.passenger"}, -0.8},
        {{Task::Age, "companion_hh"}, -0.6},
        {{Task::Age, "multimodal"}, 0.3},
        {{Task::Age, "purpose.shopping"}, 0.4},
        {{Task::Gender, "stops"}, 0.2},
        {{Task::Gender, "purpose.errand"}, 0.3},
        {{Task::Gender, "purpose.shopping"}, 0.3},
        {{Task::Gender, "purpose.work"}, -0.2},
        {{Task::Gender, "mode.bike"}, -0.5},
        {{Task::Gender, "companion_hh"}, 0.2},
        {{Task::Income, "purpose.shopping"}, -0.4},
        {{Task::Income, "speed"}, 0.3},
        {{Task::Income, "distance"}, 0.3},
        {{Task::Income, "mode.drive"}, 0.4},
        {{Task::Income, "mode.transit"}, 0.3},
        {{Task::Income, "multimodal"}, 0.6},
        {{Task::Income, "companion_nonhh"}, 0.3},
        {{Task::Children, "purpose.escort"}, 1.5},
        {{Task::Children, "purpose.school"}, 1.0},
        {{Task::Children, "purpose.shopping"}, -0.3},
        {{Task::Children, "mode.school-bus"}, 1.0},
        {{Task::Children, "mode.passenger"}, 0.6},
        {{Task::Children, "mode.transit"}, -0.4},
        {{Task::Children, "mode.walk"}, -0.3},
        {{Task::Children, "companion_hh"}, 1.2},
        {{Task::Children, "distance"}, -0.2},
        {{Task::Children, "work_subtour"}, -0.5},
        {{Task::Children, "multimodal"}, 0.2},
    };
}

CohortSpec CohortSpec::defaults() {
    CohortSpec spec;
    spec.waves = {
        {2017, 5545.0, reference_marginals(2017), make_day(2017, 4, 10), 60, {}, 1.0},
        {2019, 5116.0, reference_marginals(2019), make_day(2019, 3, 11), 60, {}, 1.0},
        {2023, 5959.0, reference_marginals(2023), make_day(2023, 4, 24), 60, {}, 1.0},
    };
    spec.baseline = default_baseline();
    spec.effects = default_effects();
    return spec;
}

void CohortSpec::validate() const {
    auto fail = [](const std::string &msg) { throw Error("bad_spec", msg); };
    if (n_households == 0) {
        fail("n_households must be positive");
    }
    if (waves.empty()) {
        fail("at least one wave is required");
    }
    if (diary_days < 1) {
        fail("diary_days must be at least 1");
    }
    if (!(noise >= 0.0)) {
        fail("noise must be non-negative");
    }
    if (!(label_correlation >= 0.0 && label_correlation < 0.95)) {
        fail("label_correlation must lie in [0, 0.95)");
    }
    const auto knobs = known_knobs();
    auto known = [&](const std::string &k) { return std::find(knobs.begin(), knobs.end(), k) != knobs.end(); };
    for (const auto &wave : waves) {
        if (!(wave.weight > 0.0) || wave.field_days < 7) {
            fail("wave " + std::to_string(wave.wave) + " needs a positive weight and at least 7 field days");
        }
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            const auto &probs = wave.marginals[t];
            if (probs.size() != static_cast<std::size_t>(kTaskClasses[t])) {
                fail(std::string{kLabelKeys[t]} + " marginals for wave " + std::to_string(wave.wave) + " need " +
                     std::to_string(kTaskClasses[t]) + " entries");
            }
            double sum = 0.0;
            for (double p : probs) {
                if (!(p >= 0.0)) {
                    fail("negative marginal probability");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6) {
                fail(std::string{kLabelKeys[t]} + " marginals for wave " + std::to_string(wave.wave) +
                     " sum to " + format_double(sum));
            }
        }
        for (const auto &[knob, _] : wave.shift) {
            if (!known(knob)) {
                fail("unknown knob '" + knob + "' in wave shift");
            }
        }
    }
    for (const auto &knob : knobs) {
        if (!baseline.contains(knob)) {
            fail("baseline lacks knob '" + knob + "'");
        }
    }
    for (const auto &[key, _] : effects) {
        if (!known(key.second)) {
            fail("effect references unknown knob '" + key.second + "'");
        }
    }
    double dirty_total = 0.0;
    for (const auto &[category, fraction] : dirty) {
        if (std::find(kExclusionCategories.begin(), kExclusionCategories.end(), category) ==
            kExclusionCategories.end()) {
            fail("unknown exclusion category '" + category + "'");
        }
        if (!(fraction >= 0.0 && fraction < 1.0)) {
            fail("dirty fractions must lie in [0, 1)");
        }
        dirty_total += fraction;
    }
    if (dirty_total >= 1.0) {
        fail("dirty fractions must sum to less than 1");
    }
    for (double f : missing_labels) {
        if (!(f >= 0.0 && f < 1.0)) {
            fail("missing-label fractions must lie in [0, 1)");
        }
    }
}

CohortSpec parse_cohort_spec(std::istream &in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw Error("bad_spec", e.what());
    }
    CohortSpec spec = CohortSpec::defaults();
    auto section = [&](const std::string &name) -> const pt::ptree * {
        auto it = tree.find(name);
        return it == tree.not_found() ? nullptr : &it->second;
    };

    if (const auto *cohort = section("cohort")) {
        for (const auto &[key, node] : *cohort) {
            const auto value = node.data();
            if (key == "n_households") {
                spec.n_households = static_cast<std::size_t>(parse_double(value, key));
            } else if (key == "seed") {
                spec.seed = static_cast<std::uint64_t>(parse_double(value, key));
            } else if (key == "noise") {
                spec.noise = parse_double(value, key);
            } else if (key == "label_correlation") {
                spec.label_correlation = parse_double(value, key);
            } else if (key == "diary_days") {
                spec.diary_days = static_cast<int>(parse_double(value, key));
            } else if (key == "effects") {
                auto mode = clean_value(value);
                if (mode == "none") {
                    spec.effects.clear();
                } else if (mode != "default") {
                    throw Error("bad_spec", "cohort.effects must be 'default' or 'none'");
                }
            } else {
                throw Error("bad_spec", "unknown key cohort." + key);
            }
        }
    }

    if (const auto *waves = section("waves")) {
        auto tags = waves->get_optional<std::string>("tags");
        auto weights = waves->get_optional<std::string>("weights");
        if (tags) {
            std::vector<WaveSpec> selected;
            for (double tag : parse_doubles(*tags, "waves.tags")) {
                auto wave = static_cast<int>(tag);
                auto it = std::find_if(spec.waves.begin(), spec.waves.end(),
                                       [&](const WaveSpec &w) { return w.wave == wave; });
                if (it != spec.waves.end()) {
                    selected.push_back(*it);
                } else {
                    selected.push_back({wave, 1.0, reference_marginals(2017), make_day(wave, 4, 1), 60, {}, 1.0});
                }
            }
            spec.waves = std::move(selected);
        }
        if (weights) {
            auto w = parse_doubles(*weights, "waves.weights");
            if (w.size() != spec.waves.size()) {
                throw Error("bad_spec", "waves.weights must match waves.tags");
            }
            for (std::size_t i = 0; i < w.size(); ++i) {
                spec.waves[i].weight = w[i];
            }
        }
    }

    for (auto &wave : spec.waves) {
        const auto tag = std::to_string(wave.wave);
        if (const auto *marg = section("marginals." + tag)) {
            for (const auto &[key, node] : *marg) {
                auto task = task_from_key(key);
                if (!task) {
                    throw Error("bad_spec", "unknown label '" + key + "' in marginals." + tag);
                }
                wave.marginals[task_index(*task)] = parse_doubles(node.data(), "marginals." + tag + "." + key);
            }
        }
        if (const auto *shift = section("wave_shift." + tag)) {
            for (const auto &[key, node] : *shift) {
                if (key == "effect_scale") {
                    wave.effect_scale = parse_double(node.data(), key);
                } else {
                    wave.shift[key] = parse_double(node.data(), "wave_shift." + tag + "." + key);
                }
            }
        }
    }

    if (const auto *baseline = section("baseline")) {
        for (const auto &[key, node] : *baseline) {
            if (!spec.baseline.contains(key)) {
                throw Error("bad_spec", "unknown baseline knob '" + key + "'");
            }
            spec.baseline[key] = parse_double(node.data(), key);
        }
    }
    if (const auto *effects = section("effects")) {
        for (const auto &[key, node] : *effects) {
            auto dot = key.find('.');
            auto task = dot == std::string::npos ? std::nullopt : task_from_key(key.substr(0, dot));
            if (!task) {
                throw Error("bad_spec", "effect key '" + key + "' must look like <label>.<knob>");
            }
            double coef = parse_double(node.data(), key);
            auto id = std::make_pair(*task, key.substr(dot + 1));
            if (coef == 0.0) {
                spec.effects.erase(id);
            } else {
                spec.effects[id] = coef;
            }
        }
    }
    if (const auto *dirty = section("dirty")) {
        for (const auto &[key, node] : *dirty) {
            spec.dirty[key] = parse_double(node.data(), key);
        }
    }
    if (const auto *missing = section("missing_labels")) {
        for (const auto &[key, node] : *missing) {
            auto task = task_from_key(key);
            if (!task) {
                throw Error("bad_spec", "unknown label '" + key + "' in missing_labels");
            }
            spec.missing_labels[task_index(*task)] = parse_double(node.data(), key);
        }
    }
    spec.validate();
    return spec;
}

CohortSpec load_cohort_spec(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw DataError("missing_file", "cannot open " + path.string());
    }
    return parse_cohort_spec(in);
}

BehaviorParams wave_shift(const CohortSpec &spec, int wave) {
    auto it = std::find_if(spec.waves.begin(), spec.waves.end(), [&](const WaveSpec &w) { return w.wave == wave; });
    if (it == spec.waves.end()) {
        throw Error("bad_spec", "wave " + std::to_string(wave) + " is not part of the cohort");
    }
    BehaviorParams params;
    params.knobs = spec.baseline;
    params.effect_scale = it->effect_scale;
    for (const auto &[knob, shift] : it->shift) {
        if (knob == "weekend") {
            params.weekend_probability *= 1.0 + shift;
        } else {
            params.knobs[knob] += shift;
        }
    }
    params.weekend_probability = std::clamp(params.weekend_probability, 0.0, 1.0);
    return params;
}

GeneratedCohort generate(const CohortSpec &spec) {
    spec.validate();
    GeneratedCohort out;
    auto counts = households_per_wave(spec);
    std::size_t index = 0;
    for (std::size_t w = 0; w < spec.waves.size(); ++w) {
        auto params = wave_shift(spec, spec.waves[w].wave);
        for (std::size_t h = 0; h < counts[w]; ++h) {
            generate_household(spec, spec.waves[w], params, index++, out);
        }
    }

    // Corrupt disjoint, seeded sets of trips; one field each so the first
    // matching exclusion rule is exactly the requested category.
    auto order = seeded_permutation(out.trips.size(), derive_seed(spec.seed, "dirty"));
    std::size_t cursor = 0;
    for (auto category : kExclusionCategories) {
        std::string name{category};
        auto it = spec.dirty.find(name);
        double fraction = it == spec.dirty.end() ? 0.0 : it->second;
        auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(out.trips.size())));
        k = std::min(k, out.trips.size() - cursor);
        for (std::size_t i = 0; i < k; ++i) {
            corrupt(out.trips[order[cursor++]], category);
        }
        out.dirty_counts[name] = k;
    }

    for (std::size_t t = 0; t < kNumTasks; ++t) {
        auto task = static_cast<Task>(t);
        auto k = static_cast<std::size_t>(
            std::llround(spec.missing_labels[t] * static_cast<double>(out.persons.size())));
        auto picks = seeded_permutation(out.persons.size(), derive_seed(spec.seed, "missing", t));
        for (std::size_t i = 0; i < k; ++i) {
            auto &person = out.persons[picks[i]];
            person.labels[task].reset();
            switch (task) {
            case Task::Age:
                person.attributes.age_years.reset();
                break;
            case Task::Gender:
                person.attributes.gender.clear();
                break;
            case Task::Income:
                person.attributes.income.clear();
                break;
            case Task::Children:
                person.attributes.n_children.reset();
                break;
            }
        }
        out.missing_label_counts[std::string{kLabelKeys[t]}] = k;
    }
    return out;
}

void write_trips_csv(std::ostream &out, const std::vector<TripRow> &trips) {
    for (std::size_t i = 0; i < kTripColumns.size(); ++i) {
        out << (i ? "," : "") << kTripColumns[i];
    }
    out << '\n';
    for (const auto &r : trips) {
        std::string modes;
        for (const auto &m : r.modes) {
            modes += (modes.empty() ? "" : "|") + m;
        }
        out << csv_field(r.person_id) << ',' << csv_field(r.household_id) << ',' << r.wave << ','
            << format_date(r.day) << ',' << csv_field(r.origin_purpose) << ',' << csv_field(r.dest_purpose) << ','
            << csv_field(modes) << ',' << format_clock(r.depart_min) << ',' << format_clock(r.arrive_min) << ','
            << fixed(r.duration_min, 1) << ',' << (r.distance_km ? fixed(*r.distance_km, 3) : "") << ','
            << r.n_hh_companions << ',' << r.n_nonhh_companions << '\n';
    }
}

void write_persons_csv(std::ostream &out, const std::vector<PersonRow> &persons) {
    for (std::size_t i = 0; i < kPersonColumns.size(); ++i) {
        out << (i ? "," : "") << kPersonColumns[i];
    }
    out << '\n';
    for (const auto &p : persons) {
        const auto &a = p.attributes;
        out << csv_field(p.person_id) << ',' << csv_field(p.household_id) << ',' << p.wave << ','
            << (a.age_years ? fixed(*a.age_years, 0) : "") << ',' << csv_field(a.gender) << ','
            << csv_field(a.income) << ',' << (a.n_children ? std::to_string(*a.n_children) : "") << '\n';
    }
}

void write_cohort(const std::filesystem::path &dir, const CohortSpec &spec, const GeneratedCohort &cohort,
                  const std::string &run_id) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream trips{dir / "trips.csv"};
        std::ofstream persons{dir / "persons.csv"};
        if (!run_id.empty()) {
            trips << "# run_id: " << run_id << '\n';
            persons << "# run_id: " << run_id << '\n';
        }
        write_trips_csv(trips, cohort.trips);
        write_persons_csv(persons, cohort.persons);
        if (!trips || !persons) {
            throw DataError("io_error", "cannot write cohort files under " + dir.string());
        }
    }

    nlohmann::json m;
    if (!run_id.empty()) {
        m["run_id"] = run_id;
    }
    m["seed"] = spec.seed;
    m["n_households"] = spec.n_households;
    m["n_persons"] = cohort.persons.size();
    m["n_trips"] = cohort.trips.size();
    m["noise"] = spec.noise;
    m["label_correlation"] = spec.label_correlation;
    m["diary_days"] = spec.diary_days;
    auto &waves = m["waves"] = nlohmann::json::array();
    for (const auto &w : spec.waves) {
        nlohmann::json wj;
        wj["wave"] = w.wave;
        wj["weight"] = w.weight;
        wj["field_start"] = format_date(w.field_start);
        wj["field_days"] = w.field_days;
        for (std::size_t t = 0; t < kNumTasks; ++t) {
            wj["marginals"][std::string{kLabelKeys[t]}] = w.marginals[t];
        }
        wj["shift"] = w.shift;
        wj["effect_scale"] = w.effect_scale;
        waves.push_back(std::move(wj));
    }
    m["baseline"] = spec.baseline;
    auto &effects = m["effects"] = nlohmann::json::array();
    for (const auto &[key, coef] : spec.effects) {
        effects.push_back({{"label", kLabelKeys[task_index(key.first)]},
                           {"knob", key.second},
                           {"coefficient", coef},
                           {"sign", coef > 0.0 ? 1 : -1}});
    }
    m["dirty_fractions"] = spec.dirty;
    m["dirty_counts"] = cohort.dirty_counts;
    m["missing_label_counts"] = cohort.missing_label_counts;
    std::ofstream manifest{dir / "manifest.json"};
    manifest << m.dump(2) << '\n';
}

} // namespace mobdemo
