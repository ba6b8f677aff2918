#include "mobdemo/descriptors.hpp"
#include "mobdemo/ingest.hpp"
#include "mobdemo/metrics.hpp"
#include "mobdemo/network.hpp"
#include "mobdemo/rng.hpp"
#include "mobdemo/synthgen.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace mobdemo;

std::vector<PersonRecord> small_cohort(std::size_t households) {
    auto spec = CohortSpec::defaults();
    spec.n_households = households;
    spec.seed = 7;
    auto generated = generate(spec);
    auto config = PipelineConfig::defaults();
    auto cleaned = clean_trips(generated.trips, config);
    return assemble_persons(std::move(cleaned.trips), generated.persons, cleaned.report);
}

void BM_Descriptors(benchmark::State &state) {
    const auto persons = small_cohort(200);
    const auto config = PipelineConfig::defaults();
    for (auto _ : state) {
        for (const auto &p : persons) {
            benchmark::DoNotOptimize(compute_descriptors(p.trips, config));
        }
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * persons.size()));
}
BENCHMARK(BM_Descriptors)->Unit(benchmark::kMillisecond);

void BM_MultitaskStep(benchmark::State &state) {
    const auto batch = static_cast<Eigen::Index>(state.range(0));
    Network net{multitask_shape(40)};
    net.initialize(3);
    Rng rng{11};
    std::normal_distribution<double> z;
    RowMatrix x(batch, 40);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = z(rng);
    }
    HeadTargets y(4, std::vector<int>(static_cast<std::size_t>(batch)));
    for (std::size_t t = 0; t < 4; ++t) {
        for (auto &v : y[t]) {
            v = static_cast<int>(rng() % static_cast<std::uint64_t>(kTaskClasses[t]));
        }
    }
    const std::vector<double> weights(4, 1.0);
    ParamVector grad;
    for (auto _ : state) {
        auto cache = net.forward(x, Network::Mode::Train, &rng);
        benchmark::DoNotOptimize(net.loss_and_gradients(cache, y, weights, 1e-4, grad));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MultitaskStep)->Arg(16)->Arg(64)->Arg(128);

PredictionBatch random_batch(std::size_t n, int k, std::uint64_t seed) {
    Rng rng{seed};
    std::uniform_real_distribution<double> u(0.01, 1.0);
    PredictionBatch b;
    b.probs.resize(static_cast<Eigen::Index>(n), k);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            sum += b.probs(static_cast<Eigen::Index>(i), c) = u(rng);
        }
        b.probs.row(static_cast<Eigen::Index>(i)) /= sum;
        b.labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k)));
    }
    return b;
}

void BM_Ece(benchmark::State &state) {
    const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 5, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ece(batch));
    }
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);

void BM_MacroAuroc(benchmark::State &state) {
    const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 5, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(macro_auroc_ovr(batch));
    }
}
BENCHMARK(BM_MacroAuroc)->Arg(1000)->Arg(100000);

} // namespace

BENCHMARK_MAIN();
