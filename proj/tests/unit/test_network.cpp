#include "oracles.hpp"

#include "mobdemo/error.hpp"
#include "mobdemo/network.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mobdemo;
using namespace mobdemo::testing;

namespace {

RowMatrix random_input(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> z;
    RowMatrix x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = z(rng);
    }
    return x;
}

} // namespace

TEST(Network, Shapes) {
    auto mt = multitask_shape(20);
    EXPECT_EQ(mt.hidden, (std::vector<std::size_t>{256, 128}));
    EXPECT_EQ(mt.head_classes, (std::vector<int>{6, 3, 5, 4}));
    auto st = single_task_shape(20, 5);
    EXPECT_EQ(st.hidden, (std::vector<std::size_t>{64, 32}));
    Network net{NetworkShape{3, {4}, {2, 3}, true, 0.0}};
    // trunk 4x3 + 4; each head has layer norm over its 4 inputs
    EXPECT_EQ(net.parameter_count(), 16u + (8u + 8u + 2u) + (8u + 12u + 3u));
    EXPECT_EQ(net.tensors().front().name, "trunk0.weight");
}

TEST(Network, ProbabilitiesSumToOne) {
    Rng rng{1};
    for (bool ln : {false, true}) {
        Network net{multitask_shape(12, ln)};
        net.initialize(4);
        auto probs = net.predict(random_input(rng, 17, 12));
        for (const auto &p : probs) {
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
            }
        }
    }
}

TEST(Network, ZeroTrunkGivesUniform) {
    Network net{NetworkShape{3, {4}, {5}, false, 0.0}};
    net.initialize(2);
    for (const auto &t : net.tensors()) {
        if (t.name.rfind("trunk", 0) == 0) {
            std::fill_n(net.params().begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), 0.0);
        }
    }
    RowMatrix x = RowMatrix::Ones(1, 3);
    auto probs = net.predict(x);
    for (Eigen::Index k = 0; k < 5; ++k) {
        EXPECT_NEAR(probs[0](0, k), 0.2, 1e-15);
    }
    auto cache = net.forward(x, Network::Mode::Eval);
    HeadTargets y{{3}};
    std::vector<double> w{1.0};
    EXPECT_NEAR(net.loss(cache, y, w, 0.0).task_loss[0], std::log(5.0), 1e-12);
}

TEST(Network, TrainModeIsSeedDeterministic) {
    Rng data{3};
    Network net{multitask_shape(8, false, 0.3)};
    net.initialize(9);
    auto x = random_input(data, 5, 8);
    Rng a{42};
    Rng b{42};
    auto c1 = net.forward(x, Network::Mode::Train, &a);
    auto c2 = net.forward(x, Network::Mode::Train, &b);
    for (std::size_t h = 0; h < c1.heads.size(); ++h) {
        EXPECT_EQ(c1.heads[h].probs, c2.heads[h].probs);
    }
    EXPECT_THROW(net.forward(x, Network::Mode::Train), Error);
    EXPECT_THROW(net.forward(RowMatrix::Zero(2, 3), Network::Mode::Eval), Error);
}

TEST(Network, GradientsMatchFiniteDifferencesOnToyNetwork) {
    Rng rng{606};
    for (int trial = 0; trial < 10; ++trial) {
        auto c = random_gradient_case(rng);
        EXPECT_LT(max_relative_gradient_error(c), 1e-5);
    }
}

TEST(Network, MaskedHeadHasZeroGradient) {
    Network net{NetworkShape{4, {5}, {3, 2}, true, 0.0}};
    net.initialize(5);
    Rng rng{6};
    auto x = random_input(rng, 3, 4);
    HeadTargets y{{0, 1, 2}, {-1, -1, -1}};
    std::vector<double> w{1.0, 1.0};
    ParamVector grad;
    auto cache = net.forward(x, Network::Mode::Eval);
    auto value = net.loss_and_gradients(cache, y, w, 0.0, grad);
    EXPECT_EQ(value.task_count[1], 0u);
    EXPECT_EQ(value.task_loss[1], 0.0);
    for (const auto &t : net.tensors()) {
        if (t.name.rfind("head1.", 0) == 0) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                EXPECT_EQ(grad[t.offset + i], 0.0) << t.name;
            }
        }
    }
    HeadTargets none{{-1, -1, -1}, {-1, -1, -1}};
    EXPECT_THROW(net.loss(cache, none, w, 0.0), Error);
}

TEST(Network, WeightDecayTerm) {
    Network net{NetworkShape{2, {2}, {2}, false, 0.0}};
    net.initialize(1);
    double sq = 0.0;
    for (double p : net.params()) {
        sq += p * p;
    }
    auto cache = net.forward(RowMatrix::Ones(1, 2), Network::Mode::Eval);
    HeadTargets y{{1}};
    std::vector<double> w{1.0};
    EXPECT_NEAR(net.loss(cache, y, w, 0.1).regularization, 0.05 * sq, 1e-15);
}

TEST(Network, InitializationRange) {
    Network net{multitask_shape(50)};
    net.initialize(77);
    for (const auto &t : net.tensors()) {
        const auto *p = net.params().data() + t.offset;
        if (t.name.ends_with(".bias")) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                EXPECT_EQ(p[i], 0.0);
            }
        } else if (t.name.ends_with(".weight")) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
            for (std::size_t i = 0; i < t.size(); ++i) {
                EXPECT_LE(std::abs(p[i]), bound);
            }
        }
    }
}
