#include "mobdemo/checkpoint.hpp"
#include "mobdemo/digest.hpp"
#include "mobdemo/error.hpp"
#include "mobdemo/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace mobdemo;

namespace {

/// Two Gaussian blobs two standard deviations apart along every axis.
Dataset blobs(std::size_t n, std::uint64_t seed) {
    Rng rng{seed};
    std::normal_distribution<double> z;
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(n), 4);
    d.y.assign(1, std::vector<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        for (Eigen::Index j = 0; j < 4; ++j) {
            d.x(static_cast<Eigen::Index>(i), j) = z(rng) + (label == 1 ? 2.0 : -2.0);
        }
        d.y[0][i] = label;
    }
    return d;
}

TrainConfig quick(int epochs = 30) {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.batch_size = 32;
    c.max_epochs = epochs;
    c.patience = 10;
    c.dropout = 0.0;
    c.seed = 11;
    return c;
}

} // namespace

TEST(Trainer, SeparableTargetIsLearned) {
    auto train_set = blobs(400, 1);
    auto val_set = blobs(200, 2);
    Network net{single_task_shape(4, 2, false, 0.0)};
    net.initialize(3);
    auto result = train(net, train_set, val_set, quick(200));
    auto probs = net.predict(val_set.x)[0];
    int correct = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index arg = 0;
        probs.row(i).maxCoeff(&arg);
        correct += arg == val_set.y[0][static_cast<std::size_t>(i)];
    }
    EXPECT_GT(correct / 200.0, 0.95);
    EXPECT_GE(result.best_epoch, 1);
}

TEST(Trainer, DeterministicUnderSeed) {
    auto train_set = blobs(120, 4);
    auto val_set = blobs(40, 5);
    std::vector<double> finals;
    for (int run = 0; run < 2; ++run) {
        Network net{single_task_shape(4, 2, false, 0.3)};
        net.initialize(8);
        auto r = train(net, train_set, val_set, quick(10));
        finals.push_back(r.log.back().val_loss);
        finals.push_back(r.best_val_loss);
    }
    EXPECT_EQ(finals[0], finals[2]);
    EXPECT_EQ(finals[1], finals[3]);
}

TEST(Trainer, PatienceZeroStopsAtFirstStall) {
    auto train_set = blobs(60, 6);
    auto val_set = blobs(30, 7);
    Network net{single_task_shape(4, 2, false, 0.0)};
    net.initialize(1);
    auto cfg = quick(500);
    cfg.patience = 0;
    cfg.learning_rate = 1e-3;
    auto r = train(net, train_set, val_set, cfg);
    ASSERT_LT(r.log.size(), 500u);
    // The last epoch is the first that failed to improve.
    double best = r.log.front().val_loss;
    for (std::size_t e = 1; e + 1 < r.log.size(); ++e) {
        EXPECT_LT(r.log[e].val_loss, best);
        best = r.log[e].val_loss;
    }
    EXPECT_GE(r.log.back().val_loss, best);
}

TEST(Trainer, RestoresBestParameters) {
    auto train_set = blobs(60, 6);
    auto val_set = blobs(30, 7);
    Network net{single_task_shape(4, 2, false, 0.0)};
    net.initialize(1);
    auto r = train(net, train_set, val_set, quick(20));
    std::vector<double> w(1, 1.0);
    EXPECT_DOUBLE_EQ(evaluate_loss(net, val_set, w).data, r.best_val_loss);
}

TEST(Trainer, ConfigValidation) {
    auto cfg = quick();
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick();
    cfg.dropout = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
    TrainConfig defaults;
    EXPECT_TRUE(defaults.in_grid());
    Network net{single_task_shape(4, 2)};
    Dataset empty;
    empty.x.resize(0, 4);
    empty.y.assign(1, {});
    EXPECT_THROW(train(net, empty, blobs(4, 1), quick()), Error);
}

TEST(Subsample, Sizes) {
    EXPECT_EQ(subsample_indices(10000, 0.01, 1).size(), 100u);
    auto all = subsample_indices(50, 1.0, 1);
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i], i);
    }
    EXPECT_THROW(subsample_indices(100, 0.001, 1), Error);
    EXPECT_THROW(subsample_indices(100, 1.5, 1), Error);
}

TEST(Subsample, SmallerFractionsAreNested) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto small = subsample_indices(5000, 0.001, seed);
        auto mid = subsample_indices(5000, 0.01, seed);
        auto big = subsample_indices(5000, 0.1, seed);
        std::set<std::size_t> mids(mid.begin(), mid.end());
        std::set<std::size_t> bigs(big.begin(), big.end());
        EXPECT_EQ(mids.size(), mid.size());
        for (auto i : small) {
            EXPECT_TRUE(mids.contains(i));
        }
        for (auto i : mid) {
            EXPECT_TRUE(bigs.contains(i));
        }
    }
}

TEST(Checkpoint, RoundTrip) {
    auto cfg = quick();
    Network net{multitask_shape(6, true, 0.2)};
    net.initialize(5);
    auto path = std::filesystem::temp_directory_path() / "mobdemo_ckpt_test.json";
    save_checkpoint(path, make_checkpoint(net, cfg, {"age", "gender", "income", "children"}));
    auto loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.config_hash, sha1_hex(cfg.canonical()));
    auto restored = restore_network(loaded);
    EXPECT_EQ(restored.params(), net.params());
    EXPECT_EQ(restored.shape(), net.shape());

    auto text = read_file(path);
    auto pos = text.find(loaded.config_hash);
    ASSERT_NE(pos, std::string::npos);
    text[pos] = text[pos] == 'a' ? 'b' : 'a';
    {
        std::ofstream out{path};
        out << text;
    }
    EXPECT_THROW(load_checkpoint(path), DataError);
    std::filesystem::remove(path);
}

TEST(Digest, KnownValues) {
    EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
    // Same value git prints for an empty blob.
    EXPECT_EQ(content_digest(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
