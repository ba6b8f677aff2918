#pragma once

#include "mobdemo/matrix.hpp"
#include "mobdemo/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mobdemo {

/// Shared trunk of affine+ReLU layers feeding one softmax head per task.
struct NetworkShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::vector<int> head_classes;
    bool layer_norm = false;
    double dropout = 0.3;

    bool operator==(const NetworkShape &) const = default;
};

inline constexpr std::size_t kMtHidden1 = 256;
inline constexpr std::size_t kMtHidden2 = 128;
inline constexpr std::size_t kStHidden1 = 64;
inline constexpr std::size_t kStHidden2 = 32;

/// input -> 256 -> 128 with age/gender/income/children heads.
NetworkShape multitask_shape(std::size_t input_dim, bool layer_norm = false, double dropout = 0.3);
/// input -> 64 -> 32 with a single head of `classes` outputs.
NetworkShape single_task_shape(std::size_t input_dim, int classes, bool layer_norm = false, double dropout = 0.3);

/// Flat parameter or gradient store. Aligned so that the vectorized
/// kernels take the same path (and summation order) on every run.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Location of one parameter tensor inside the flat store.
struct TensorInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const noexcept { return rows * cols; }
};

/// Per-head labels; -1 marks a masked sample.
using HeadTargets = std::vector<std::vector<int>>;

struct HeadCache {
    RowMatrix normalized; ///< layer-norm output xhat (empty without layer norm)
    Eigen::VectorXd inv_std;
    RowMatrix features; ///< head input after optional gain/bias
    RowMatrix probs;
    RowMatrix log_probs;
};

struct ForwardCache {
    bool training = false;
    RowMatrix input;
    std::vector<RowMatrix> pre;  ///< pre-activation per hidden layer
    std::vector<RowMatrix> act;  ///< post-ReLU (and post-dropout) output per hidden layer
    std::vector<RowMatrix> mask; ///< inverted-dropout scale per hidden layer (train only)
    std::vector<HeadCache> heads;
};

struct LossValue {
    std::vector<double> task_loss;        ///< mean CE over unmasked rows; 0 when none
    std::vector<std::size_t> task_count;  ///< unmasked rows per task
    double data = 0.0;                    ///< sum_t w_t * task_loss[t]
    double regularization = 0.0;          ///< (wd/2) * ||params||^2
    double total() const noexcept { return data + regularization; }
};

class Network {
public:
    enum class Mode { Train, Eval };

    explicit Network(NetworkShape shape);

    const NetworkShape &shape() const noexcept { return shape_; }
    std::size_t heads() const noexcept { return shape_.head_classes.size(); }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    ParamVector &params() noexcept { return params_; }
    const ParamVector &params() const noexcept { return params_; }
    const std::vector<TensorInfo> &tensors() const noexcept { return tensors_; }

    /// Fan-in uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
    /// biases, unit layer-norm gains.
    void initialize(std::uint64_t seed);

    /// Throws Error("dimension_mismatch") for a wrong input width. In
    /// Train mode `rng` drives the dropout masks and must be non-null.
    ForwardCache forward(const RowMatrix &x, Mode mode, Rng *rng = nullptr) const;

    /// Eval-mode class probabilities per head.
    std::vector<RowMatrix> predict(const RowMatrix &x) const;

    /// Loss for a cached forward pass. Throws Error("empty_batch") when
    /// every head is fully masked.
    LossValue loss(const ForwardCache &cache, const HeadTargets &targets, std::span<const double> task_weights,
                   double weight_decay) const;

    /// Loss plus analytic gradient of the total with respect to params().
    LossValue loss_and_gradients(const ForwardCache &cache, const HeadTargets &targets,
                                 std::span<const double> task_weights, double weight_decay,
                                 ParamVector &gradient) const;

private:
    struct Layer {
        std::size_t w = 0, b = 0, in = 0, out = 0;
    };
    struct Head {
        std::size_t gain = 0, bias = 0, w = 0, b = 0, classes = 0;
    };

    std::size_t add_tensor(std::string name, std::size_t rows, std::size_t cols);

    NetworkShape shape_;
    ParamVector params_;
    std::vector<TensorInfo> tensors_;
    std::vector<Layer> layers_;
    std::vector<Head> head_layout_;
};

inline constexpr double kLayerNormEpsilon = 1e-5;

} // namespace mobdemo
