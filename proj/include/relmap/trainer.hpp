#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "relmap/gradients.hpp"
#include "relmap/network.hpp"

namespace relmap {

/// DenseOnly retrains the fully connected layers and leaves everything else
/// bit-identical; Full retrains dense and convolution parameters.
enum class TrainMode { DenseOnly, Full };

/// Training hyperparameters. The loss is squared error on the rescaled
/// score; MAE (in 1-9 units) is the evaluation metric.
struct TrainConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    TrainMode mode = TrainMode::DenseOnly;
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One labelled example: a network-input tensor and its raw 1-9 rating.
struct LabeledSample {
    Tensor image;
    double raw_score = 1.0;
};

struct LabeledDataset {
    std::vector<LabeledSample> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

struct LearningCurve {
    struct Row {
        std::size_t epoch;  // 1-based
        double train_mae;   // 1-9 units
        double test_mae;    // 1-9 units
    };
    std::vector<Row> rows;
};

/// Maps a raw 1-9 rating onto [0, 1]: (s - 1) / 8. Throws on out-of-range.
double rescale_score(double raw);

/// Inverse of rescale_score, for reporting in 1-9 units.
double unrescale_score(double s);

/// Seeded uniform shuffle, then halves of ceil(n/2) and floor(n/2) items.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        std::uint64_t seed);

/// One Nesterov momentum step in lookahead form:
///   g  = grad_fn(params + momentum * velocity)
///   v' = momentum * velocity - learning_rate * g
///   p' = params + v'
/// grad_fn must evaluate the loss gradient at an arbitrary parameter point.
struct NesterovState {
    std::vector<Tensor> params;
    std::vector<Tensor> velocity;
};
using GradFn = std::function<std::vector<Tensor>(const std::vector<Tensor>&)>;
NesterovState sgd_nesterov_step(const std::vector<Tensor>& params,
                                const std::vector<Tensor>& velocity, const GradFn& grad_fn,
                                double learning_rate, double momentum);

struct TrainResult {
    Network net;
    LearningCurve curve;
};

/// Retrains net on train_ds with mini-batch SGD + Nesterov momentum. The
/// batch gradient is the mean over the batch. test_ds may be null (the curve
/// then repeats the training MAE). Non-finite gradients abort with the
/// offending epoch index. Deterministic for a fixed seed and dataset.
TrainResult train(const Network& net, const LabeledDataset& train_ds,
                  const LabeledDataset* test_ds, const TrainConfig& cfg);

/// Mean absolute error of output neuron 0 against the rescaled labels,
/// reported on the human 1-9 scale.
double mae(const Network& net, const LabeledDataset& ds);

/// Parameter tensors covered by a training mode, as (layer index, slot)
/// pairs; slot 0 is the weight/kernel, slot 1 the bias.
std::vector<std::pair<std::size_t, int>> trainable_slots(const Network& net, TrainMode mode);
std::vector<Tensor> get_params(const Network& net,
                               const std::vector<std::pair<std::size_t, int>>& slots);
void set_params(Network& net, const std::vector<std::pair<std::size_t, int>>& slots,
                const std::vector<Tensor>& params);

}  // namespace relmap
