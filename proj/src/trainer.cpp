#include "relmap/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relmap/rng.hpp"

namespace relmap {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("train: learning_rate must be > 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("train: momentum must be in [0, 1)");
    }
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
}

double rescale_score(double raw) {
    if (!(raw >= 1.0 && raw <= 9.0)) {
        throw std::invalid_argument("score " + std::to_string(raw) + " outside [1, 9]");
    }
    return (raw - 1.0) / 8.0;
}

double unrescale_score(double s) { return 1.0 + 8.0 * s; }

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        std::uint64_t seed) {
    if (ds.size() < 2) throw std::invalid_argument("split_dataset: need at least 2 items");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    shuffle(order, rng);

    const std::size_t train_n = (ds.size() + 1) / 2;
    LabeledDataset train, test;
    train.items.reserve(train_n);
    test.items.reserve(ds.size() - train_n);
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < train_n ? train : test).items.push_back(ds.items[order[k]]);
    }
    return {std::move(train), std::move(test)};
}

std::vector<std::pair<std::size_t, int>> trainable_slots(const Network& net, TrainMode mode) {
    std::vector<std::pair<std::size_t, int>> slots;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const bool dense = std::holds_alternative<DenseLayer>(net.layers[l]);
        const bool conv = std::holds_alternative<Conv2DLayer>(net.layers[l]);
        if (dense || (conv && mode == TrainMode::Full)) {
            slots.emplace_back(l, 0);
            slots.emplace_back(l, 1);
        }
    }
    return slots;
}

namespace {

const Tensor& slot_tensor(const Network& net, std::pair<std::size_t, int> slot) {
    const LayerSpec& layer = net.layers[slot.first];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        return slot.second == 0 ? d->weight : d->bias;
    }
    const auto& c = std::get<Conv2DLayer>(layer);
    return slot.second == 0 ? c.kernel : c.bias;
}

Tensor& slot_tensor(Network& net, std::pair<std::size_t, int> slot) {
    return const_cast<Tensor&>(slot_tensor(std::as_const(net), slot));
}

const Tensor& grad_tensor(const NetworkGrads& grads, std::pair<std::size_t, int> slot) {
    const LayerGrads& lg = grads.layers[slot.first];
    return slot.second == 0 ? lg.weight : lg.bias;
}

}  // namespace

std::vector<Tensor> get_params(const Network& net,
                               const std::vector<std::pair<std::size_t, int>>& slots) {
    std::vector<Tensor> params;
    params.reserve(slots.size());
    for (auto slot : slots) params.push_back(slot_tensor(net, slot));
    return params;
}

void set_params(Network& net, const std::vector<std::pair<std::size_t, int>>& slots,
                const std::vector<Tensor>& params) {
    for (std::size_t k = 0; k < slots.size(); ++k) slot_tensor(net, slots[k]) = params[k];
}

NesterovState sgd_nesterov_step(const std::vector<Tensor>& params,
                                const std::vector<Tensor>& velocity, const GradFn& grad_fn,
                                double learning_rate, double momentum) {
    if (params.size() != velocity.size()) {
        throw std::invalid_argument("sgd_nesterov_step: params/velocity size mismatch");
    }
    std::vector<Tensor> lookahead = params;
    for (std::size_t k = 0; k < lookahead.size(); ++k) {
        if (!lookahead[k].same_shape(velocity[k])) {
            throw std::invalid_argument("sgd_nesterov_step: params/velocity shape mismatch");
        }
        for (std::size_t i = 0; i < lookahead[k].size(); ++i) {
            lookahead[k][i] += momentum * velocity[k][i];
        }
    }

    const std::vector<Tensor> grad = grad_fn(lookahead);
    if (grad.size() != params.size()) {
        throw std::invalid_argument("sgd_nesterov_step: grad_fn returned wrong arity");
    }

    NesterovState next{params, velocity};
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double v = momentum * velocity[k][i] - learning_rate * grad[k][i];
            next.velocity[k][i] = v;
            next.params[k][i] += v;
        }
    }
    return next;
}

double mae(const Network& net, const LabeledDataset& ds) {
    if (ds.empty()) throw std::invalid_argument("mae: empty dataset");
    double acc = 0.0;
    for (const auto& item : ds.items) {
        const ActivationTrace trace = forward(net, item.image);
        const double pred = trace.final_output()[0];
        acc += std::abs(pred - rescale_score(item.raw_score));
    }
    return (acc / static_cast<double>(ds.size())) * 8.0;
}

TrainResult train(const Network& net, const LabeledDataset& train_ds,
                  const LabeledDataset* test_ds, const TrainConfig& cfg) {
    cfg.validate();
    net.validate();
    if (train_ds.empty()) throw std::invalid_argument("train: empty dataset");
    for (const auto& item : train_ds.items) rescale_score(item.raw_score);  // range check

    TrainResult result{net, {}};
    if (cfg.epochs == 0) return result;

    const auto slots = trainable_slots(result.net, cfg.mode);
    if (slots.empty()) throw std::invalid_argument("train: no trainable parameters");

    std::vector<Tensor> params = get_params(result.net, slots);
    std::vector<Tensor> velocity;
    velocity.reserve(params.size());
    for (const Tensor& p : params) velocity.emplace_back(p.shape());

    // Scratch network used to evaluate gradients at lookahead points.
    Network scratch = result.net;

    std::vector<std::size_t> order(train_ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());

            const GradFn batch_grad = [&](const std::vector<Tensor>& at) {
                set_params(scratch, slots, at);
                NetworkGrads grads = zero_grads(scratch);
                const double inv_n = 1.0 / static_cast<double>(end - start);
                for (std::size_t k = start; k < end; ++k) {
                    const auto& item = train_ds.items[order[k]];
                    const ActivationTrace trace = forward(scratch, item.image);
                    const double pred = trace.final_output()[0];
                    Tensor grad_out(trace.final_output().shape());
                    grad_out[0] = 2.0 * (pred - rescale_score(item.raw_score)) * inv_n;
                    NetworkGrads sample = backprop(scratch, trace, grad_out);
                    grads.add_scaled(sample, 1.0);
                }
                std::vector<Tensor> out;
                out.reserve(slots.size());
                for (auto slot : slots) out.push_back(grad_tensor(grads, slot));
                if (!grads.all_finite()) {
                    throw std::runtime_error("train: non-finite gradient in epoch " +
                                             std::to_string(epoch));
                }
                return out;
            };

            NesterovState next =
                sgd_nesterov_step(params, velocity, batch_grad, cfg.learning_rate, cfg.momentum);
            params = std::move(next.params);
            velocity = std::move(next.velocity);

            for (const Tensor& p : params) {
                if (!p.all_finite()) {
                    throw std::runtime_error("train: diverged (non-finite parameters) in epoch " +
                                             std::to_string(epoch));
                }
            }
        }
        set_params(result.net, slots, params);

        const double train_mae = mae(result.net, train_ds);
        const double test_mae = test_ds ? mae(result.net, *test_ds) : train_mae;
        result.curve.rows.push_back({epoch, train_mae, test_mae});
    }
    return result;
}

}  // namespace relmap
