#pragma once

#include <cstddef>
#include <vector>

#include "relmap/layers.hpp"
#include "relmap/tensor.hpp"

namespace relmap {

/// Ordered layer stack with a fixed input shape. Immutable once validated;
/// forward() is a pure function, so one Network can serve many threads.
struct Network {
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> input_shape;

    /// Validates every layer and the whole shape chain.
    /// Throws std::invalid_argument naming the offending layer index.
    void validate() const;

    /// Shape of the final output (runs the shape chain).
    std::vector<std::size_t> output_shape() const;

    /// Per-layer input shapes plus the final output shape (layers.size() + 1 entries).
    std::vector<std::vector<std::size_t>> shape_chain() const;
};

/// Activations recorded during one forward pass: one (input, output) pair per layer.
/// Adjacent entries chain: entries[l].output == entries[l + 1].input.
struct ActivationTrace {
    struct Entry {
        Tensor input;
        Tensor output;
    };
    std::vector<Entry> entries;

    const Tensor& final_output() const { return entries.back().output; }
};

/// Deterministic forward pass recording all activations.
/// Throws std::invalid_argument on input shape mismatch and std::runtime_error
/// (naming the layer index) when a non-finite intermediate appears.
ActivationTrace forward(const Network& net, const Tensor& x);

/// Forward application of a single layer. Exposed for the trainer and tests.
Tensor apply_layer(const LayerSpec& layer, const Tensor& input);

/// Argmax over a pooling window with ties broken by lowest flat index.
/// Shared by forward, backprop and the LRP pass so the winner always agrees.
std::size_t maxpool_argmax(const Tensor& input, std::size_t channel, std::size_t y0,
                           std::size_t x0, std::size_t window_h, std::size_t window_w);

}  // namespace relmap
