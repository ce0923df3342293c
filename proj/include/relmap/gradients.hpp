#pragma once

#include "relmap/network.hpp"

namespace relmap {

/// Parameter gradients of one layer; tensors are empty for layers without
/// parameters. Shapes match the layer's weight/bias tensors.
struct LayerGrads {
    Tensor weight;
    Tensor bias;
};

/// Gradients for a whole network, aligned with net.layers.
struct NetworkGrads {
    std::vector<LayerGrads> layers;

    void add_scaled(const NetworkGrads& other, double scale);
    void scale(double factor);
    bool all_finite() const;
};

NetworkGrads zero_grads(const Network& net);

/// Backward pass of one layer: maps dL/d(output) to dL/d(input) and, when
/// grads is non-null, accumulates dL/d(params) into it.
/// ReLU uses the subgradient 0 at exactly-zero inputs; MaxPool routes to the
/// same argmax the forward pass picked (lowest flat index on ties).
Tensor backprop_layer(const LayerSpec& layer, const Tensor& input, const Tensor& grad_out,
                      LayerGrads* grads);

/// Full backward pass over a recorded trace; returns parameter gradients and,
/// when grad_input is non-null, also dL/d(network input).
NetworkGrads backprop(const Network& net, const ActivationTrace& trace, const Tensor& grad_output,
                      Tensor* grad_input = nullptr);

}  // namespace relmap
