#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "relmap/tensor.hpp"

namespace relmap {

/// Fully connected layer. weight is [out, in], bias is [out].
struct DenseLayer {
    Tensor weight;
    Tensor bias;

    std::size_t out_features() const { return weight.extent(0); }
    std::size_t in_features() const { return weight.extent(1); }
};

/// 2-D convolution over [C, H, W] input. kernel is [outC, inC, kH, kW], bias is [outC].
/// Square stride and zero padding.
struct Conv2DLayer {
    Tensor kernel;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t pad = 0;

    std::size_t out_channels() const { return kernel.extent(0); }
    std::size_t in_channels() const { return kernel.extent(1); }
    std::size_t kernel_h() const { return kernel.extent(2); }
    std::size_t kernel_w() const { return kernel.extent(3); }
};

/// Max pooling over [C, H, W] input, window kH x kW, no padding.
struct MaxPool2DLayer {
    std::size_t window_h = 2;
    std::size_t window_w = 2;
    std::size_t stride = 2;
};

struct ReLULayer {};

/// Row-major flatten to a rank-1 tensor.
struct FlattenLayer {};

using LayerSpec = std::variant<DenseLayer, Conv2DLayer, MaxPool2DLayer, ReLULayer, FlattenLayer>;

const char* layer_kind_name(const LayerSpec& layer);

/// Internal consistency of one layer (weight/bias shapes, stride >= 1). Throws on violation.
void validate_layer(const LayerSpec& layer);

/// Output shape produced by `layer` for the given input shape.
/// Conv2D/MaxPool2D spatial extent: floor((H + 2*pad - kH) / stride) + 1.
/// Throws std::invalid_argument when the input shape is not consumable.
std::vector<std::size_t> layer_output_shape(const LayerSpec& layer,
                                            const std::vector<std::size_t>& input_shape);

bool layer_has_params(const LayerSpec& layer);

}  // namespace relmap
