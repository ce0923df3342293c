#include "relmap/layers.hpp"

#include <stdexcept>

namespace relmap {

namespace {

std::size_t conv_extent(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride,
                        const char* what) {
    const std::size_t padded = in + 2 * pad;
    if (padded < k) {
        throw std::invalid_argument(std::string(what) + ": window " + std::to_string(k) +
                                    " exceeds padded input extent " + std::to_string(padded));
    }
    return (padded - k) / stride + 1;
}

void expect_rank(const std::vector<std::size_t>& shape, std::size_t rank, const char* what) {
    if (shape.size() != rank) {
        throw std::invalid_argument(std::string(what) + ": expected rank-" + std::to_string(rank) +
                                    " input, got shape " + shape_to_string(shape));
    }
}

}  // namespace

const char* layer_kind_name(const LayerSpec& layer) {
    struct Visitor {
        const char* operator()(const DenseLayer&) const { return "dense"; }
        const char* operator()(const Conv2DLayer&) const { return "conv2d"; }
        const char* operator()(const MaxPool2DLayer&) const { return "maxpool2d"; }
        const char* operator()(const ReLULayer&) const { return "relu"; }
        const char* operator()(const FlattenLayer&) const { return "flatten"; }
    };
    return std::visit(Visitor{}, layer);
}

void validate_layer(const LayerSpec& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        if (d->weight.rank() != 2) {
            throw std::invalid_argument("dense: weight must be rank-2, got shape " +
                                        shape_to_string(d->weight.shape()));
        }
        if (d->bias.rank() != 1 || d->bias.extent(0) != d->weight.extent(0)) {
            throw std::invalid_argument("dense: bias shape " + shape_to_string(d->bias.shape()) +
                                        " does not match weight rows " +
                                        std::to_string(d->weight.extent(0)));
        }
        if (!d->weight.all_finite() || !d->bias.all_finite()) {
            throw std::invalid_argument("dense: non-finite parameter value");
        }
    } else if (const auto* c = std::get_if<Conv2DLayer>(&layer)) {
        if (c->kernel.rank() != 4) {
            throw std::invalid_argument("conv2d: kernel must be rank-4 [outC, inC, kH, kW], got " +
                                        shape_to_string(c->kernel.shape()));
        }
        if (c->bias.rank() != 1 || c->bias.extent(0) != c->kernel.extent(0)) {
            throw std::invalid_argument("conv2d: bias shape " + shape_to_string(c->bias.shape()) +
                                        " does not match output channels " +
                                        std::to_string(c->kernel.extent(0)));
        }
        if (c->stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
        if (!c->kernel.all_finite() || !c->bias.all_finite()) {
            throw std::invalid_argument("conv2d: non-finite parameter value");
        }
    } else if (const auto* p = std::get_if<MaxPool2DLayer>(&layer)) {
        if (p->window_h < 1 || p->window_w < 1) {
            throw std::invalid_argument("maxpool2d: window extents must be >= 1");
        }
        if (p->stride < 1) throw std::invalid_argument("maxpool2d: stride must be >= 1");
    }
}

std::vector<std::size_t> layer_output_shape(const LayerSpec& layer,
                                            const std::vector<std::size_t>& input_shape) {
    struct Visitor {
        const std::vector<std::size_t>& in;

        std::vector<std::size_t> operator()(const DenseLayer& d) const {
            expect_rank(in, 1, "dense");
            if (in[0] != d.in_features()) {
                throw std::invalid_argument("dense: input length " + std::to_string(in[0]) +
                                            " does not match weight columns " +
                                            std::to_string(d.in_features()));
            }
            return {d.out_features()};
        }
        std::vector<std::size_t> operator()(const Conv2DLayer& c) const {
            expect_rank(in, 3, "conv2d");
            if (in[0] != c.in_channels()) {
                throw std::invalid_argument("conv2d: input channels " + std::to_string(in[0]) +
                                            " do not match kernel channels " +
                                            std::to_string(c.in_channels()));
            }
            const std::size_t oh = conv_extent(in[1], c.pad, c.kernel_h(), c.stride, "conv2d");
            const std::size_t ow = conv_extent(in[2], c.pad, c.kernel_w(), c.stride, "conv2d");
            return {c.out_channels(), oh, ow};
        }
        std::vector<std::size_t> operator()(const MaxPool2DLayer& p) const {
            expect_rank(in, 3, "maxpool2d");
            const std::size_t oh = conv_extent(in[1], 0, p.window_h, p.stride, "maxpool2d");
            const std::size_t ow = conv_extent(in[2], 0, p.window_w, p.stride, "maxpool2d");
            return {in[0], oh, ow};
        }
        std::vector<std::size_t> operator()(const ReLULayer&) const { return in; }
        std::vector<std::size_t> operator()(const FlattenLayer&) const {
            return {shape_numel(in)};
        }
    };
    return std::visit(Visitor{input_shape}, layer);
}

bool layer_has_params(const LayerSpec& layer) {
    return std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2DLayer>(layer);
}

}  // namespace relmap
