#include "relmap/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relmap {

void Network::validate() const {
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    if (input_shape.empty()) throw std::invalid_argument("network input_shape is empty");

    std::vector<std::size_t> shape = input_shape;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        try {
            validate_layer(layers[l]);
            shape = layer_output_shape(layers[l], shape);
        } catch (const std::exception& e) {
            throw std::invalid_argument("layer " + std::to_string(l) + " (" +
                                        layer_kind_name(layers[l]) + "): " + e.what());
        }
    }
}

std::vector<std::size_t> Network::output_shape() const {
    std::vector<std::size_t> shape = input_shape;
    for (const auto& layer : layers) shape = layer_output_shape(layer, shape);
    return shape;
}

std::vector<std::vector<std::size_t>> Network::shape_chain() const {
    std::vector<std::vector<std::size_t>> chain;
    chain.push_back(input_shape);
    for (const auto& layer : layers) chain.push_back(layer_output_shape(layer, chain.back()));
    return chain;
}

std::size_t maxpool_argmax(const Tensor& input, std::size_t channel, std::size_t y0,
                           std::size_t x0, std::size_t window_h, std::size_t window_w) {
    std::size_t best = input.offset3(channel, y0, x0);
    double best_v = input[best];
    for (std::size_t ky = 0; ky < window_h; ++ky) {
        for (std::size_t kx = 0; kx < window_w; ++kx) {
            const std::size_t idx = input.offset3(channel, y0 + ky, x0 + kx);
            if (input[idx] > best_v) {
                best_v = input[idx];
                best = idx;
            }
        }
    }
    return best;
}

namespace {

Tensor dense_forward(const DenseLayer& d, const Tensor& in) {
    const std::size_t out_n = d.out_features();
    const std::size_t in_n = d.in_features();
    Tensor out({out_n});
    for (std::size_t j = 0; j < out_n; ++j) {
        double acc = 0.0;
        const double* w = d.weight.data() + j * in_n;
        for (std::size_t i = 0; i < in_n; ++i) acc += w[i] * in[i];
        acc += d.bias[j];
        out[j] = acc;
    }
    return out;
}

Tensor conv_forward(const Conv2DLayer& c, const Tensor& in) {
    const auto out_shape = layer_output_shape(LayerSpec{c}, in.shape());
    Tensor out(out_shape);
    const std::size_t in_c = c.in_channels(), in_h = in.extent(1), in_w = in.extent(2);
    const std::size_t kh = c.kernel_h(), kw = c.kernel_w();
    const std::size_t oh = out_shape[1], ow = out_shape[2];

    for (std::size_t oc = 0; oc < c.out_channels(); ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                // Top-left of the receptive field in padded coordinates.
                const std::ptrdiff_t base_y =
                    static_cast<std::ptrdiff_t>(oy * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
                const std::ptrdiff_t base_x =
                    static_cast<std::ptrdiff_t>(ox * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
                double acc = 0.0;
                for (std::size_t ic = 0; ic < in_c; ++ic) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy = base_y + static_cast<std::ptrdiff_t>(ky);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix = base_x + static_cast<std::ptrdiff_t>(kx);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
                            acc += c.kernel.at4(oc, ic, ky, kx) *
                                   in.at3(ic, static_cast<std::size_t>(iy),
                                          static_cast<std::size_t>(ix));
                        }
                    }
                }
                acc += c.bias[oc];
                out.at3(oc, oy, ox) = acc;
            }
        }
    }
    return out;
}

Tensor maxpool_forward(const MaxPool2DLayer& p, const Tensor& in) {
    const auto out_shape = layer_output_shape(LayerSpec{p}, in.shape());
    Tensor out(out_shape);
    for (std::size_t ch = 0; ch < out_shape[0]; ++ch) {
        for (std::size_t oy = 0; oy < out_shape[1]; ++oy) {
            for (std::size_t ox = 0; ox < out_shape[2]; ++ox) {
                const std::size_t winner =
                    maxpool_argmax(in, ch, oy * p.stride, ox * p.stride, p.window_h, p.window_w);
                out.at3(ch, oy, ox) = in[winner];
            }
        }
    }
    return out;
}

}  // namespace

Tensor apply_layer(const LayerSpec& layer, const Tensor& input) {
    struct Visitor {
        const Tensor& in;
        Tensor operator()(const DenseLayer& d) const { return dense_forward(d, in); }
        Tensor operator()(const Conv2DLayer& c) const { return conv_forward(c, in); }
        Tensor operator()(const MaxPool2DLayer& p) const { return maxpool_forward(p, in); }
        Tensor operator()(const ReLULayer&) const {
            Tensor out = in;
            for (double& v : out.values()) v = std::max(0.0, v);
            return out;
        }
        Tensor operator()(const FlattenLayer&) const {
            return in.reshaped({shape_numel(in.shape())});
        }
    };
    layer_output_shape(layer, input.shape());  // shape check before touching data
    return std::visit(Visitor{input}, layer);
}

ActivationTrace forward(const Network& net, const Tensor& x) {
    if (x.shape() != net.input_shape) {
        throw std::invalid_argument("forward: input shape " + shape_to_string(x.shape()) +
                                    " does not match network input_shape " +
                                    shape_to_string(net.input_shape));
    }
    if (!x.all_finite()) throw std::runtime_error("forward: non-finite input");

    ActivationTrace trace;
    trace.entries.reserve(net.layers.size());
    Tensor current = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Tensor out;
        try {
            out = apply_layer(net.layers[l], current);
        } catch (const std::exception& e) {
            throw std::invalid_argument("forward: layer " + std::to_string(l) + " (" +
                                        layer_kind_name(net.layers[l]) + "): " + e.what());
        }
        if (!out.all_finite()) {
            throw std::runtime_error("forward: non-finite activation after layer " +
                                     std::to_string(l) + " (" + layer_kind_name(net.layers[l]) +
                                     ")");
        }
        trace.entries.push_back({std::move(current), out});
        current = std::move(out);
    }
    return trace;
}

}  // namespace relmap
