#include "relmap/gradients.hpp"

#include <stdexcept>

namespace relmap {

void NetworkGrads::add_scaled(const NetworkGrads& other, double scale) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < layers[l].weight.size(); ++i) {
            layers[l].weight[i] += scale * other.layers[l].weight[i];
        }
        for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
            layers[l].bias[i] += scale * other.layers[l].bias[i];
        }
    }
}

void NetworkGrads::scale(double factor) {
    for (auto& lg : layers) {
        for (double& v : lg.weight.values()) v *= factor;
        for (double& v : lg.bias.values()) v *= factor;
    }
}

bool NetworkGrads::all_finite() const {
    for (const auto& lg : layers) {
        if (!lg.weight.all_finite() || !lg.bias.all_finite()) return false;
    }
    return true;
}

NetworkGrads zero_grads(const Network& net) {
    NetworkGrads grads;
    grads.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (const auto* d = std::get_if<DenseLayer>(&net.layers[l])) {
            grads.layers[l].weight = Tensor(d->weight.shape());
            grads.layers[l].bias = Tensor(d->bias.shape());
        } else if (const auto* c = std::get_if<Conv2DLayer>(&net.layers[l])) {
            grads.layers[l].weight = Tensor(c->kernel.shape());
            grads.layers[l].bias = Tensor(c->bias.shape());
        }
    }
    return grads;
}

namespace {

Tensor dense_backward(const DenseLayer& d, const Tensor& input, const Tensor& grad_out,
                      LayerGrads* grads) {
    const std::size_t out_n = d.out_features(), in_n = d.in_features();
    Tensor grad_in(input.shape());
    for (std::size_t j = 0; j < out_n; ++j) {
        const double g = grad_out[j];
        const double* w = d.weight.data() + j * in_n;
        for (std::size_t i = 0; i < in_n; ++i) grad_in[i] += w[i] * g;
        if (grads) {
            double* dw = grads->weight.data() + j * in_n;
            for (std::size_t i = 0; i < in_n; ++i) dw[i] += g * input[i];
            grads->bias[j] += g;
        }
    }
    return grad_in;
}

Tensor conv_backward(const Conv2DLayer& c, const Tensor& input, const Tensor& grad_out,
                     LayerGrads* grads) {
    Tensor grad_in(input.shape());
    const std::size_t in_c = c.in_channels(), in_h = input.extent(1), in_w = input.extent(2);
    const std::size_t kh = c.kernel_h(), kw = c.kernel_w();
    const std::size_t oh = grad_out.extent(1), ow = grad_out.extent(2);

    for (std::size_t oc = 0; oc < c.out_channels(); ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double g = grad_out.at3(oc, oy, ox);
                if (grads) grads->bias[oc] += g;
                const std::ptrdiff_t base_y =
                    static_cast<std::ptrdiff_t>(oy * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
                const std::ptrdiff_t base_x =
                    static_cast<std::ptrdiff_t>(ox * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
                for (std::size_t ic = 0; ic < in_c; ++ic) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const std::ptrdiff_t iy = base_y + static_cast<std::ptrdiff_t>(ky);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const std::ptrdiff_t ix = base_x + static_cast<std::ptrdiff_t>(kx);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
                            const std::size_t i = input.offset3(ic, static_cast<std::size_t>(iy),
                                                                static_cast<std::size_t>(ix));
                            grad_in[i] += c.kernel.at4(oc, ic, ky, kx) * g;
                            if (grads) grads->weight.at4(oc, ic, ky, kx) += g * input[i];
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

Tensor pool_backward(const MaxPool2DLayer& p, const Tensor& input, const Tensor& grad_out) {
    Tensor grad_in(input.shape());
    for (std::size_t ch = 0; ch < grad_out.extent(0); ++ch) {
        for (std::size_t oy = 0; oy < grad_out.extent(1); ++oy) {
            for (std::size_t ox = 0; ox < grad_out.extent(2); ++ox) {
                const std::size_t winner =
                    maxpool_argmax(input, ch, oy * p.stride, ox * p.stride, p.window_h, p.window_w);
                grad_in[winner] += grad_out.at3(ch, oy, ox);
            }
        }
    }
    return grad_in;
}

}  // namespace

Tensor backprop_layer(const LayerSpec& layer, const Tensor& input, const Tensor& grad_out,
                      LayerGrads* grads) {
    struct Visitor {
        const Tensor& input;
        const Tensor& grad_out;
        LayerGrads* grads;

        Tensor operator()(const DenseLayer& d) const {
            return dense_backward(d, input, grad_out, grads);
        }
        Tensor operator()(const Conv2DLayer& c) const {
            return conv_backward(c, input, grad_out, grads);
        }
        Tensor operator()(const MaxPool2DLayer& p) const {
            return pool_backward(p, input, grad_out);
        }
        Tensor operator()(const ReLULayer&) const {
            Tensor grad_in = grad_out;
            for (std::size_t i = 0; i < grad_in.size(); ++i) {
                if (!(input[i] > 0.0)) grad_in[i] = 0.0;
            }
            return grad_in;
        }
        Tensor operator()(const FlattenLayer&) const { return grad_out.reshaped(input.shape()); }
    };
    return std::visit(Visitor{input, grad_out, grads}, layer);
}

NetworkGrads backprop(const Network& net, const ActivationTrace& trace, const Tensor& grad_output,
                      Tensor* grad_input) {
    if (trace.entries.size() != net.layers.size()) {
        throw std::invalid_argument("backprop: trace does not match network");
    }
    NetworkGrads grads = zero_grads(net);
    Tensor g = grad_output;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        g = backprop_layer(net.layers[l], trace.entries[l].input, g,
                           layer_has_params(net.layers[l]) ? &grads.layers[l] : nullptr);
    }
    if (grad_input) *grad_input = std::move(g);
    return grads;
}

}  // namespace relmap
