#pragma once

// Seeded generator of small random networks and inputs for the conservation,
// oracle and gradient suites. Conservation of the alpha-beta rule is only
// defined where every live column has both positive and negative mass (a
// vanished side drops its share by convention), so the generator also offers
// a conditioning check, built on explicit z matrices rather than the engine,
// that rejects degenerate instances and reseeds deterministically.

#include <optional>
#include <random>

#include "relmap/network.hpp"
#include "relmap/rng.hpp"
#include "support/lrp_oracle.hpp"

namespace testnets {

using namespace relmap;

struct Instance {
    Network net;
    Tensor input;
};

// Weight values bounded away from zero keep column sums well conditioned.
inline double random_weight(std::mt19937_64& rng) {
    const double mag = uniform_range(rng, 0.1, 1.0);
    return rng() & 1 ? mag : -mag;
}

inline DenseLayer random_dense(std::size_t out, std::size_t in, bool bias_free,
                               std::mt19937_64& rng) {
    DenseLayer d{Tensor({out, in}), Tensor({out})};
    for (double& v : d.weight.values()) v = random_weight(rng);
    if (!bias_free) {
        for (double& v : d.bias.values()) v = uniform_range(rng, -0.5, 0.5);
    }
    return d;
}

inline Conv2DLayer random_conv(std::size_t oc, std::size_t ic, std::size_t k, std::size_t stride,
                               std::size_t pad, bool bias_free, std::mt19937_64& rng) {
    Conv2DLayer c{Tensor({oc, ic, k, k}), Tensor({oc}), stride, pad};
    for (double& v : c.kernel.values()) v = random_weight(rng);
    if (!bias_free) {
        for (double& v : c.bias.values()) v = uniform_range(rng, -0.5, 0.5);
    }
    return c;
}

// One of several 2-5 layer stacks mixing every layer kind across the suite.
inline Network random_network(std::uint64_t seed, bool bias_free) {
    std::mt19937_64 rng(seed);
    Network net;
    switch (seed % 5) {
        case 0: {  // conv -> relu -> pool -> flatten -> dense
            const std::size_t h = 8 + uniform_index(rng, 4);
            net.input_shape = {2, h, h};
            net.layers.push_back(random_conv(3, 2, 3, 1, 1, bias_free, rng));
            net.layers.push_back(ReLULayer{});
            net.layers.push_back(MaxPool2DLayer{2, 2, 2});
            net.layers.push_back(FlattenLayer{});
            const std::size_t flat = 3 * (h / 2) * (h / 2);
            net.layers.push_back(random_dense(2, flat, bias_free, rng));
            break;
        }
        case 1: {  // conv -> conv -> flatten -> dense
            net.input_shape = {1, 9, 9};
            net.layers.push_back(random_conv(4, 1, 3, 2, 0, bias_free, rng));
            net.layers.push_back(random_conv(3, 4, 2, 1, 0, bias_free, rng));
            net.layers.push_back(FlattenLayer{});
            net.layers.push_back(random_dense(1, 3 * 3 * 3, bias_free, rng));
            break;
        }
        case 2: {  // flatten -> dense -> relu -> dense
            net.input_shape = {3, 4, 4};
            net.layers.push_back(FlattenLayer{});
            net.layers.push_back(random_dense(24, 48, bias_free, rng));
            net.layers.push_back(ReLULayer{});
            net.layers.push_back(random_dense(3, 24, bias_free, rng));
            break;
        }
        case 3: {  // dense -> relu -> dense
            const std::size_t mid = 8 + uniform_index(rng, 40);
            net.input_shape = {20};
            net.layers.push_back(random_dense(mid, 20, bias_free, rng));
            net.layers.push_back(ReLULayer{});
            net.layers.push_back(random_dense(2, mid, bias_free, rng));
            break;
        }
        default: {  // conv -> pool -> flatten -> dense
            net.input_shape = {2, 10, 10};
            net.layers.push_back(random_conv(4, 2, 3, 1, 0, bias_free, rng));
            net.layers.push_back(MaxPool2DLayer{2, 2, 2});
            net.layers.push_back(FlattenLayer{});
            net.layers.push_back(random_dense(2, 4 * 4 * 4, bias_free, rng));
            break;
        }
    }
    net.validate();
    return net;
}

inline Tensor random_input(const Network& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    Tensor x(net.input_shape);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform_range(rng, 0.05, 1.0);
    return x;
}

// Structural conditioning, independent of the relevance engine: every linear
// column that carries any weighted activation must have both signs present
// with mass above `margin` (so neither rule meets a vanishing denominator on
// a live path), and |f(x)| must clear score_floor.
inline bool well_conditioned(const Network& net, const Tensor& input, double margin = 1e-3,
                             double score_floor = 1e-2) {
    const ActivationTrace trace = forward(net, input);
    for (double v : trace.final_output().values()) {
        if (std::abs(v) < score_floor) return false;
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<std::vector<double>> z;
        if (const auto* d = std::get_if<DenseLayer>(&net.layers[l])) {
            z = oracle::dense_z_matrix(*d, trace.entries[l].input, false);
        } else if (const auto* c = std::get_if<Conv2DLayer>(&net.layers[l])) {
            z = oracle::conv_z_matrix(*c, trace.entries[l].input,
                                      trace.entries[l].output.shape(), false);
        } else {
            continue;
        }
        const std::size_t upper = z.empty() ? 0 : z[0].size();
        for (std::size_t j = 0; j < upper; ++j) {
            double pos = 0.0, neg = 0.0;
            bool any = false;
            for (std::size_t i = 0; i < z.size(); ++i) {
                any |= z[i][j] != 0.0;
                pos += std::max(z[i][j], 0.0);
                neg += std::min(z[i][j], 0.0);
            }
            if (!any) continue;  // dead column, carries no relevance
            if (pos < margin || neg > -margin) return false;
            if (std::abs(pos + neg) < margin) return false;
        }
    }
    return true;
}

// Deterministic generate-and-reject: walks seeds from `seed` until an
// instance passes the conditioning check.
inline Instance conditioned_instance(std::uint64_t seed, bool bias_free) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t s = seed + 1000003ull * attempt;
        Network net = random_network(s, bias_free);
        Tensor x = random_input(net, s);
        if (well_conditioned(net, x)) return {std::move(net), std::move(x)};
    }
}

}  // namespace testnets
