#include "relmap/toy.hpp"

#include <cmath>

#include "relmap/rng.hpp"

namespace relmap {

std::vector<ToySample> make_toy_samples(const ToyOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    const std::size_t n = opts.image_size;

    std::vector<ToySample> samples;
    samples.reserve(opts.samples);
    for (std::size_t s = 0; s < opts.samples; ++s) {
        // fixed background so the blob carries the entire score signal
        const double background = 0.15;
        const double cx = uniform_range(rng, 0.2 * n, 0.8 * n);
        const double cy = uniform_range(rng, 0.2 * n, 0.8 * n);
        // compact enough that a quarter-area window can cover most of the mass
        const double sigma = uniform_range(rng, 0.07 * n, 0.16 * n);
        const double amplitude = uniform_range(rng, 0.30, 0.90);
        double tint[3];
        for (double& t : tint) t = uniform_range(rng, 0.85, 1.0);

        Image8 img;
        img.width = n;
        img.height = n;
        img.pixels.resize(n * n * 3);
        double sum = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            for (std::size_t x = 0; x < n; ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                const double bump =
                    amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                for (std::size_t c = 0; c < 3; ++c) {
                    const double v = std::clamp(background + bump * tint[c], 0.0, 1.0);
                    const std::uint8_t q = static_cast<std::uint8_t>(std::lround(v * 255.0));
                    img.at(y, x, c) = q;
                    sum += static_cast<double>(q) / 255.0;
                }
            }
        }
        const double mean = sum / static_cast<double>(n * n * 3);
        samples.push_back({std::move(img), 1.0 + 8.0 * mean});
    }
    return samples;
}

LabeledDataset to_dataset(const std::vector<ToySample>& samples) {
    LabeledDataset ds;
    ds.items.reserve(samples.size());
    for (const ToySample& s : samples) {
        ds.items.push_back({hwc_to_chw(image_to_hwc(s.image)), s.raw_score});
    }
    return ds;
}

namespace {

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform_range(rng, -r, r);
    return t;
}

DenseLayer make_dense(std::size_t out, std::size_t in, std::mt19937_64& rng) {
    return DenseLayer{glorot_uniform({out, in}, in, out, rng), Tensor({out})};
}

Conv2DLayer make_conv(std::size_t oc, std::size_t ic, std::size_t k, std::size_t stride,
                      std::size_t pad, std::mt19937_64& rng) {
    return Conv2DLayer{glorot_uniform({oc, ic, k, k}, ic * k * k, oc * k * k, rng), Tensor({oc}),
                       stride, pad};
}

}  // namespace

Network make_toy_base_model(std::uint64_t seed, std::size_t image_size) {
    std::mt19937_64 rng(seed);
    const std::size_t n = image_size;
    // unpadded convs: a uniform background then excites every spatial
    // position identically, so relevance artifacts cannot pile up at borders
    const std::size_t after_conv1 = n - 2;
    const std::size_t after_pool = (after_conv1 - 2) / 2 + 1;
    const std::size_t after_conv2 = after_pool - 2;
    const std::size_t flat = 12 * after_conv2 * after_conv2;

    Network net;
    net.input_shape = {3, n, n};
    net.layers.push_back(make_conv(6, 3, 3, 1, 0, rng));
    net.layers.push_back(ReLULayer{});
    net.layers.push_back(MaxPool2DLayer{2, 2, 2});
    net.layers.push_back(make_conv(12, 6, 3, 1, 0, rng));
    net.layers.push_back(ReLULayer{});
    net.layers.push_back(FlattenLayer{});
    net.layers.push_back(make_dense(32, flat, rng));
    net.layers.push_back(ReLULayer{});
    net.layers.push_back(make_dense(1, 32, rng));
    net.validate();
    return net;
}

}  // namespace relmap
