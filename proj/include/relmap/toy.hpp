#pragma once

#include <cstdint>

#include "relmap/image_io.hpp"
#include "relmap/network.hpp"
#include "relmap/trainer.hpp"

namespace relmap {

/// Self-contained synthetic benchmark: 16x16 RGB images of a bright blob on
/// a dark background, labelled by mean brightness mapped onto the 1-9 scale.
/// Everything is seeded so the whole pipeline runs without external data.
struct ToyOptions {
    std::size_t samples = 200;
    std::size_t image_size = 16;
    std::uint64_t seed = 0;
};

struct ToySample {
    Image8 image;
    double raw_score;  // 1 + 8 * mean brightness of the quantized image
};

std::vector<ToySample> make_toy_samples(const ToyOptions& opts);

/// Network-input form of the samples (3 x H x W tensors in [0, 1]).
LabeledDataset to_dataset(const std::vector<ToySample>& samples);

/// Small conv stack with a dense regression head, seeded random weights
/// (uniform in +-sqrt(6 / (fan_in + fan_out))). Stands in for a pretrained
/// base model.
Network make_toy_base_model(std::uint64_t seed, std::size_t image_size = 16);

}  // namespace relmap
