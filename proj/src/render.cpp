#include "relmap/render.hpp"

#include <cmath>
#include <stdexcept>

namespace relmap {

void RenderConfig::validate() const {
    if (normalization == Normalization::Fixed && !(fixed_scale > 0.0)) {
        throw std::invalid_argument("render: fixed scale must be > 0");
    }
}

void diverging_color(double t, std::uint8_t rgb[3]) {
    t = std::clamp(t, -1.0, 1.0);
    const auto level = [](double x) {
        return static_cast<std::uint8_t>(std::lround(255.0 * x));
    };
    if (t < 0.0) {
        rgb[0] = level(1.0 + t);  // fade red and green toward blue
        rgb[1] = level(1.0 + t);
        rgb[2] = 255;
    } else {
        rgb[0] = 255;
        rgb[1] = level(1.0 - t);
        rgb[2] = level(1.0 - t);
    }
}

namespace {

/// Sum over the channel axis of a C x H x W tensor; rank-2 passes through.
Tensor pool_channels(const Tensor& rel) {
    if (rel.rank() == 2) return rel;
    if (rel.rank() != 3) {
        throw std::invalid_argument("render: want a C x H x W or H x W tensor, got " +
                                    shape_to_string(rel.shape()));
    }
    const std::size_t c = rel.extent(0), h = rel.extent(1), w = rel.extent(2);
    Tensor pooled({h, w});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                pooled.at2(y, x) += rel.at3(ch, y, x);
            }
        }
    }
    return pooled;
}

}  // namespace

Image8 render(const Tensor& rel, const RenderConfig& cfg) {
    cfg.validate();
    const Tensor pooled = pool_channels(rel);

    double scale = cfg.fixed_scale;
    if (cfg.normalization == RenderConfig::Normalization::MaxAbs) {
        scale = 0.0;
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            scale = std::max(scale, std::abs(pooled[i]));
        }
    }

    Image8 img;
    img.height = pooled.extent(0);
    img.width = pooled.extent(1);
    img.pixels.resize(pooled.size() * 3);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        const double t = scale > 0.0 ? pooled[i] / scale : 0.0;
        diverging_color(t, img.pixels.data() + i * 3);
    }
    return img;
}

}  // namespace relmap
