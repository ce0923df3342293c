#pragma once

#include "relmap/image_io.hpp"
#include "relmap/tensor.hpp"

namespace relmap {

/// Rendering of a relevance tensor as a diverging-colormap image.
///
/// Channel relevances are pooled by summation (a pixel's relevance is the sum
/// over its color channels, preserving the pixel-level total). Values are
/// normalized to [-1, 1] by the max absolute value (or a fixed scale for
/// cross-image comparability) and mapped through a piecewise-linear RGB
/// table: -1 -> blue (0,0,255), 0 -> white (255,255,255), +1 -> red
/// (255,0,0), interpolated componentwise and rounded half away from zero.
struct RenderConfig {
    enum class Normalization { MaxAbs, Fixed };
    Normalization normalization = Normalization::MaxAbs;
    double fixed_scale = 1.0;  // used when normalization == Fixed; must be > 0

    void validate() const;
};

/// Maps a normalized relevance in [-1, 1] to its RGB color.
void diverging_color(double t, std::uint8_t rgb[3]);

/// rel may be C x H x W (channels pooled by sum), H x W, or flat with an
/// H x W interpretation given by the caller via reshaping beforehand.
/// An all-zero map renders all-neutral.
Image8 render(const Tensor& rel, const RenderConfig& cfg);

}  // namespace relmap
