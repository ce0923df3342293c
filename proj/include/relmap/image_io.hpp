#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "relmap/tensor.hpp"

namespace relmap {

/// 8-bit RGB image, row-major, interleaved channels.
struct Image8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
        return pixels[(y * width + x) * 3 + c];
    }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }

    bool operator==(const Image8&) const = default;
};

/// Reads a PPM (P6, maxval 255) or PNG (converted to 8-bit RGB) by content.
Image8 read_image(const std::filesystem::path& path);

/// PPM P6 is the bit-exactness reference format: identical images produce
/// identical bytes.
void write_ppm(const Image8& img, const std::filesystem::path& path);
void write_png(const Image8& img, const std::filesystem::path& path);

/// Writes by extension: .ppm or .png.
void write_image(const Image8& img, const std::filesystem::path& path);

/// u8 [0, 255] -> double [0, 1], H x W x 3.
Tensor image_to_hwc(const Image8& img);

/// double [0, 1] (clamped, rounded) -> u8, from an H x W x 3 tensor.
Image8 hwc_to_image(const Tensor& t);

/// Layout conversions between image space (H x W x 3) and the network input
/// convention (3 x H x W).
Tensor hwc_to_chw(const Tensor& t);
Tensor chw_to_hwc(const Tensor& t);

}  // namespace relmap
