#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "relmap/lrp.hpp"
#include "relmap/network.hpp"
#include "relmap/render.hpp"

namespace relmap {

/// Axis-aligned occlusion region in pixel coordinates.
/// Rectangle coords are {x, y, w, h}: pixels with x <= px < x + w and
/// y <= py < y + h. Ellipse coords are {cx, cy, rx, ry}: pixel centers (at
/// integer coordinates) satisfying ((px-cx)/rx)^2 + ((py-cy)/ry)^2 <= 1.
struct Region {
    enum class Shape { Rectangle, Ellipse };
    Shape shape = Shape::Rectangle;
    std::array<double, 4> coords{};

    bool contains(std::size_t px, std::size_t py) const;

    /// Throws std::invalid_argument when the region exceeds a W x H image.
    void validate(std::size_t width, std::size_t height) const;
};

/// A set of regions occluded together with one fill. No fill value means
/// the per-channel mean of the un-occluded image ("skin color" stand-in).
struct OcclusionSpec {
    std::vector<Region> regions;
    std::optional<std::array<double, 3>> fill;  // RGB in [0, 1]
    std::string label;

    void validate(std::size_t width, std::size_t height) const;
};

/// Replaces pixels inside the spec's regions by the fill; everything outside
/// is bit-identical to the input. img is H x W x 3 in [0, 1].
Tensor apply_occlusion(const Tensor& img, const OcclusionSpec& spec);

struct OcclusionReport {
    double baseline_score = 0.0;
    struct Row {
        std::string label;
        double occluded_score = 0.0;
        double delta = 0.0;               // occluded - baseline
        double relevance_fraction = 0.0;  // share of total positive relevance inside the regions
    };
    std::vector<Row> rows;
};

struct OcclusionSweepResult {
    OcclusionReport report;
    Image8 baseline_heatmap;
    std::vector<Image8> occluded_heatmaps;
    std::vector<Image8> occluded_images;
};

/// For each spec: occlude, re-score, and record the score delta next to the
/// share of baseline positive relevance inside the occluded regions; also
/// re-renders the heatmap of every occluded input.
OcclusionSweepResult occlusion_sweep(const Network& net, const Tensor& img_hwc,
                                     const std::vector<OcclusionSpec>& specs,
                                     const LrpConfig& lrp_cfg,
                                     const RenderConfig& render_cfg = {});

/// Parses a JSON document: a list of {label?, regions: [{shape, coords}...],
/// fill?: [r,g,b] | "image-mean"}. Errors name the spec and region index.
std::vector<OcclusionSpec> parse_occlusion_specs(const std::filesystem::path& path);

}  // namespace relmap
