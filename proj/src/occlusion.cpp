#include "relmap/occlusion.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace relmap {

using nlohmann::json;

bool Region::contains(std::size_t px, std::size_t py) const {
    const double x = static_cast<double>(px), y = static_cast<double>(py);
    if (shape == Shape::Rectangle) {
        return x >= coords[0] && x < coords[0] + coords[2] && y >= coords[1] &&
               y < coords[1] + coords[3];
    }
    const double dx = (x - coords[0]) / coords[2];
    const double dy = (y - coords[1]) / coords[3];
    return dx * dx + dy * dy <= 1.0;
}

void Region::validate(std::size_t width, std::size_t height) const {
    const double w = static_cast<double>(width), h = static_cast<double>(height);
    for (double c : coords) {
        if (!std::isfinite(c)) throw std::invalid_argument("non-finite region coordinate");
    }
    if (shape == Shape::Rectangle) {
        if (coords[2] < 1.0 || coords[3] < 1.0) {
            throw std::invalid_argument("rectangle extents must be >= 1");
        }
        if (coords[0] < 0.0 || coords[1] < 0.0 || coords[0] + coords[2] > w ||
            coords[1] + coords[3] > h) {
            throw std::invalid_argument("rectangle exceeds image bounds");
        }
    } else {
        if (coords[2] <= 0.0 || coords[3] <= 0.0) {
            throw std::invalid_argument("ellipse axes must be > 0");
        }
        if (coords[0] - coords[2] < 0.0 || coords[0] + coords[2] > w - 1.0 ||
            coords[1] - coords[3] < 0.0 || coords[1] + coords[3] > h - 1.0) {
            throw std::invalid_argument("ellipse exceeds image bounds");
        }
    }
}

void OcclusionSpec::validate(std::size_t width, std::size_t height) const {
    for (std::size_t k = 0; k < regions.size(); ++k) {
        try {
            regions[k].validate(width, height);
        } catch (const std::exception& e) {
            throw std::invalid_argument("region " + std::to_string(k) + ": " + e.what());
        }
    }
    if (fill) {
        for (double c : *fill) {
            if (!(c >= 0.0 && c <= 1.0)) {
                throw std::invalid_argument("fill channel outside [0, 1]");
            }
        }
    }
}

Tensor apply_occlusion(const Tensor& img, const OcclusionSpec& spec) {
    if (img.rank() != 3 || img.extent(2) != 3) {
        throw std::invalid_argument("apply_occlusion: want an H x W x 3 image tensor, got " +
                                    shape_to_string(img.shape()));
    }
    const std::size_t h = img.extent(0), w = img.extent(1);
    spec.validate(w, h);
    if (spec.regions.empty()) return img;

    std::array<double, 3> fill;
    if (spec.fill) {
        fill = *spec.fill;
    } else {
        // per-channel mean of the un-occluded image
        fill = {0.0, 0.0, 0.0};
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t c = 0; c < 3; ++c) fill[c] += img.at3(y, x, c);
            }
        }
        const double n = static_cast<double>(h * w);
        for (double& c : fill) c /= n;
    }

    Tensor out = img;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (const Region& r : spec.regions) {
                if (r.contains(x, y)) {
                    for (std::size_t c = 0; c < 3; ++c) out.at3(y, x, c) = fill[c];
                    break;
                }
            }
        }
    }
    return out;
}

namespace {

/// Channel-pooled positive relevance per pixel.
Tensor positive_pixel_relevance(const Tensor& input_relevance_chw) {
    const std::size_t c = input_relevance_chw.extent(0);
    const std::size_t h = input_relevance_chw.extent(1);
    const std::size_t w = input_relevance_chw.extent(2);
    Tensor pos({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) s += input_relevance_chw.at3(ch, y, x);
            pos.at2(y, x) = std::max(s, 0.0);
        }
    }
    return pos;
}

}  // namespace

OcclusionSweepResult occlusion_sweep(const Network& net, const Tensor& img_hwc,
                                     const std::vector<OcclusionSpec>& specs,
                                     const LrpConfig& lrp_cfg, const RenderConfig& render_cfg) {
    if (img_hwc.rank() != 3 || img_hwc.extent(2) != 3) {
        throw std::invalid_argument("occlusion_sweep: want an H x W x 3 image tensor");
    }
    const std::size_t h = img_hwc.extent(0), w = img_hwc.extent(1);
    for (std::size_t s = 0; s < specs.size(); ++s) {
        try {
            specs[s].validate(w, h);
        } catch (const std::exception& e) {
            throw std::invalid_argument("occlusion spec " + std::to_string(s) + ": " + e.what());
        }
    }

    OcclusionSweepResult result;

    const ActivationTrace base_trace = forward(net, hwc_to_chw(img_hwc));
    result.report.baseline_score = base_trace.final_output()[lrp_cfg.output_selector];

    const RelevanceMap base_rel = relprop(net, base_trace, lrp_cfg);
    result.baseline_heatmap = render(base_rel.heatmap(), render_cfg);
    const Tensor pos_rel = positive_pixel_relevance(base_rel.heatmap());
    const double total_pos = pos_rel.sum();

    for (const OcclusionSpec& spec : specs) {
        const Tensor occluded = apply_occlusion(img_hwc, spec);
        const ActivationTrace trace = forward(net, hwc_to_chw(occluded));
        const double score = trace.final_output()[lrp_cfg.output_selector];

        double inside = 0.0;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (const Region& r : spec.regions) {
                    if (r.contains(x, y)) {
                        inside += pos_rel.at2(y, x);
                        break;
                    }
                }
            }
        }

        OcclusionReport::Row row;
        row.label = spec.label;
        row.occluded_score = score;
        row.delta = score - result.report.baseline_score;
        row.relevance_fraction = total_pos > 0.0 ? inside / total_pos : 0.0;
        result.report.rows.push_back(std::move(row));

        const RelevanceMap rel = relprop(net, trace, lrp_cfg);
        result.occluded_heatmaps.push_back(render(rel.heatmap(), render_cfg));
        result.occluded_images.push_back(hwc_to_image(occluded));
    }
    return result;
}

std::vector<OcclusionSpec> parse_occlusion_specs(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open occlusion specs " + path.string());
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed occlusion specs " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw std::runtime_error(path.string() + ": top-level JSON must be a list of specs");
    }

    std::vector<OcclusionSpec> specs;
    for (std::size_t s = 0; s < doc.size(); ++s) {
        const json& js = doc[s];
        OcclusionSpec spec;
        try {
            spec.label = js.value("label", "spec" + std::to_string(s));
            for (std::size_t k = 0; k < js.value("regions", json::array()).size(); ++k) {
                const json& jr = js["regions"][k];
                Region r;
                const std::string shape = jr.at("shape").get<std::string>();
                if (shape == "rectangle") {
                    r.shape = Region::Shape::Rectangle;
                } else if (shape == "ellipse") {
                    r.shape = Region::Shape::Ellipse;
                } else {
                    throw std::runtime_error("region " + std::to_string(k) +
                                             ": unknown shape \"" + shape + "\"");
                }
                const auto coords = jr.at("coords").get<std::vector<double>>();
                if (coords.size() != 4) {
                    throw std::runtime_error("region " + std::to_string(k) +
                                             ": coords must have 4 entries");
                }
                std::copy(coords.begin(), coords.end(), r.coords.begin());
                spec.regions.push_back(r);
            }
            if (js.contains("fill") && js["fill"] != json("image-mean")) {
                const auto fill = js["fill"].get<std::vector<double>>();
                if (fill.size() != 3) throw std::runtime_error("fill must be [r, g, b]");
                spec.fill = {fill[0], fill[1], fill[2]};
            }
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ": spec " + std::to_string(s) + ": " +
                                     e.what());
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

}  // namespace relmap
