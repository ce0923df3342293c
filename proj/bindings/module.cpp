#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "relmap/lrp.hpp"
#include "relmap/model_io.hpp"
#include "relmap/occlusion.hpp"
#include "relmap/render.hpp"
#include "relmap/toy.hpp"
#include "relmap/trainer.hpp"

namespace py = pybind11;
using namespace relmap;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(static_cast<std::size_t>(a.ndim()));
    for (std::size_t i = 0; i < shape.size(); ++i) {
        shape[i] = static_cast<std::size_t>(a.shape(static_cast<py::ssize_t>(i)));
    }
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> a(shape);
    std::memcpy(a.mutable_data(), t.data(), t.size() * sizeof(double));
    return a;
}

py::array image_to_array(const Image8& img) {
    py::array_t<std::uint8_t> a({static_cast<py::ssize_t>(img.height),
                                 static_cast<py::ssize_t>(img.width), py::ssize_t(3)});
    std::memcpy(a.mutable_data(), img.pixels.data(), img.pixels.size());
    return a;
}

LrpConfig make_config(const std::string& rule, double alpha, double beta, double epsilon,
                      const std::string& bias_policy, bool renormalize, std::size_t output) {
    LrpConfig cfg;
    if (rule == "epsilon") {
        cfg.rule = EpsilonRule{epsilon};
    } else if (rule == "alpha-beta") {
        cfg.rule = AlphaBetaRule{alpha, beta};
    } else {
        throw std::invalid_argument("rule must be \"alpha-beta\" or \"epsilon\"");
    }
    if (bias_policy == "absorb") {
        cfg.bias_policy = BiasPolicy::AbsorbBias;
    } else if (bias_policy == "ignore") {
        cfg.bias_policy = BiasPolicy::IgnoreBias;
    } else {
        throw std::invalid_argument("bias_policy must be \"absorb\" or \"ignore\"");
    }
    cfg.renormalize = renormalize;
    cfg.output_selector = output;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Layer-wise relevance propagation over small ConvNets";

    py::class_<Network>(m, "Network")
        .def_property_readonly("input_shape",
                               [](const Network& n) { return n.input_shape; })
        .def_property_readonly("num_layers",
                               [](const Network& n) { return n.layers.size(); })
        .def("output_shape", &Network::output_shape)
        .def("layer_kinds", [](const Network& n) {
            std::vector<std::string> kinds;
            for (const auto& layer : n.layers) kinds.emplace_back(layer_kind_name(layer));
            return kinds;
        });

    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_model", &save_model, py::arg("net"), py::arg("path"));
    m.def("make_toy_base_model", &make_toy_base_model, py::arg("seed") = 0,
          py::arg("image_size") = 16);

    m.def(
        "forward",
        [](const Network& net, const py::array_t<double>& x) {
            return array_from_tensor(forward(net, tensor_from_array(x)).final_output());
        },
        py::arg("net"), py::arg("x"), "Final output of a forward pass");

    m.def(
        "explain",
        [](const Network& net, const py::array_t<double>& x, const std::string& rule,
           double alpha, double beta, double epsilon, const std::string& bias_policy,
           bool renormalize, std::size_t output) {
            const LrpConfig cfg =
                make_config(rule, alpha, beta, epsilon, bias_policy, renormalize, output);
            const ActivationTrace trace = forward(net, tensor_from_array(x));
            const double fx = trace.final_output()[cfg.output_selector];
            RelpropStats stats;
            const RelevanceMap rel = relprop(net, trace, cfg, &stats);
            const ConservationReport report = check_conservation(rel, fx, 1e-9);

            py::list layers;
            for (const Tensor& t : rel.layers) layers.append(array_from_tensor(t));
            py::dict out;
            out["score"] = fx;
            out["heatmap"] = array_from_tensor(rel.heatmap());
            out["layers"] = layers;
            out["layer_sums"] = report.layer_sums;
            out["max_rel_drift"] = report.max_rel_drift;
            out["zero_denominator_columns"] = stats.zero_denominator_columns;
            out["bias_absorbed"] = stats.bias_absorbed;
            return out;
        },
        py::arg("net"), py::arg("x"), py::arg("rule") = "alpha-beta", py::arg("alpha") = 2.0,
        py::arg("beta") = -1.0, py::arg("epsilon") = 1e-9, py::arg("bias_policy") = "absorb",
        py::arg("renormalize") = true, py::arg("output") = 0,
        "Relevance pass; returns heatmap, per-layer relevances and conservation info");

    m.def(
        "redistribute_linear",
        [](const py::array_t<double>& z, const py::array_t<double>& r, const std::string& rule,
           double alpha, double beta, double epsilon) {
            const LrpConfig cfg = make_config(rule, alpha, beta, epsilon, "ignore", false, 0);
            return array_from_tensor(
                redistribute_linear(tensor_from_array(z), tensor_from_array(r), cfg));
        },
        py::arg("z"), py::arg("r_upper"), py::arg("rule") = "alpha-beta", py::arg("alpha") = 2.0,
        py::arg("beta") = -1.0, py::arg("epsilon") = 1e-9,
        "Apply a rule to an explicit weighted-activation matrix z[lower, upper]");

    m.def(
        "redistribute_maxpool",
        [](const py::array_t<double>& window, double r_out) {
            return array_from_tensor(redistribute_maxpool(tensor_from_array(window), r_out));
        },
        py::arg("window"), py::arg("r_out"), "Winner-take-all pooling redistribution");

    m.def("rescale_score", &rescale_score, py::arg("raw"),
          "Map a raw 1-9 rating onto [0, 1]: (s - 1) / 8");
    m.def("unrescale_score", &unrescale_score, py::arg("s"));

    m.def(
        "render",
        [](const py::array_t<double>& rel, std::optional<double> fixed_scale) {
            RenderConfig cfg;
            if (fixed_scale) {
                cfg.normalization = RenderConfig::Normalization::Fixed;
                cfg.fixed_scale = *fixed_scale;
            }
            return image_to_array(render(tensor_from_array(rel), cfg));
        },
        py::arg("rel"), py::arg("fixed_scale") = std::nullopt,
        "Diverging-colormap rendering; returns an H x W x 3 uint8 array");

    m.def(
        "occlude",
        [](const py::array_t<double>& img_hwc, const std::string& shape,
           const std::array<double, 4>& coords,
           std::optional<std::array<double, 3>> fill) {
            OcclusionSpec spec;
            Region r;
            if (shape == "rectangle") {
                r.shape = Region::Shape::Rectangle;
            } else if (shape == "ellipse") {
                r.shape = Region::Shape::Ellipse;
            } else {
                throw std::invalid_argument("shape must be \"rectangle\" or \"ellipse\"");
            }
            r.coords = coords;
            spec.regions.push_back(r);
            spec.fill = fill;
            return array_from_tensor(apply_occlusion(tensor_from_array(img_hwc), spec));
        },
        py::arg("img"), py::arg("shape"), py::arg("coords"), py::arg("fill") = std::nullopt,
        "Occlude one region of an H x W x 3 image (no fill = image mean)");

    m.attr("__version__") = "0.1.0";
}
