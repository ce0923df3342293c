#include "relmap/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace relmap {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void append_f32(std::vector<std::uint8_t>& out, const Tensor& t) {
    for (double v : t.values()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        out.push_back(static_cast<std::uint8_t>(bits & 0xff));
        out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
        out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
        out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
    }
}

double read_f32(const std::uint8_t* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                               (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

json layer_to_json(const LayerSpec& layer) {
    json j;
    j["kind"] = layer_kind_name(layer);
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        j["out_features"] = d->out_features();
        j["in_features"] = d->in_features();
    } else if (const auto* c = std::get_if<Conv2DLayer>(&layer)) {
        j["out_channels"] = c->out_channels();
        j["in_channels"] = c->in_channels();
        j["kernel_h"] = c->kernel_h();
        j["kernel_w"] = c->kernel_w();
        j["stride"] = c->stride;
        j["pad"] = c->pad;
    } else if (const auto* p = std::get_if<MaxPool2DLayer>(&layer)) {
        j["window_h"] = p->window_h;
        j["window_w"] = p->window_w;
        j["stride"] = p->stride;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
        const auto out = j.at("out_features").get<std::size_t>();
        const auto in = j.at("in_features").get<std::size_t>();
        return DenseLayer{Tensor({out, in}), Tensor({out})};
    }
    if (kind == "conv2d") {
        const auto oc = j.at("out_channels").get<std::size_t>();
        const auto ic = j.at("in_channels").get<std::size_t>();
        const auto kh = j.at("kernel_h").get<std::size_t>();
        const auto kw = j.at("kernel_w").get<std::size_t>();
        Conv2DLayer c{Tensor({oc, ic, kh, kw}), Tensor({oc}), j.at("stride").get<std::size_t>(),
                      j.at("pad").get<std::size_t>()};
        return c;
    }
    if (kind == "maxpool2d") {
        return MaxPool2DLayer{j.at("window_h").get<std::size_t>(),
                              j.at("window_w").get<std::size_t>(),
                              j.at("stride").get<std::size_t>()};
    }
    if (kind == "relu") return ReLULayer{};
    if (kind == "flatten") return FlattenLayer{};
    throw std::runtime_error("unknown layer kind \"" + kind + "\"");
}

/// Weight then bias tensors of a layer, in blob order.
std::vector<const Tensor*> param_tensors(const LayerSpec& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) return {&d->weight, &d->bias};
    if (const auto* c = std::get_if<Conv2DLayer>(&layer)) return {&c->kernel, &c->bias};
    return {};
}

std::vector<Tensor*> param_tensors(LayerSpec& layer) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) return {&d->weight, &d->bias};
    if (auto* c = std::get_if<Conv2DLayer>(&layer)) return {&c->kernel, &c->bias};
    return {};
}

}  // namespace

std::size_t layer_param_count(const LayerSpec& layer) {
    std::size_t n = 0;
    for (const Tensor* t : param_tensors(layer)) n += t->size();
    return n;
}

void save_model(const Network& net, const std::filesystem::path& manifest_path) {
    net.validate();

    std::vector<std::uint8_t> blob;
    json layers = json::array();
    for (const auto& layer : net.layers) {
        layers.push_back(layer_to_json(layer));
        for (const Tensor* t : param_tensors(layer)) append_f32(blob, *t);
    }

    std::filesystem::path blob_path = manifest_path;
    blob_path.replace_extension(".bin");

    json manifest;
    manifest["format"] = "relmap-model";
    manifest["version"] = kFormatVersion;
    manifest["input_shape"] = net.input_shape;
    manifest["layers"] = layers;
    manifest["blob"] = blob_path.filename().string();
    manifest["blob_len_bytes"] = blob.size();

    {
        std::ofstream f(blob_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write blob " + blob_path.string());
        f.write(reinterpret_cast<const char*>(blob.data()),
                static_cast<std::streamsize>(blob.size()));
        if (!f) throw std::runtime_error("short write to " + blob_path.string());
    }
    {
        std::ofstream f(manifest_path);
        if (!f) throw std::runtime_error("cannot write manifest " + manifest_path.string());
        f << manifest.dump(2) << "\n";
    }
}

Network load_model(const std::filesystem::path& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw std::runtime_error("cannot open manifest " + manifest_path.string());

    json manifest;
    try {
        manifest = json::parse(mf);
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    Network net;
    std::filesystem::path blob_path;
    std::size_t declared_len = 0;
    try {
        if (manifest.at("format").get<std::string>() != "relmap-model") {
            throw std::runtime_error("not a relmap-model manifest");
        }
        if (manifest.at("version").get<int>() != kFormatVersion) {
            throw std::runtime_error("unsupported format version " +
                                     manifest.at("version").dump());
        }
        net.input_shape = manifest.at("input_shape").get<std::vector<std::size_t>>();
        for (const auto& jl : manifest.at("layers")) net.layers.push_back(layer_from_json(jl));
        blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
        declared_len = manifest.at("blob_len_bytes").get<std::size_t>();
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    // The shapes declared in the manifest fix the parameter count; the declared
    // blob length must agree with them before any bytes are read.
    std::size_t expected_floats = 0;
    for (const auto& layer : net.layers) expected_floats += layer_param_count(layer);
    if (declared_len != expected_floats * 4) {
        throw std::runtime_error(
            "shape-consistency error in " + manifest_path.string() + ": layer shapes require " +
            std::to_string(expected_floats * 4) + " blob bytes (" +
            std::to_string(expected_floats) + " floats) but manifest declares " +
            std::to_string(declared_len));
    }

    std::ifstream bf(blob_path, std::ios::binary);
    if (!bf) throw std::runtime_error("cannot open blob " + blob_path.string());
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(bf)),
                                   std::istreambuf_iterator<char>());
    if (blob.size() != declared_len) {
        throw std::runtime_error("blob length mismatch in " + blob_path.string() + ": expected " +
                                 std::to_string(declared_len) + " bytes, got " +
                                 std::to_string(blob.size()));
    }

    std::size_t off = 0;
    for (auto& layer : net.layers) {
        for (Tensor* t : param_tensors(layer)) {
            for (std::size_t i = 0; i < t->size(); ++i, off += 4) {
                (*t)[i] = read_f32(blob.data() + off);
            }
        }
    }

    try {
        net.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error("shape-chain validation failed for " + manifest_path.string() +
                                 ": " + e.what());
    }
    return net;
}

}  // namespace relmap
