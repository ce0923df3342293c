#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "relmap/model_io.hpp"
#include "relmap/rng.hpp"
#include "relmap/toy.hpp"

using namespace relmap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("relmap_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("save/load roundtrip reproduces the network") {
    const fs::path dir = temp_dir("roundtrip");
    const Network net = make_toy_base_model(3);

    save_model(net, dir / "model.json");
    const Network loaded = load_model(dir / "model.json");

    REQUIRE(loaded.layers.size() == net.layers.size());
    CHECK(loaded.input_shape == net.input_shape);

    // Weights pass through f32 storage once; a second roundtrip must be the
    // identity, byte for byte.
    save_model(loaded, dir / "model2.json");
    const Network loaded2 = load_model(dir / "model2.json");
    CHECK(slurp(dir / "model.bin") == slurp(dir / "model2.bin"));
    for (std::size_t l = 0; l < loaded.layers.size(); ++l) {
        if (const auto* d = std::get_if<DenseLayer>(&loaded.layers[l])) {
            const auto& d2 = std::get<DenseLayer>(loaded2.layers[l]);
            CHECK(d->weight == d2.weight);
            CHECK(d->bias == d2.bias);
        } else if (const auto* c = std::get_if<Conv2DLayer>(&loaded.layers[l])) {
            const auto& c2 = std::get<Conv2DLayer>(loaded2.layers[l]);
            CHECK(c->kernel == c2.kernel);
            CHECK(c->stride == c2.stride);
            CHECK(c->pad == c2.pad);
        }
    }

    // f32-representable weights roundtrip bit-exactly on the first pass too
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (const auto* d = std::get_if<DenseLayer>(&net.layers[l])) {
            const auto& dl = std::get<DenseLayer>(loaded.layers[l]);
            for (std::size_t i = 0; i < d->weight.size(); ++i) {
                CHECK(static_cast<float>(d->weight[i]) == static_cast<float>(dl.weight[i]));
            }
        }
    }
}

TEST_CASE("truncated blob names expected and actual length") {
    const fs::path dir = temp_dir("truncated");
    save_model(make_toy_base_model(5), dir / "model.json");

    const auto bytes = slurp(dir / "model.bin");
    std::ofstream f(dir / "model.bin", std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 4));
    f.close();

    const std::string expected = "expected " + std::to_string(bytes.size());
    CHECK_THROWS_WITH_AS(load_model(dir / "model.json"), doctest::Contains(expected.c_str()),
                         std::runtime_error);
    try {
        load_model(dir / "model.json");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(std::to_string(bytes.size() - 4)) != std::string::npos);
    }
}

TEST_CASE("manifest declaring Dense(3x2) with a 5-float blob is a shape-consistency error") {
    const fs::path dir = temp_dir("shapes");
    nlohmann::json manifest;
    manifest["format"] = "relmap-model";
    manifest["version"] = 1;
    manifest["input_shape"] = {2};
    manifest["layers"] = {{{"kind", "dense"}, {"out_features", 3}, {"in_features", 2}}};
    manifest["blob"] = "model.bin";
    manifest["blob_len_bytes"] = 5 * 4;  // Dense(3x2) needs 6 + 3 = 9 floats
    std::ofstream(dir / "model.json") << manifest.dump(2);
    std::ofstream(dir / "model.bin", std::ios::binary) << std::string(20, '\0');

    CHECK_THROWS_WITH_AS(load_model(dir / "model.json"),
                         doctest::Contains("shape-consistency"), std::runtime_error);
}

TEST_CASE("malformed manifests are rejected") {
    const fs::path dir = temp_dir("malformed");
    std::ofstream(dir / "model.json") << "{ not json";
    CHECK_THROWS_WITH_AS(load_model(dir / "model.json"), doctest::Contains("malformed"),
                         std::runtime_error);

    std::ofstream(dir / "missing.json") << R"({"format": "relmap-model", "version": 1})";
    CHECK_THROWS_AS(load_model(dir / "missing.json"), std::runtime_error);

    CHECK_THROWS_AS(load_model(dir / "does_not_exist.json"), std::runtime_error);
}

TEST_CASE("loaded models fail shape-chain validation when inconsistent") {
    const fs::path dir = temp_dir("chain");
    nlohmann::json manifest;
    manifest["format"] = "relmap-model";
    manifest["version"] = 1;
    manifest["input_shape"] = {4};
    manifest["layers"] = {{{"kind", "dense"}, {"out_features", 2}, {"in_features", 3}}};
    manifest["blob"] = "model.bin";
    manifest["blob_len_bytes"] = (6 + 2) * 4;
    std::ofstream(dir / "model.json") << manifest.dump(2);
    std::ofstream(dir / "model.bin", std::ios::binary) << std::string(32, '\0');

    CHECK_THROWS_WITH_AS(load_model(dir / "model.json"), doctest::Contains("shape-chain"),
                         std::runtime_error);
}
