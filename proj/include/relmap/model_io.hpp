#pragma once

#include <filesystem>

#include "relmap/network.hpp"

namespace relmap {

/// Model file format, version 1.
///
/// A model is a JSON manifest plus a sidecar blob of little-endian 32-bit
/// floats. The manifest lists layer kinds and shapes, the network input
/// shape, the blob filename (resolved relative to the manifest) and the
/// expected blob length in bytes. The blob holds, for each parameterized
/// layer in order, the layer's weights then its biases, row-major.
///
/// Core arithmetic is 64-bit; parameters are narrowed to 32-bit on save and
/// widened on load. save -> load -> save is byte-stable.

void save_model(const Network& net, const std::filesystem::path& manifest_path);

/// Loads and validates a model (manifest shape chain, blob length, finiteness).
/// Throws std::runtime_error with a specific message on malformed manifests,
/// blob length mismatches and shape-chain failures.
Network load_model(const std::filesystem::path& manifest_path);

/// Number of parameter floats (weights + biases) a layer contributes to the blob.
std::size_t layer_param_count(const LayerSpec& layer);

}  // namespace relmap
