#pragma once

#include <filesystem>
#include <string>

#include "relmap/trainer.hpp"

namespace relmap {

/// Loads a labelled image dataset: a directory of 8-bit RGB images plus a CSV
/// of (filename, attribute, raw_score). A header row is skipped when present.
/// Images become network-input tensors (3 x H x W, values in [0, 1]). When
/// attribute is non-empty, only matching rows are kept. Raw scores must lie
/// in [1, 9].
LabeledDataset load_dataset(const std::filesystem::path& image_dir,
                            const std::filesystem::path& labels_csv,
                            const std::string& attribute = "");

}  // namespace relmap
