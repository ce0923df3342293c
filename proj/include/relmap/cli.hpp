#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace relmap::cli {

inline constexpr const char* kToolVersion = "relmap 0.1.0";

/// Default output directory: $RELMAP_OUT when set, else ".".
std::filesystem::path default_out_dir();

/// Every artifact-producing command writes exactly one manifest.json into its
/// output directory (command, config snapshot, seeds, input hashes, tool
/// version, output paths) and stages outputs in a temp directory, renaming
/// on success so failures leave no partial outputs.

struct TrainArgs {
    std::filesystem::path model;
    std::filesystem::path data_dir;
    std::filesystem::path labels_csv;
    std::filesystem::path out_dir;
    std::string attribute;  // empty = all rows
    std::string mode = "dense-only";
    double learning_rate = 0.001;
    double momentum = 0.9;
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    std::uint64_t seed = 0;
};

/// Retrains the model; writes model.json/model.bin, curve.csv
/// (epoch,train_mae,test_mae) and manifest.json.
int cmd_train(const TrainArgs& args);

struct ExplainArgs {
    std::filesystem::path model;
    std::filesystem::path image;
    std::filesystem::path out_dir;
    std::string rule = "alpha-beta";
    double alpha = 2.0;
    double beta = -1.0;
    double epsilon = 1e-9;
    std::string bias_policy = "absorb";  // absorb | ignore
    bool renormalize = true;
    std::size_t output_selector = 0;
    bool fixed_scale_set = false;
    double fixed_scale = 1.0;
};

/// Writes heatmap.ppm/heatmap.png, relevance.bin + relevance_index.json,
/// conservation.json and manifest.json. Warns when alpha + beta != 1.
int cmd_explain(const ExplainArgs& args);

struct OccludeArgs {
    std::filesystem::path model;
    std::filesystem::path image;
    std::filesystem::path specs;
    std::filesystem::path out_dir;
    std::string rule = "alpha-beta";
    double alpha = 2.0;
    double beta = -1.0;
    double epsilon = 1e-9;
    std::size_t output_selector = 0;
};

/// Writes occlusion.csv, baseline and per-spec heatmaps/occluded images,
/// and manifest.json.
int cmd_occlude(const OccludeArgs& args);

struct ValidateArgs {
    std::filesystem::path model;
    std::uint64_t seed = 0;
};

/// Shape-chain validation, a random-input conservation check and a
/// finite-difference spot check; prints one pass/fail line per check.
int cmd_validate(const ValidateArgs& args);

struct MakeToyArgs {
    std::filesystem::path out_dir;
    std::size_t samples = 200;
    std::size_t image_size = 16;
    std::uint64_t seed = 0;
};

/// Generates the synthetic brightness dataset (images/ + labels.csv) and a
/// seeded base model, so the full pipeline runs with zero external data.
int cmd_make_toy(const MakeToyArgs& args);

}  // namespace relmap::cli
