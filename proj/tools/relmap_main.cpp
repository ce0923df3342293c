#include <CLI11.hpp>

#include "relmap/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"LRP heatmaps, transfer retraining and occlusion analysis for small ConvNets"};
    app.require_subcommand(1);

    using namespace relmap::cli;

    TrainArgs train_args;
    train_args.out_dir = default_out_dir();
    auto* train = app.add_subcommand("train", "Retrain a model (dense-only or full)");
    train->add_option("--model", train_args.model, "Base model manifest (.json)")->required();
    train->add_option("--data", train_args.data_dir, "Directory of images")->required();
    train->add_option("--labels", train_args.labels_csv, "CSV of filename,attribute,raw_score")
        ->required();
    train->add_option("--attribute", train_args.attribute, "Keep only rows with this attribute");
    train->add_option("--mode", train_args.mode, "dense-only | full (default dense-only)");
    train->add_option("--lr", train_args.learning_rate, "Learning rate (default 0.001)");
    train->add_option("--momentum", train_args.momentum, "Nesterov momentum (default 0.9)");
    train->add_option("--epochs", train_args.epochs, "Epochs (default 30)");
    train->add_option("--batch", train_args.batch_size, "Batch size (default 8)");
    train->add_option("--seed", train_args.seed, "Seed for split and shuffling (default 0)");
    train->add_option("--out", train_args.out_dir, "Output directory");

    ExplainArgs explain_args;
    explain_args.out_dir = default_out_dir();
    auto* explain = app.add_subcommand("explain", "Relevance heatmap for one image");
    explain->add_option("--model", explain_args.model, "Model manifest (.json)")->required();
    explain->add_option("--image", explain_args.image, "Input image (.ppm or .png)")->required();
    explain->add_option("--rule", explain_args.rule, "alpha-beta | epsilon (default alpha-beta)");
    explain->add_option("--alpha", explain_args.alpha, "Alpha (default 2)");
    explain->add_option("--beta", explain_args.beta, "Beta (default -1)");
    explain->add_option("--epsilon", explain_args.epsilon, "Epsilon (default 1e-9)");
    explain->add_option("--bias-policy", explain_args.bias_policy,
                        "absorb | ignore (default absorb)");
    explain->add_flag("--renormalize,!--no-renormalize", explain_args.renormalize,
                      "Rescale each layer to the reference score (default on)");
    explain->add_option("--output", explain_args.output_selector,
                        "Output neuron to propagate (default 0)");
    auto* scale_opt = explain->add_option("--fixed-scale", explain_args.fixed_scale,
                                          "Fixed normalization scale for the rendering");
    explain->add_option("--out", explain_args.out_dir, "Output directory");
    explain->callback([&] { explain_args.fixed_scale_set = scale_opt->count() > 0; });

    OccludeArgs occlude_args;
    occlude_args.out_dir = default_out_dir();
    auto* occlude = app.add_subcommand("occlude", "Occlusion sweep against the heatmap");
    occlude->add_option("--model", occlude_args.model, "Model manifest (.json)")->required();
    occlude->add_option("--image", occlude_args.image, "Input image (.ppm or .png)")->required();
    occlude->add_option("--specs", occlude_args.specs, "Occlusion specs JSON")->required();
    occlude->add_option("--rule", occlude_args.rule, "alpha-beta | epsilon (default alpha-beta)");
    occlude->add_option("--alpha", occlude_args.alpha, "Alpha (default 2)");
    occlude->add_option("--beta", occlude_args.beta, "Beta (default -1)");
    occlude->add_option("--epsilon", occlude_args.epsilon, "Epsilon (default 1e-9)");
    occlude->add_option("--output", occlude_args.output_selector,
                        "Output neuron to score (default 0)");
    occlude->add_option("--out", occlude_args.out_dir, "Output directory");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Model diagnostics (shape chain, "
                                                    "conservation, finite differences)");
    validate->add_option("--model", validate_args.model, "Model manifest (.json)")->required();
    validate->add_option("--seed", validate_args.seed, "Seed for the random probes (default 0)");

    MakeToyArgs toy_args;
    toy_args.out_dir = default_out_dir();
    auto* make_toy = app.add_subcommand("make-toy", "Generate the synthetic brightness "
                                                    "dataset and a base model");
    make_toy->add_option("--out", toy_args.out_dir, "Output directory");
    make_toy->add_option("--samples", toy_args.samples, "Sample count (default 200)");
    make_toy->add_option("--size", toy_args.image_size, "Image side length (default 16)");
    make_toy->add_option("--seed", toy_args.seed, "Seed (default 0)");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) return cmd_train(train_args);
    if (explain->parsed()) return cmd_explain(explain_args);
    if (occlude->parsed()) return cmd_occlude(occlude_args);
    if (validate->parsed()) return cmd_validate(validate_args);
    if (make_toy->parsed()) return cmd_make_toy(toy_args);
    return 1;
}
