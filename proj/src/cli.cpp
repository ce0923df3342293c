#include "relmap/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>

#include <json.hpp>

#include "relmap/dataset.hpp"
#include "relmap/gradients.hpp"
#include "relmap/lrp.hpp"
#include "relmap/model_io.hpp"
#include "relmap/occlusion.hpp"
#include "relmap/render.hpp"
#include "relmap/rng.hpp"
#include "relmap/toy.hpp"
#include "relmap/trainer.hpp"

namespace relmap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Shortest round-trip decimal form, stable across runs.
std::string fmt_double(double v) { return json(v).dump(); }

std::uint64_t fnv1a64_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot hash input " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Stages output files in <out>/.stage.tmp and renames them into place only
/// after the command succeeded, so a failed run leaves no partial outputs.
class OutputStager {
public:
    explicit OutputStager(fs::path out_dir) : out_(std::move(out_dir)), stage_(out_ / ".stage.tmp") {
        fs::create_directories(stage_);
    }
    ~OutputStager() {
        std::error_code ec;
        fs::remove_all(stage_, ec);
    }

    const fs::path& dir() const { return stage_; }

    fs::path path(const std::string& name) {
        names_.push_back(name);
        const fs::path p = stage_ / name;
        fs::create_directories(p.parent_path());
        return p;
    }

    std::vector<std::string> commit() {
        for (const std::string& name : names_) {
            const fs::path target = out_ / name;
            fs::create_directories(target.parent_path());
            fs::rename(stage_ / name, target);
        }
        std::error_code ec;
        fs::remove_all(stage_, ec);
        return std::move(names_);
    }

private:
    fs::path out_;
    fs::path stage_;
    std::vector<std::string> names_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

void write_manifest(OutputStager& stager, const std::string& command, const json& config,
                    std::uint64_t seed, const std::vector<fs::path>& inputs,
                    const std::vector<std::string>& outputs) {
    json inputs_j = json::object();
    for (const fs::path& p : inputs) inputs_j[p.string()] = "fnv1a64:" + hex64(fnv1a64_file(p));
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["inputs"] = inputs_j;
    m["outputs"] = outputs;
    m["tool_version"] = kToolVersion;
    write_text(stager.path("manifest.json"), m.dump(2) + "\n");
}

LrpConfig lrp_config_from(const std::string& rule, double alpha, double beta, double epsilon,
                          const std::string& bias_policy, bool renormalize,
                          std::size_t output_selector) {
    LrpConfig cfg;
    if (rule == "epsilon") {
        cfg.rule = EpsilonRule{epsilon};
    } else if (rule == "alpha-beta") {
        cfg.rule = AlphaBetaRule{alpha, beta};
        if (alpha + beta != 1.0) {
            std::cerr << "warning: alpha + beta = " << fmt_double(alpha + beta)
                      << " != 1; conservation is not expected\n";
        }
    } else {
        throw std::invalid_argument("unknown rule \"" + rule + "\" (want epsilon or alpha-beta)");
    }
    if (bias_policy == "absorb") {
        cfg.bias_policy = BiasPolicy::AbsorbBias;
    } else if (bias_policy == "ignore") {
        cfg.bias_policy = BiasPolicy::IgnoreBias;
    } else {
        throw std::invalid_argument("unknown bias policy \"" + bias_policy + "\"");
    }
    cfg.renormalize = renormalize;
    cfg.output_selector = output_selector;
    cfg.validate();
    return cfg;
}

json rule_to_json(const LrpConfig& cfg) {
    json j;
    if (const auto* eps = std::get_if<EpsilonRule>(&cfg.rule)) {
        j["rule"] = "epsilon";
        j["epsilon"] = eps->epsilon;
    } else {
        const auto& ab = std::get<AlphaBetaRule>(cfg.rule);
        j["rule"] = "alpha-beta";
        j["alpha"] = ab.alpha;
        j["beta"] = ab.beta;
    }
    j["bias_policy"] = cfg.bias_policy == BiasPolicy::AbsorbBias ? "absorb" : "ignore";
    j["renormalize"] = cfg.renormalize;
    j["output_selector"] = cfg.output_selector;
    return j;
}

Tensor load_input_image(const fs::path& path, const Network& net) {
    const Tensor hwc = image_to_hwc(read_image(path));
    const Tensor chw = hwc_to_chw(hwc);
    if (chw.shape() != net.input_shape) {
        throw std::runtime_error("image " + path.string() + " maps to input shape " +
                                 shape_to_string(chw.shape()) + " but the model expects " +
                                 shape_to_string(net.input_shape));
    }
    return chw;
}

int run_command(const char* name, const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << name << ": " << e.what() << "\n";
        return 1;
    }
}

void append_f64(std::string& out, double v) {
    static_assert(sizeof(double) == 8);
    char bytes[8];
    std::memcpy(bytes, &v, 8);
    out.append(bytes, 8);  // little-endian host
}

}  // namespace

fs::path default_out_dir() {
    if (const char* env = std::getenv("RELMAP_OUT")) return fs::path(env);
    return fs::path(".");
}

int cmd_train(const TrainArgs& args) {
    return run_command("train", [&] {
        TrainConfig cfg;
        cfg.learning_rate = args.learning_rate;
        cfg.momentum = args.momentum;
        cfg.epochs = args.epochs;
        cfg.batch_size = args.batch_size;
        cfg.seed = args.seed;
        if (args.mode == "dense-only") {
            cfg.mode = TrainMode::DenseOnly;
        } else if (args.mode == "full") {
            cfg.mode = TrainMode::Full;
        } else {
            throw std::invalid_argument("unknown mode \"" + args.mode +
                                        "\" (want dense-only or full)");
        }

        const Network base = load_model(args.model);
        const LabeledDataset ds = load_dataset(args.data_dir, args.labels_csv, args.attribute);
        for (const auto& item : ds.items) {
            if (item.image.shape() != base.input_shape) {
                throw std::runtime_error("dataset image shape " +
                                         shape_to_string(item.image.shape()) +
                                         " does not match model input " +
                                         shape_to_string(base.input_shape));
            }
        }
        const auto [train_ds, test_ds] = split_dataset(ds, args.seed);

        const TrainResult result = train(base, train_ds, &test_ds, cfg);

        OutputStager stager(args.out_dir);
        save_model(result.net, stager.path("model.json"));
        stager.path("model.bin");  // written by save_model; register for commit

        std::string csv = "epoch,train_mae,test_mae\n";
        for (const auto& row : result.curve.rows) {
            csv += std::to_string(row.epoch) + "," + fmt_double(row.train_mae) + "," +
                   fmt_double(row.test_mae) + "\n";
        }
        write_text(stager.path("curve.csv"), csv);

        json config;
        config["mode"] = args.mode;
        config["learning_rate"] = cfg.learning_rate;
        config["momentum"] = cfg.momentum;
        config["epochs"] = cfg.epochs;
        config["batch_size"] = cfg.batch_size;
        config["attribute"] = args.attribute;
        config["split"] = {{"train", train_ds.size()}, {"test", test_ds.size()}};
        write_manifest(stager, "train", config, args.seed,
                       {args.model, args.labels_csv}, {"model.json", "model.bin", "curve.csv"});

        const auto outputs = stager.commit();
        std::cout << "trained " << outputs[0] << " (" << result.curve.rows.size() << " epochs";
        if (!result.curve.rows.empty()) {
            std::cout << ", final train MAE " << fmt_double(result.curve.rows.back().train_mae)
                      << ", test MAE " << fmt_double(result.curve.rows.back().test_mae);
        }
        std::cout << ")\n";
    });
}

int cmd_explain(const ExplainArgs& args) {
    return run_command("explain", [&] {
        const Network net = load_model(args.model);
        const LrpConfig cfg = lrp_config_from(args.rule, args.alpha, args.beta, args.epsilon,
                                              args.bias_policy, args.renormalize,
                                              args.output_selector);
        const Tensor x = load_input_image(args.image, net);
        const ActivationTrace trace = forward(net, x);
        const double fx = trace.final_output()[cfg.output_selector];

        // Raw pass first so the report shows the drift the rule itself
        // produces; renormalization is applied afterwards when requested.
        LrpConfig raw_cfg = cfg;
        raw_cfg.renormalize = false;
        RelpropStats stats;
        RelevanceMap rel = relprop(net, trace, raw_cfg, &stats);
        const ConservationReport raw_report = check_conservation(rel, fx, 1e-9);

        json conservation;
        conservation["reference_score"] = fx;
        conservation["raw"] = {{"layer_sums", raw_report.layer_sums},
                               {"max_rel_drift", raw_report.max_rel_drift}};
        if (cfg.renormalize) {
            std::vector<std::size_t> skipped;
            rel = renormalize(rel, fx, &skipped);
            const ConservationReport post = check_conservation(rel, fx, 1e-12);
            conservation["renormalized"] = {{"layer_sums", post.layer_sums},
                                            {"max_rel_drift", post.max_rel_drift},
                                            {"skipped_layers", skipped}};
        }
        conservation["zero_denominator_columns"] = stats.zero_denominator_columns;
        conservation["dropped_relevance"] = stats.dropped_relevance;
        conservation["bias_absorbed"] = stats.bias_absorbed;
        conservation["rule"] = rule_to_json(cfg);

        RenderConfig render_cfg;
        if (args.fixed_scale_set) {
            render_cfg.normalization = RenderConfig::Normalization::Fixed;
            render_cfg.fixed_scale = args.fixed_scale;
        }
        const Image8 heatmap = render(rel.heatmap(), render_cfg);

        OutputStager stager(args.out_dir);
        write_ppm(heatmap, stager.path("heatmap.ppm"));
        write_png(heatmap, stager.path("heatmap.png"));

        std::string blob;
        json index = json::array();
        std::size_t offset = 0;
        for (std::size_t l = 0; l < rel.layers.size(); ++l) {
            const Tensor& t = rel.layers[l];
            for (std::size_t i = 0; i < t.size(); ++i) append_f64(blob, t[i]);
            index.push_back({{"layer", l},
                             {"name", layer_kind_name(net.layers[l])},
                             {"shape", t.shape()},
                             {"sum", t.sum()},
                             {"offset_bytes", offset},
                             {"count", t.size()}});
            offset += t.size() * 8;
        }
        write_text(stager.path("relevance.bin"), blob);
        json index_doc;
        index_doc["dtype"] = "float64-le";
        index_doc["layers"] = index;
        write_text(stager.path("relevance_index.json"), index_doc.dump(2) + "\n");
        write_text(stager.path("conservation.json"), conservation.dump(2) + "\n");

        write_manifest(stager, "explain", rule_to_json(cfg), 0, {args.model, args.image},
                       {"heatmap.ppm", "heatmap.png", "relevance.bin", "relevance_index.json",
                        "conservation.json"});
        stager.commit();

        std::cout << "score " << fmt_double(fx) << ", raw conservation drift "
                  << fmt_double(raw_report.max_rel_drift) << "\n";
    });
}

int cmd_occlude(const OccludeArgs& args) {
    return run_command("occlude", [&] {
        const Network net = load_model(args.model);
        const LrpConfig cfg = lrp_config_from(args.rule, args.alpha, args.beta, args.epsilon,
                                              "absorb", true, args.output_selector);
        const Tensor hwc = image_to_hwc(read_image(args.image));
        load_input_image(args.image, net);  // shape check with a clear message
        const auto specs = parse_occlusion_specs(args.specs);

        const OcclusionSweepResult result = occlusion_sweep(net, hwc, specs, cfg);

        OutputStager stager(args.out_dir);
        std::string csv = "label,baseline_score,occluded_score,delta,relevance_fraction\n";
        for (const auto& row : result.report.rows) {
            csv += row.label + "," + fmt_double(result.report.baseline_score) + "," +
                   fmt_double(row.occluded_score) + "," + fmt_double(row.delta) + "," +
                   fmt_double(row.relevance_fraction) + "\n";
        }
        write_text(stager.path("occlusion.csv"), csv);
        write_ppm(result.baseline_heatmap, stager.path("heatmap_baseline.ppm"));

        std::vector<std::string> outputs = {"occlusion.csv", "heatmap_baseline.ppm"};
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const std::string tag = std::to_string(s) + "_" + specs[s].label;
            const std::string occluded_name = "occluded_" + tag + ".ppm";
            const std::string heatmap_name = "heatmap_" + tag + ".ppm";
            write_ppm(result.occluded_images[s], stager.path(occluded_name));
            write_ppm(result.occluded_heatmaps[s], stager.path(heatmap_name));
            outputs.push_back(occluded_name);
            outputs.push_back(heatmap_name);
        }

        json config = rule_to_json(cfg);
        config["specs"] = specs.size();
        write_manifest(stager, "occlude", config, 0, {args.model, args.image, args.specs},
                       outputs);
        stager.commit();

        std::cout << "baseline score " << fmt_double(result.report.baseline_score) << ", "
                  << result.report.rows.size() << " occlusions\n";
    });
}

int cmd_validate(const ValidateArgs& args) {
    int failures = 0;
    const auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << ": " << detail;
        std::cout << "\n";
        if (!ok) ++failures;
    };

    Network net;
    try {
        net = load_model(args.model);
        check("load+shape-chain", true, std::to_string(net.layers.size()) + " layers");
    } catch (const std::exception& e) {
        check("load+shape-chain", false, e.what());
        return 1;
    }

    try {
        std::mt19937_64 rng(args.seed);
        Tensor x(net.input_shape);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform_range(rng, 0.0, 1.0);
        const ActivationTrace trace = forward(net, x);

        bool bias_free = true;
        for (const auto& layer : net.layers) {
            if (const auto* d = std::get_if<DenseLayer>(&layer)) {
                for (double b : d->bias.values()) bias_free &= (b == 0.0);
            } else if (const auto* c = std::get_if<Conv2DLayer>(&layer)) {
                for (double b : c->bias.values()) bias_free &= (b == 0.0);
            }
        }

        LrpConfig cfg;  // default alpha-beta(2, -1), absorb_bias
        cfg.renormalize = false;
        RelpropStats stats;
        const RelevanceMap rel = relprop(net, trace, cfg, &stats);
        const double fx = trace.final_output()[0];
        const ConservationReport report = check_conservation(rel, fx, 1e-9);

        if (bias_free && stats.zero_denominator_columns == 0) {
            check("conservation", report.passed,
                  "max relative drift " + fmt_double(report.max_rel_drift));
        } else {
            std::string why = bias_free ? "" : "biases present (absorb_bias leaks their share)";
            if (stats.zero_denominator_columns > 0) {
                if (!why.empty()) why += "; ";
                why += std::to_string(stats.zero_denominator_columns) +
                       " zero-denominator columns";
            }
            check("conservation",
                  true, "drift " + fmt_double(report.max_rel_drift) + " explained: " + why);
            const RelevanceMap fixed = renormalize(rel, fx);
            const ConservationReport post = check_conservation(fixed, fx, 1e-12);
            check("conservation (renormalized)", post.passed,
                  "max relative drift " + fmt_double(post.max_rel_drift));
        }
    } catch (const std::exception& e) {
        check("conservation", false, e.what());
    }

    try {
        std::mt19937_64 rng(args.seed + 1);
        Tensor x(net.input_shape);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform_range(rng, 0.0, 1.0);
        const ActivationTrace trace = forward(net, x);
        Tensor grad_out(trace.final_output().shape());
        grad_out[0] = 1.0;
        const NetworkGrads grads = backprop(net, trace, grad_out);

        const auto slots = trainable_slots(net, TrainMode::Full);
        Network scratch = net;
        double worst = 0.0;
        std::size_t checked = 0;
        for (auto slot : slots) {
            auto params = get_params(scratch, {slot});
            Tensor& p = params[0];
            const Tensor& g = slot.second == 0 ? grads.layers[slot.first].weight
                                               : grads.layers[slot.first].bias;
            // a handful of entries per tensor is enough for a spot check
            for (std::size_t k = 0; k < std::min<std::size_t>(4, p.size()); ++k) {
                const std::size_t i = p.size() <= 4 ? k : uniform_index(rng, p.size());
                const double orig = p[i];
                const double step = 1e-5;
                p[i] = orig + step;
                set_params(scratch, {slot}, params);
                const double up = forward(scratch, x).final_output()[0];
                p[i] = orig - step;
                set_params(scratch, {slot}, params);
                const double down = forward(scratch, x).final_output()[0];
                p[i] = orig;
                set_params(scratch, {slot}, params);

                const double numeric = (up - down) / (2.0 * step);
                const double denom = std::max({std::abs(numeric), std::abs(g[i]), 1e-8});
                worst = std::max(worst, std::abs(numeric - g[i]) / denom);
                ++checked;
            }
        }
        check("finite-difference spot check", worst <= 1e-4,
              std::to_string(checked) + " params, worst relative error " + fmt_double(worst));
    } catch (const std::exception& e) {
        check("finite-difference spot check", false, e.what());
    }

    return failures == 0 ? 0 : 1;
}

int cmd_make_toy(const MakeToyArgs& args) {
    return run_command("make-toy", [&] {
        ToyOptions opts;
        opts.samples = args.samples;
        opts.image_size = args.image_size;
        opts.seed = args.seed;
        const auto samples = make_toy_samples(opts);
        const Network base = make_toy_base_model(args.seed, args.image_size);

        OutputStager stager(args.out_dir);
        std::string csv;
        std::vector<std::string> outputs;
        for (std::size_t s = 0; s < samples.size(); ++s) {
            char name[32];
            std::snprintf(name, sizeof name, "images/toy_%04zu.ppm", s);
            write_ppm(samples[s].image, stager.path(name));
            outputs.emplace_back(name);
            csv += std::string(name).substr(7) + ",brightness," +
                   fmt_double(samples[s].raw_score) + "\n";
        }
        write_text(stager.path("labels.csv"), csv);
        save_model(base, stager.path("base_model.json"));
        stager.path("base_model.bin");
        outputs.insert(outputs.end(), {"labels.csv", "base_model.json", "base_model.bin"});

        json config;
        config["samples"] = opts.samples;
        config["image_size"] = opts.image_size;
        write_manifest(stager, "make-toy", config, args.seed, {}, outputs);
        stager.commit();

        std::cout << "wrote " << samples.size() << " images, labels.csv and base_model.json to "
                  << args.out_dir.string() << "\n";
    });
}

}  // namespace relmap::cli
