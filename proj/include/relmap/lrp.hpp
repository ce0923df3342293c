#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "relmap/network.hpp"

namespace relmap {

/// How layer biases enter the redistribution denominators.
/// IgnoreBias leaves them out entirely; AbsorbBias treats the bias as a
/// virtual unit-activation input whose relevance share is discarded, which
/// leaks relevance (repairable via renormalization).
enum class BiasPolicy { IgnoreBias, AbsorbBias };

/// Proportional redistribution with a sign-stabilized denominator.
/// epsilon only matters when a column denominator is exactly zero; the
/// stabilizer uses sign(0) = +1 so the rule stays total.
struct EpsilonRule {
    double epsilon = 1e-9;
};

/// Separate redistribution of positive and negative weighted activations,
/// weighted by alpha and beta. Conserving iff alpha + beta = 1.
struct AlphaBetaRule {
    double alpha = 2.0;
    double beta = -1.0;
};

struct LrpConfig {
    std::variant<EpsilonRule, AlphaBetaRule> rule = AlphaBetaRule{};
    BiasPolicy bias_policy = BiasPolicy::AbsorbBias;
    bool renormalize = true;
    std::size_t output_selector = 0;

    /// Throws std::invalid_argument on epsilon < 0 or non-finite rule
    /// parameters; with require_conservation also on alpha + beta != 1.
    void validate(bool require_conservation = false) const;

    /// True when the configuration conserves relevance on bias-free networks
    /// (epsilon rule, or alpha-beta with alpha + beta = 1).
    bool conservation_expected() const;
};

/// Per-layer relevance, shape-matched to each layer's input activations.
/// layers[0] is the pixel-wise heatmap.
struct RelevanceMap {
    std::vector<Tensor> layers;

    const Tensor& heatmap() const { return layers.front(); }
};

struct ConservationReport {
    std::vector<double> layer_sums;
    double reference_score = 0.0;
    double max_rel_drift = 0.0;
    double tolerance = 0.0;
    bool passed = false;

    bool pass(double tol) const { return max_rel_drift <= tol; }
};

/// Diagnostics accumulated during a relevance pass.
struct RelpropStats {
    /// Columns whose (side) denominator was exactly zero while carrying
    /// nonzero relevance; their share is dropped, breaking conservation.
    std::size_t zero_denominator_columns = 0;
    /// Total relevance lost to such drops.
    double dropped_relevance = 0.0;
    /// Relevance assigned to bias terms and discarded (AbsorbBias only).
    double bias_absorbed = 0.0;
};

/// Backward relevance pass over a recorded trace. Initializes the top
/// relevance to the selected output score, then per layer in reverse:
/// dense/conv redistribute via the configured rule through the layer's
/// sparse linear view, ReLU passes through, MaxPool is winner-take-all,
/// Flatten is the shape inverse. With cfg.renormalize each layer is rescaled
/// to the reference score before the next pass.
RelevanceMap relprop(const Network& net, const ActivationTrace& trace, const LrpConfig& cfg,
                     RelpropStats* stats = nullptr);

/// Rule application on an explicit weighted-activation matrix
/// z[lower, upper]; r_upper has one entry per column. Columns with an
/// exactly-zero (side) denominator contribute nothing and are counted in
/// stats rather than raising an error.
Tensor redistribute_linear(const Tensor& z, const Tensor& r_upper, const LrpConfig& cfg,
                           RelpropStats* stats = nullptr);

/// Winner-take-all pooling redistribution: the whole r_out goes to the argmax
/// position, ties broken by lowest flat index.
Tensor redistribute_maxpool(const Tensor& window_values, double r_out);

/// Rescales each layer multiplicatively so its sum equals target; a layer
/// whose sum is exactly zero (with a nonzero target) is flagged in
/// skipped_layers and left unscaled. Already-conserved layers pass through
/// bit-identically.
RelevanceMap renormalize(const RelevanceMap& rel, double target,
                         std::vector<std::size_t>* skipped_layers = nullptr);

/// Per-layer sums and the max relative drift against the reference score.
ConservationReport check_conservation(const RelevanceMap& rel, double fx, double tol);

}  // namespace relmap
