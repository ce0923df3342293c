#include "relmap/lrp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace relmap {

namespace {

// sign with sign(0) = +1, keeping the epsilon stabilizer total.
inline double sign_pos(double x) { return x < 0.0 ? -1.0 : 1.0; }

struct ColumnSums {
    double total = 0.0;  // plain accumulation, same order as the forward pass
    double pos = 0.0;
    double neg = 0.0;

    void add(double z) {
        total += z;
        if (z > 0.0) {
            pos += z;
        } else if (z < 0.0) {
            neg += z;
        }
    }
};

// Per-column scale factors for one upper neuron. A contribution z receives
// z * factor_pos when z > 0 and z * factor_neg when z < 0 (the epsilon rule
// uses one factor for both). Zero-denominator sides contribute nothing and
// are tallied as conservation drops.
struct ColumnFactors {
    double factor_pos = 0.0;
    double factor_neg = 0.0;

    double share(double z) const { return z > 0.0 ? z * factor_pos : z * factor_neg; }
};

ColumnFactors column_factors(const ColumnSums& sums, double r_upper, const LrpConfig& cfg,
                             RelpropStats* stats) {
    ColumnFactors f;
    bool dropped = false;
    if (const auto* eps = std::get_if<EpsilonRule>(&cfg.rule)) {
        const double denom = sums.total + eps->epsilon * sign_pos(sums.total);
        if (denom == 0.0) {
            if (r_upper != 0.0) {
                dropped = true;
                if (stats) stats->dropped_relevance += r_upper;
            }
        } else {
            const double factor = r_upper / denom;
            f.factor_pos = factor;
            f.factor_neg = factor;
        }
    } else {
        const auto& ab = std::get<AlphaBetaRule>(cfg.rule);
        if (sums.pos != 0.0) {
            f.factor_pos = ab.alpha * (r_upper / sums.pos);
        } else if (ab.alpha != 0.0 && r_upper != 0.0) {
            dropped = true;
            if (stats) stats->dropped_relevance += ab.alpha * r_upper;
        }
        if (sums.neg != 0.0) {
            f.factor_neg = ab.beta * (r_upper / sums.neg);
        } else if (ab.beta != 0.0 && r_upper != 0.0) {
            dropped = true;
            if (stats) stats->dropped_relevance += ab.beta * r_upper;
        }
    }
    if (dropped && stats) ++stats->zero_denominator_columns;
    return f;
}

// One redistribution code path for every linear view of a layer.
//
// enumerate(j, emit) must call emit(lower_index, z_ij) for every contribution
// to upper neuron j, in the same order the forward pass accumulates them.
// bias_of(j) returns the bias weighted activation (bias * 1), consumed only
// under AbsorbBias; its share is discarded.
template <typename Enumerate, typename BiasOf>
void redistribute_columns(std::size_t upper_count, const double* r_upper, Enumerate&& enumerate,
                          BiasOf&& bias_of, const LrpConfig& cfg, Tensor& r_lower,
                          RelpropStats* stats) {
    const bool absorb = cfg.bias_policy == BiasPolicy::AbsorbBias;
    for (std::size_t j = 0; j < upper_count; ++j) {
        ColumnSums sums;
        enumerate(j, [&](std::size_t, double z) { sums.add(z); });
        const double bias_z = absorb ? bias_of(j) : 0.0;
        if (absorb) sums.add(bias_z);

        const ColumnFactors f = column_factors(sums, r_upper[j], cfg, stats);
        if (f.factor_pos == 0.0 && f.factor_neg == 0.0) continue;

        enumerate(j, [&](std::size_t i, double z) {
            if (z != 0.0) r_lower[i] += f.share(z);
        });
        if (absorb && bias_z != 0.0 && stats) stats->bias_absorbed += f.share(bias_z);
    }
}

Tensor redistribute_dense(const DenseLayer& d, const Tensor& input, const Tensor& r_upper,
                          const LrpConfig& cfg, RelpropStats* stats) {
    Tensor r_lower(input.shape());
    const std::size_t in_n = d.in_features();
    redistribute_columns(
        d.out_features(), r_upper.data(),
        [&](std::size_t j, auto&& emit) {
            const double* w = d.weight.data() + j * in_n;
            for (std::size_t i = 0; i < in_n; ++i) emit(i, input[i] * w[i]);
        },
        [&](std::size_t j) { return d.bias[j]; }, cfg, r_lower, stats);
    return r_lower;
}

Tensor redistribute_conv(const Conv2DLayer& c, const Tensor& input, const Tensor& r_upper,
                         const LrpConfig& cfg, RelpropStats* stats) {
    Tensor r_lower(input.shape());
    const std::size_t in_c = c.in_channels(), in_h = input.extent(1), in_w = input.extent(2);
    const std::size_t kh = c.kernel_h(), kw = c.kernel_w();
    const std::size_t oh = r_upper.extent(1), ow = r_upper.extent(2);

    redistribute_columns(
        r_upper.size(), r_upper.data(),
        [&](std::size_t j, auto&& emit) {
            const std::size_t oc = j / (oh * ow);
            const std::size_t oy = (j / ow) % oh;
            const std::size_t ox = j % ow;
            const std::ptrdiff_t base_y =
                static_cast<std::ptrdiff_t>(oy * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
            const std::ptrdiff_t base_x =
                static_cast<std::ptrdiff_t>(ox * c.stride) - static_cast<std::ptrdiff_t>(c.pad);
            for (std::size_t ic = 0; ic < in_c; ++ic) {
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const std::ptrdiff_t iy = base_y + static_cast<std::ptrdiff_t>(ky);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const std::ptrdiff_t ix = base_x + static_cast<std::ptrdiff_t>(kx);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
                        const std::size_t i = input.offset3(ic, static_cast<std::size_t>(iy),
                                                            static_cast<std::size_t>(ix));
                        emit(i, c.kernel.at4(oc, ic, ky, kx) * input[i]);
                    }
                }
            }
        },
        [&](std::size_t j) { return c.bias[j / (oh * ow)]; }, cfg, r_lower, stats);
    return r_lower;
}

Tensor redistribute_pool(const MaxPool2DLayer& p, const Tensor& input, const Tensor& r_upper) {
    Tensor r_lower(input.shape());
    for (std::size_t ch = 0; ch < r_upper.extent(0); ++ch) {
        for (std::size_t oy = 0; oy < r_upper.extent(1); ++oy) {
            for (std::size_t ox = 0; ox < r_upper.extent(2); ++ox) {
                const std::size_t winner =
                    maxpool_argmax(input, ch, oy * p.stride, ox * p.stride, p.window_h, p.window_w);
                r_lower[winner] += r_upper.at3(ch, oy, ox);
            }
        }
    }
    return r_lower;
}

void rescale_to(Tensor& t, double target) {
    const double s = t.sum();
    if (s == 0.0 || s == target) return;
    const double factor = target / s;
    for (double& v : t.values()) v *= factor;
}

}  // namespace

void LrpConfig::validate(bool require_conservation) const {
    if (const auto* eps = std::get_if<EpsilonRule>(&rule)) {
        if (!(eps->epsilon >= 0.0) || !std::isfinite(eps->epsilon)) {
            throw std::invalid_argument("lrp: epsilon must be finite and >= 0");
        }
    } else {
        const auto& ab = std::get<AlphaBetaRule>(rule);
        if (!std::isfinite(ab.alpha) || !std::isfinite(ab.beta)) {
            throw std::invalid_argument("lrp: alpha-beta requested with nonfinite parameters");
        }
        if (require_conservation && ab.alpha + ab.beta != 1.0) {
            throw std::invalid_argument("lrp: strict conservation requires alpha + beta = 1");
        }
    }
}

bool LrpConfig::conservation_expected() const {
    if (std::holds_alternative<EpsilonRule>(rule)) return true;
    const auto& ab = std::get<AlphaBetaRule>(rule);
    return ab.alpha + ab.beta == 1.0;
}

RelevanceMap relprop(const Network& net, const ActivationTrace& trace, const LrpConfig& cfg,
                     RelpropStats* stats) {
    cfg.validate();
    if (trace.entries.size() != net.layers.size()) {
        throw std::invalid_argument("relprop: trace has " + std::to_string(trace.entries.size()) +
                                    " entries for a network of " +
                                    std::to_string(net.layers.size()) + " layers");
    }
    if (!trace.entries.empty() && trace.entries.front().input.shape() != net.input_shape) {
        throw std::invalid_argument("relprop: trace input shape does not match the network");
    }
    const Tensor& output = trace.final_output();
    if (cfg.output_selector >= output.size()) {
        throw std::invalid_argument("relprop: output_selector " +
                                    std::to_string(cfg.output_selector) + " out of range for " +
                                    std::to_string(output.size()) + " outputs");
    }

    const double fx = output[cfg.output_selector];

    Tensor r(output.shape());
    r[cfg.output_selector] = fx;

    RelevanceMap map;
    map.layers.resize(net.layers.size());

    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& entry = trace.entries[l];
        if (entry.output.shape() != r.shape()) {
            throw std::invalid_argument("relprop: trace entry " + std::to_string(l) +
                                        " does not chain with the layer above");
        }
        struct Visitor {
            const Tensor& input;
            const Tensor& r_upper;
            const LrpConfig& cfg;
            RelpropStats* stats;

            Tensor operator()(const DenseLayer& d) const {
                return redistribute_dense(d, input, r_upper, cfg, stats);
            }
            Tensor operator()(const Conv2DLayer& c) const {
                return redistribute_conv(c, input, r_upper, cfg, stats);
            }
            Tensor operator()(const MaxPool2DLayer& p) const {
                return redistribute_pool(p, input, r_upper);
            }
            Tensor operator()(const ReLULayer&) const { return r_upper; }
            Tensor operator()(const FlattenLayer&) const {
                return r_upper.reshaped(input.shape());
            }
        };
        Tensor r_lower = std::visit(Visitor{entry.input, r, cfg, stats}, net.layers[l]);
        if (cfg.renormalize) rescale_to(r_lower, fx);
        map.layers[l] = r_lower;
        r = std::move(r_lower);
    }
    return map;
}

Tensor redistribute_linear(const Tensor& z, const Tensor& r_upper, const LrpConfig& cfg,
                           RelpropStats* stats) {
    cfg.validate();
    if (z.rank() != 2) {
        throw std::invalid_argument("redistribute_linear: z must be rank-2 [lower, upper]");
    }
    const std::size_t lower = z.extent(0), upper = z.extent(1);
    if (r_upper.size() != upper) {
        throw std::invalid_argument("redistribute_linear: r_upper length " +
                                    std::to_string(r_upper.size()) + " does not match columns " +
                                    std::to_string(upper));
    }
    Tensor r_lower({lower});
    redistribute_columns(
        upper, r_upper.data(),
        [&](std::size_t j, auto&& emit) {
            for (std::size_t i = 0; i < lower; ++i) emit(i, z.at2(i, j));
        },
        [](std::size_t) { return 0.0; }, cfg, r_lower, stats);
    return r_lower;
}

Tensor redistribute_maxpool(const Tensor& window_values, double r_out) {
    if (window_values.size() == 0) {
        throw std::invalid_argument("redistribute_maxpool: empty window");
    }
    Tensor out(window_values.shape());
    std::size_t best = 0;
    for (std::size_t i = 1; i < window_values.size(); ++i) {
        if (window_values[i] > window_values[best]) best = i;
    }
    out[best] = r_out;
    return out;
}

RelevanceMap renormalize(const RelevanceMap& rel, double target,
                         std::vector<std::size_t>* skipped_layers) {
    RelevanceMap out;
    out.layers.reserve(rel.layers.size());
    for (std::size_t l = 0; l < rel.layers.size(); ++l) {
        Tensor t = rel.layers[l];
        const double s = t.sum();
        if (s == target) {
            // already conserved: bit-identical pass-through
        } else if (s == 0.0) {
            if (target != 0.0 && skipped_layers) skipped_layers->push_back(l);
        } else {
            const double factor = target / s;
            for (double& v : t.values()) v *= factor;
        }
        out.layers.push_back(std::move(t));
    }
    return out;
}

ConservationReport check_conservation(const RelevanceMap& rel, double fx, double tol) {
    ConservationReport report;
    report.reference_score = fx;
    report.tolerance = tol;
    const double floor = std::max(std::abs(fx), std::numeric_limits<double>::min());
    for (const Tensor& t : rel.layers) {
        const double s = t.sum();
        report.layer_sums.push_back(s);
        report.max_rel_drift = std::max(report.max_rel_drift, std::abs(s - fx) / floor);
    }
    report.passed = report.max_rel_drift <= tol;
    return report;
}

}  // namespace relmap
