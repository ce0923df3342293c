#include <doctest.h>

#include <stdexcept>

#include "relmap/lrp.hpp"
#include "support/random_nets.hpp"

using namespace relmap;

namespace {

LrpConfig epsilon_cfg(double eps, bool renorm = false) {
    LrpConfig cfg;
    cfg.rule = EpsilonRule{eps};
    cfg.bias_policy = BiasPolicy::IgnoreBias;
    cfg.renormalize = renorm;
    return cfg;
}

LrpConfig alphabeta_cfg(double alpha, double beta) {
    LrpConfig cfg;
    cfg.rule = AlphaBetaRule{alpha, beta};
    cfg.bias_policy = BiasPolicy::IgnoreBias;
    cfg.renormalize = false;
    return cfg;
}

}  // namespace

TEST_CASE("single dense output neuron: heatmap is x (.) w, bitwise") {
    Network net;
    net.input_shape = {4};
    DenseLayer d{Tensor({1, 4}, {0.3, -1.7, 2.5, 0.9}), Tensor({1})};
    net.layers.push_back(d);

    const Tensor x({4}, {0.11, 0.52, -0.73, 1.4});
    const auto trace = forward(net, x);
    const auto map = relprop(net, trace, epsilon_cfg(0.0));

    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(map.heatmap()[i] == x[i] * d.weight[i]);  // exact, not approximate
    }
    CHECK(map.heatmap().sum() == doctest::Approx(trace.final_output()[0]).epsilon(1e-15));
}

TEST_CASE("alpha-beta hand example: z+ = {2}, z- = {-1}, alpha=2, beta=-1") {
    // one upper neuron with one positive and one negative contributor
    const Tensor z({2, 1}, {2.0, -1.0});
    const Tensor r({1}, {1.0});
    const Tensor out = redistribute_linear(z, r, alphabeta_cfg(2.0, -1.0));
    CHECK(out[0] == 2.0);   // 2 * (2/2) * 1
    CHECK(out[1] == -1.0);  // -1 * ((-1)/(-1)) * 1
    CHECK(out.sum() == 1.0);
}

TEST_CASE("epsilon rule proportional split and zero-denominator sign convention") {
    SUBCASE("z = [3, 1], R = 4, eps = 0") {
        const Tensor z({2, 1}, {3.0, 1.0});
        const Tensor out = redistribute_linear(z, Tensor({1}, {4.0}), epsilon_cfg(0.0));
        CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("z = [2, -2], R = 1, eps = 0.5: sign(0) treated as +1") {
        const Tensor z({2, 1}, {2.0, -2.0});
        const Tensor out = redistribute_linear(z, Tensor({1}, {1.0}), epsilon_cfg(0.5));
        CHECK(out[0] == 4.0);
        CHECK(out[1] == -4.0);
    }
    SUBCASE("eps = 0 with a zero column denominator is a violation, not a crash") {
        const Tensor z({2, 1}, {2.0, -2.0});
        RelpropStats stats;
        const Tensor out = redistribute_linear(z, Tensor({1}, {1.0}), epsilon_cfg(0.0), &stats);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
        CHECK(stats.zero_denominator_columns == 1);
        CHECK(stats.dropped_relevance == 1.0);
    }
}

TEST_CASE("alpha=1/beta=0 equals the eps=0 rule when all z are positive") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t lower = 2 + uniform_index(rng, 8);
        const std::size_t upper = 1 + uniform_index(rng, 5);
        Tensor z({lower, upper});
        for (double& v : z.values()) v = uniform_range(rng, 0.01, 2.0);
        Tensor r({upper});
        for (double& v : r.values()) v = uniform_range(rng, -3.0, 3.0);

        const Tensor a = redistribute_linear(z, r, alphabeta_cfg(1.0, 0.0));
        const Tensor b = redistribute_linear(z, r, epsilon_cfg(0.0));
        for (std::size_t i = 0; i < lower; ++i) {
            CHECK(std::abs(a[i] - b[i]) <= 1e-12);
        }
    }
}

TEST_CASE("both rules are linear in the upper relevance") {
    std::mt19937_64 rng(1234);
    Tensor z({6, 3});
    for (double& v : z.values()) v = uniform_range(rng, -1.0, 1.0);
    Tensor r({3});
    for (double& v : r.values()) v = uniform_range(rng, -2.0, 2.0);

    for (const LrpConfig& cfg : {epsilon_cfg(1e-9), alphabeta_cfg(2.0, -1.0)}) {
        const Tensor base = redistribute_linear(z, r, cfg);

        Tensor r2 = r;  // power-of-two scaling is exact in floating point
        for (double& v : r2.values()) v *= 4.0;
        const Tensor scaled = redistribute_linear(z, r2, cfg);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(scaled[i] == 4.0 * base[i]);
        }

        Tensor r3 = r;
        for (double& v : r3.values()) v *= 1.7;
        const Tensor scaled3 = redistribute_linear(z, r3, cfg);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(scaled3[i] == doctest::Approx(1.7 * base[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("engine matches the triple-loop oracle on random dense/ReLU nets") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // dense/ReLU variants only (2 and 3 mod 5)
        const auto inst = testnets::conditioned_instance(2 + 5 * seed, true);
        const auto trace = forward(inst.net, inst.input);

        for (const LrpConfig& cfg : {epsilon_cfg(0.0), alphabeta_cfg(2.0, -1.0)}) {
            const RelevanceMap map = relprop(inst.net, trace, cfg);
            const auto expect = oracle::relprop(inst.net, trace, cfg);
            REQUIRE(map.layers.size() == expect.size());
            for (std::size_t l = 0; l < expect.size(); ++l) {
                REQUIRE(map.layers[l].size() == expect[l].size());
                for (std::size_t i = 0; i < expect[l].size(); ++i) {
                    CHECK(std::abs(map.layers[l][i] - expect[l][i]) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("engine matches the oracle through conv, pool and absorbed biases") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Network net = testnets::random_network(seed, /*bias_free=*/false);
        const Tensor x = testnets::random_input(net, seed);
        const auto trace = forward(net, x);

        LrpConfig cfg;
        cfg.rule = seed % 2 ? std::variant<EpsilonRule, AlphaBetaRule>(EpsilonRule{1e-9})
                            : std::variant<EpsilonRule, AlphaBetaRule>(AlphaBetaRule{2.0, -1.0});
        cfg.bias_policy = BiasPolicy::AbsorbBias;
        cfg.renormalize = false;

        const RelevanceMap map = relprop(net, trace, cfg);
        const auto expect = oracle::relprop(net, trace, cfg);
        for (std::size_t l = 0; l < expect.size(); ++l) {
            for (std::size_t i = 0; i < expect[l].size(); ++i) {
                CHECK(std::abs(map.layers[l][i] - expect[l][i]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("maxpool redistribution is winner-take-all with lowest-index ties") {
    CHECK(redistribute_maxpool(Tensor({4}, {1, 3, 2, 0}), 5.0).values() ==
          std::vector<double>{0, 5, 0, 0});
    CHECK(redistribute_maxpool(Tensor({4}, {2, 2, 1, 1}), 1.0).values() ==
          std::vector<double>{1, 0, 0, 0});

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor w({1 + uniform_index(rng, 9)});
        for (double& v : w.values()) v = uniform_range(rng, -1, 1);
        const double r = uniform_range(rng, -2, 2);
        const Tensor out = redistribute_maxpool(w, r);
        CHECK(out.sum() == r);  // conservation by construction
    }
    CHECK_THROWS_AS(redistribute_maxpool(Tensor{}, 1.0), std::invalid_argument);
}

TEST_CASE("conservation: eligible configs stay within 1e-9 on bias-free nets") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = testnets::conditioned_instance(seed, true);
        const auto trace = forward(inst.net, inst.input);
        const double fx = trace.final_output()[0];

        for (const LrpConfig& cfg : {alphabeta_cfg(2.0, -1.0), epsilon_cfg(0.0)}) {
            RelpropStats stats;
            const RelevanceMap map = relprop(inst.net, trace, cfg, &stats);
            const auto report = check_conservation(map, fx, 1e-9);
            CAPTURE(seed);
            CHECK(stats.zero_denominator_columns == 0);
            CHECK(report.passed);
        }
    }
}

TEST_CASE("alpha=2/beta=0 breaks conservation visibly") {
    const auto inst = testnets::conditioned_instance(3, true);
    const auto trace = forward(inst.net, inst.input);
    const auto map = relprop(inst.net, trace, alphabeta_cfg(2.0, 0.0));
    const auto report = check_conservation(map, trace.final_output()[0], 1e-9);
    CHECK(report.max_rel_drift > 1e-3);
}

TEST_CASE("ReLU pass-through and Flatten inverse preserve total relevance exactly") {
    const auto inst = testnets::conditioned_instance(5, true);  // variant 0 has relu+flatten
    const auto trace = forward(inst.net, inst.input);
    const auto map = relprop(inst.net, trace, alphabeta_cfg(2.0, -1.0));
    for (std::size_t l = 0; l < inst.net.layers.size(); ++l) {
        const bool structural = std::holds_alternative<ReLULayer>(inst.net.layers[l]) ||
                                std::holds_alternative<FlattenLayer>(inst.net.layers[l]);
        if (!structural || l + 1 >= inst.net.layers.size()) continue;
        CHECK(map.layers[l].sum() == map.layers[l + 1].sum());
    }
}

TEST_CASE("renormalize rescales layer sums to the target") {
    SUBCASE("sum 2 -> target 1 halves every entry") {
        RelevanceMap rel;
        rel.layers.push_back(Tensor({4}, {0.5, 0.5, 0.5, 0.5}));
        const RelevanceMap out = renormalize(rel, 1.0);
        CHECK(out.layers[0].values() == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    }
    SUBCASE("already conserved maps pass through bit-identically") {
        RelevanceMap rel;
        rel.layers.push_back(Tensor({3}, {0.1, 0.7, 0.2}));
        const RelevanceMap out = renormalize(rel, 0.1 + 0.7 + 0.2);
        CHECK(out.layers[0] == rel.layers[0]);
    }
    SUBCASE("zero-sum layers are flagged and left unscaled") {
        RelevanceMap rel;
        rel.layers.push_back(Tensor({2}, {1.0, -1.0}));
        std::vector<std::size_t> skipped;
        const RelevanceMap out = renormalize(rel, 3.0, &skipped);
        CHECK(out.layers[0] == rel.layers[0]);
        CHECK(skipped == std::vector<std::size_t>{0});
    }
    SUBCASE("eps = 0.1 followed by renormalize reaches 1e-12 drift") {
        const auto inst = testnets::conditioned_instance(11, false);
        const auto trace = forward(inst.net, inst.input);
        const double fx = trace.final_output()[0];
        LrpConfig cfg = epsilon_cfg(0.1);
        cfg.bias_policy = BiasPolicy::AbsorbBias;
        const auto raw = relprop(inst.net, trace, cfg);
        const auto fixed = renormalize(raw, fx);
        CHECK(check_conservation(fixed, fx, 1e-12).passed);
    }
}

TEST_CASE("config validation") {
    LrpConfig cfg;
    cfg.rule = EpsilonRule{-1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg.rule = AlphaBetaRule{std::numeric_limits<double>::infinity(), -1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg.rule = AlphaBetaRule{2.0, 0.0};
    CHECK_NOTHROW(cfg.validate(false));
    CHECK_THROWS_AS(cfg.validate(true), std::invalid_argument);
    cfg.rule = AlphaBetaRule{2.0, -1.0};
    CHECK_NOTHROW(cfg.validate(true));
}

TEST_CASE("relprop rejects mismatched traces and bad selectors") {
    const auto inst = testnets::conditioned_instance(0, true);
    const auto trace = forward(inst.net, inst.input);

    LrpConfig cfg;
    cfg.output_selector = 1000;
    CHECK_THROWS_AS(relprop(inst.net, trace, cfg), std::invalid_argument);

    // a 3-layer net cannot consume a trace from a deeper stack
    const Network other = testnets::random_network(3, true);
    REQUIRE(other.layers.size() != inst.net.layers.size());
    CHECK_THROWS_AS(relprop(other, trace, LrpConfig{}), std::invalid_argument);
}
