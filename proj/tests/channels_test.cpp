// Copyright 2026 The mqpolar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "mqpolar/channels.hpp"

using namespace mqpolar;

namespace {

std::vector<std::uint8_t> alternating(std::size_t n) {
    std::vector<std::uint8_t> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = static_cast<std::uint8_t>(i % 2);
    return x;
}

} // namespace

TEST(Channel, GeQecConstruction) {
    auto ch = build_ge_qec(0.1, 0.3, 0.05, 0.6);
    EXPECT_EQ(ch.num_states(), 2u);
    EXPECT_FALSE(ch.csi);
    EXPECT_EQ(ch.law.mode, LawMode::erasure);
    EXPECT_NEAR(ch.chain.stationary()[0], 0.75, 1e-14);
    EXPECT_THROW(build_ge_qec(0.0, 0.3, 0.1, 0.2), Error);
    EXPECT_THROW(build_ge_qec(0.1, 0.3, 0.1, 1.2), Error);
}

TEST(Channel, NoiselessIsIdentity) {
    auto ch = build_bec(0.0);
    auto x = alternating(1000);
    auto rec = transmit(ch, x, 3);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_EQ(static_cast<int>(rec.outputs[i]), x[i]);
    auto dep = build_queue_channel(0.5, 1.0, [](std::size_t) { return 0.0; }, 10);
    auto rec2 = transmit(dep, x, 3);
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_EQ(static_cast<int>(rec2.outputs[i]), x[i]);
}

TEST(Channel, StateInformationIntegrity) {
    auto x = alternating(64);
    EXPECT_FALSE(transmit(build_ge_qec(0.1, 0.3, 0.1, 0.5), x, 1).states.has_value());
    EXPECT_TRUE(transmit(build_ge_qec(0.1, 0.3, 0.1, 0.5), x, 1, true).states.has_value());
    auto q = build_queue_channel(0.5, 1.0, [](std::size_t s) { return std::min(1.0, 0.1 * s); }, 20);
    auto rec = transmit(q, x, 1);
    ASSERT_TRUE(rec.states.has_value());
    EXPECT_EQ(rec.states->size(), x.size());
    for (auto s : *rec.states)
        EXPECT_LE(s, 20u);
}

TEST(Channel, Deterministic) {
    auto ch = build_ge_qec(0.1, 0.3, 0.1, 0.5);
    auto x = alternating(512);
    auto a = transmit(ch, x, 77, true), b = transmit(ch, x, 77, true), c = transmit(ch, x, 78, true);
    EXPECT_EQ(a.outputs, b.outputs);
    EXPECT_EQ(*a.states, *b.states);
    EXPECT_NE(a.outputs, c.outputs);
}

TEST(Channel, StatePathIsStationaryAtEveryPosition) {
    auto ch = build_ge_qec(0.1, 0.3, 0.1, 0.5);
    const int blocks = 20000;
    const std::size_t n = 16;
    std::vector<double> zeros(n, 0.0);
    Transmitter tx(ch);
    auto x = alternating(n);
    for (int b = 0; b < blocks; ++b) {
        auto rec = tx(x, derive_seed(9, static_cast<std::uint64_t>(b)), true);
        for (std::size_t i = 0; i < n; ++i)
            zeros[i] += (*rec.states)[i] == 0;
    }
    const double sigma = std::sqrt(0.75 * 0.25 / blocks);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(zeros[i] / blocks, 0.75, 4 * sigma) << "position " << i;
}

TEST(Channel, ErasedFractionIgnoresBurnIn) {
    auto ch = build_ge_qec(0.02, 0.06, 0.05, 0.6);
    auto x = alternating(200000);
    auto rec = transmit(ch, x, 31);
    auto fraction = [&](std::size_t from) {
        std::size_t e = 0;
        for (std::size_t i = from; i < rec.outputs.size(); ++i)
            e += rec.outputs[i] == Symbol::erased;
        return static_cast<double>(e) / static_cast<double>(rec.outputs.size() - from);
    };
    const double expected = 0.75 * 0.05 + 0.25 * 0.6;
    // bursts of mean length 1/0.06 inflate the variance well above binomial
    const double sigma = std::sqrt(expected * (1 - expected) / 200000.0) * 6;
    EXPECT_NEAR(fraction(0), expected, 4 * sigma);
    EXPECT_NEAR(fraction(1000), expected, 4 * sigma);
    EXPECT_NEAR(fraction(0), fraction(1000), 1000.0 / 199000.0);
}

TEST(Channel, OutputsAreConditionallyIndependentGivenStates) {
    // For adjacent positions with states (a, b), the joint erasure pattern must
    // factor as p_a p_b. Pearson chi-square over the four patterns, per state pair.
    const std::array<double, 2> p{0.2, 0.7};
    auto ch = build_ge_qec(0.2, 0.3, p[0], p[1]);
    Transmitter tx(ch);
    auto x = alternating(64);
    double counts[2][2][4] = {};
    for (int b = 0; b < 4000; ++b) {
        auto rec = tx(x, derive_seed(21, static_cast<std::uint64_t>(b)), true);
        const auto &s = *rec.states;
        // disjoint pairs keep the cells independent
        for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
            int e0 = rec.outputs[i] == Symbol::erased, e1 = rec.outputs[i + 1] == Symbol::erased;
            counts[s[i]][s[i + 1]][e0 * 2 + e1] += 1;
        }
    }
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
            double total = 0;
            for (double v : counts[a][c])
                total += v;
            ASSERT_GT(total, 1000);
            double chi2 = 0;
            for (int pat = 0; pat < 4; ++pat) {
                double pe0 = (pat >> 1) ? p[a] : 1 - p[a];
                double pe1 = (pat & 1) ? p[c] : 1 - p[c];
                double expect = total * pe0 * pe1;
                chi2 += (counts[a][c][pat] - expect) * (counts[a][c][pat] - expect) / expect;
            }
            // 3 degrees of freedom, 0.1% upper quantile
            EXPECT_LT(chi2, 16.27) << "states " << a << "," << c;
        }
}

TEST(Channel, ErasuresNeverFlipBits) {
    auto ch = build_ge_qec(0.1, 0.3, 0.3, 0.6);
    auto x = alternating(4096);
    auto rec = transmit(ch, x, 4);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rec.outputs[i] != Symbol::erased) {
            EXPECT_EQ(static_cast<int>(rec.outputs[i]), x[i]);
        }
    }
}

TEST(Channel, CrossoverRatePerState) {
    auto ch = build_queue_channel(0.5, 1.0, [](std::size_t s) { return s == 0 ? 0.1 : 0.6; }, 8);
    Transmitter tx(ch);
    std::vector<std::uint8_t> x(256, 0);
    double flips[2] = {}, seen[2] = {};
    for (int b = 0; b < 200; ++b) {
        auto rec = tx(x, derive_seed(5, static_cast<std::uint64_t>(b)));
        for (std::size_t i = 0; i < x.size(); ++i) {
            int k = (*rec.states)[i] == 0 ? 0 : 1;
            seen[k] += 1;
            flips[k] += rec.outputs[i] == Symbol::one;
        }
    }
    for (int k = 0; k < 2; ++k) {
        double q = k == 0 ? 0.05 : 0.3;
        EXPECT_NEAR(flips[k] / seen[k], q, 4 * std::sqrt(q * (1 - q) / seen[k]));
    }
}

TEST(Assemble, MatchesQueueBuilder) {
    auto p_fn = [](std::size_t s) { return std::min(1.0, 0.05 * static_cast<double>(s)); };
    const std::size_t level = 30;
    auto direct = build_queue_channel(0.6, 1.0, p_fn, level);
    std::vector<double> table(level + 1);
    for (std::size_t s = 0; s <= level; ++s)
        table[s] = p_fn(s);
    auto generic = assemble(mm1_arrival_chain(0.6, 1.0), NoiseSpec::depolarizing(table), true,
                            TruncationDirective{level, Augmentation::last_column});
    EXPECT_EQ(direct.chain, generic.chain);
    EXPECT_EQ(direct.noise, generic.noise);
    EXPECT_EQ(direct.law, generic.law);
    EXPECT_EQ(direct.provenance, generic.provenance);
}

TEST(Assemble, Errors) {
    auto spec = mm1_arrival_chain(0.6, 1.0);
    try {
        assemble(spec, NoiseSpec::erasure({0.1}), false);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
    try {
        assemble(spec, NoiseSpec::depolarizing({0.1}), false, TruncationDirective{10});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::unsupported);
    }
    try {
        mm1_arrival_chain(1.0, 1.0);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::structural);
    }
    EXPECT_THROW(assemble(finite_chain_spec(FiniteMarkovChain({{{1, 1.0}}, {{0, 1.0}}})), NoiseSpec::erasure({0.1}),
                          false),
                 Error);
}

TEST(Assemble, FiniteChainWithoutDirective) {
    auto ch = assemble(finite_chain_spec(ge_chain(0.1, 0.3), "ge"), NoiseSpec::erasure({0.05, 0.6}), false);
    auto ref = build_ge_qec(0.1, 0.3, 0.05, 0.6);
    EXPECT_EQ(ch.chain, ref.chain);
    EXPECT_EQ(ch.law, ref.law);
    EXPECT_FALSE(ch.provenance.has_value());
}
