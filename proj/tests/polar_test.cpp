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
#include <random>

#include <gtest/gtest.h>

#include "mqpolar/polar.hpp"
#include "oracles.hpp"

using namespace mqpolar;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64 &gen) {
    std::vector<std::uint8_t> v(n);
    for (auto &b : v)
        b = static_cast<std::uint8_t>(gen() & 1u);
    return v;
}

oracle::BitMatrix encoder_matrix(int n) {
    return oracle::multiply(oracle::kernel_power(n), oracle::bit_reversal_matrix(n));
}

oracle::HiddenChannel hidden(const MarkovianCqChannel &ch) {
    oracle::HiddenChannel h;
    h.states = ch.num_states();
    h.k = ch.chain.dense();
    h.pi = ch.chain.stationary();
    InducedLaw law = ch.law;
    h.like = [law](int y, int x, std::size_t s) { return law.prob(static_cast<Symbol>(y), x, s); };
    return h;
}

std::vector<int> as_ints(const std::vector<Symbol> &y) {
    std::vector<int> v;
    for (auto s : y)
        v.push_back(static_cast<int>(s));
    return v;
}

// Posteriors of every index by brute force, with the decoder's own decisions as the past.
void expect_matches_enumeration(const MarkovianCqChannel &ch, int n, std::uint64_t seed, double tol) {
    const std::size_t N = std::size_t{1} << n;
    auto code = PolarCode::full(n);
    auto enc = encoder_matrix(n);
    auto h = hidden(ch);
    std::mt19937_64 gen(seed);
    for (int block = 0; block < 6; ++block) {
        auto msg = random_bits(N, gen);
        auto rec = transmit(ch, encode(code, msg), gen(), true);
        auto y = as_ints(rec.outputs);
        if (oracle::path_sum(h, y, rec.inputs) == 0.0)
            continue;
        ChannelDecoder dec(ch, n, DecodeMode::trellis);
        auto res = dec.decode(code, rec.outputs);
        for (std::size_t i = 0; i < N; ++i) {
            double ref = oracle::enumerate_posterior(h, enc, y, res.u, i);
            if (std::isnan(ref))
                break; // past decisions already inconsistent with y
            EXPECT_NEAR(res.posteriors[i], ref, tol) << "block " << block << " index " << i;
        }
        // genie feedback makes the past the true bits
        auto genie = dec.decode(code, rec.outputs, {}, code.place(msg));
        for (std::size_t i = 0; i < N; ++i)
            EXPECT_NEAR(genie.posteriors[i], oracle::enumerate_posterior(h, enc, y, code.place(msg), i), tol);
    }
}

} // namespace

TEST(Transform, MatchesDenseMatrices) {
    std::mt19937_64 gen(3);
    for (int n = 0; n <= 7; ++n) {
        const std::size_t N = std::size_t{1} << n;
        auto G = oracle::kernel_power(n);
        auto F = oracle::bit_reversal_matrix(n);
        auto FG = oracle::multiply(F, G);
        auto GF = oracle::multiply(G, F);
        EXPECT_EQ(FG, GF) << "F and G commute";
        for (int t = 0; t < 10; ++t) {
            auto v = random_bits(N, gen);
            EXPECT_EQ(polar_transform(v), oracle::row_times(v, FG));
            EXPECT_EQ(inverse_polar_transform(v), oracle::row_times(v, GF));
            EXPECT_EQ(polar_transform(inverse_polar_transform(v)), v);
            EXPECT_EQ(polar_transform(polar_transform(v)), v);
        }
    }
}

TEST(Transform, InvolutionUpTo1024) {
    std::mt19937_64 gen(4);
    for (int n = 8; n <= 10; ++n) {
        const std::size_t N = std::size_t{1} << n;
        for (int t = 0; t < 1000; ++t) {
            auto v = random_bits(N, gen);
            ASSERT_EQ(polar_transform(inverse_polar_transform(v)), v) << "N=" << N;
            ASSERT_EQ(inverse_polar_transform(polar_transform(v)), v) << "N=" << N;
        }
    }
}

TEST(Transform, BitReversal) {
    EXPECT_EQ(bit_reverse(1, 3), 4u);
    EXPECT_EQ(bit_reverse(6, 3), 3u);
    auto perm = oracle::reverse_shuffle_perm(64);
    for (std::size_t j = 0; j < 64; ++j)
        EXPECT_EQ(bit_reverse(j, 6), perm[j]);
}

TEST(Transform, RejectsNonPowerOfTwo) {
    std::vector<std::uint8_t> v(6);
    try {
        polar_transform(v);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::shape);
    }
    EXPECT_THROW(inverse_polar_transform(std::vector<std::uint8_t>{}), Error);
}

TEST(Code, PlaceExtractAndValidation) {
    auto code = PolarCode::make(3, {7, 3, 5, 6}, {1, 0, 1, 1});
    EXPECT_EQ(code.info_set(), (std::vector<std::size_t>{3, 5, 6, 7}));
    EXPECT_DOUBLE_EQ(code.rate(), 0.5);
    EXPECT_EQ(code.frozen_values(), (std::vector<std::uint8_t>{1, 0, 1, 1}));
    std::vector<std::uint8_t> msg{1, 0, 1, 1};
    auto u = code.place(msg);
    EXPECT_EQ(u, (std::vector<std::uint8_t>{1, 0, 1, 1, 1, 0, 1, 1}));
    EXPECT_EQ(code.extract(u), msg);
    EXPECT_THROW(PolarCode::make(3, {1, 1}), Error);
    EXPECT_THROW(PolarCode::make(3, {8}), Error);
    EXPECT_THROW(PolarCode::make(3, {1}, {0, 0}), Error);
    EXPECT_THROW(code.place(std::vector<std::uint8_t>{1}), Error);
}

TEST(ScalarDecoder, NoiselessRecoversMessage) {
    std::mt19937_64 gen(5);
    auto ch = build_bec(0.0, true);
    for (int n : {1, 4, 10}) {
        const std::size_t N = std::size_t{1} << n;
        std::vector<std::size_t> info;
        for (std::size_t i = 0; i < N; i += 2)
            info.push_back(i);
        auto code = PolarCode::make(n, info);
        auto msg = random_bits(code.dimension(), gen);
        auto rec = transmit(ch, encode(code, msg), 1);
        auto res = sc_decode_csi(ch, code, rec.outputs, *rec.states);
        EXPECT_EQ(res.message, msg);
        EXPECT_TRUE(res.live);
    }
}

TEST(ScalarDecoder, MemorylessPosteriorsMatchEnumeration) {
    auto bsc = assemble(finite_chain_spec(FiniteMarkovChain({{{0, 1.0}}})), NoiseSpec::depolarizing({0.3}), true);
    auto enc = encoder_matrix(3);
    auto h = hidden(bsc);
    auto code = PolarCode::full(3);
    std::mt19937_64 gen(8);
    for (int block = 0; block < 10; ++block) {
        auto msg = random_bits(8, gen);
        auto rec = transmit(bsc, encode(code, msg), gen());
        auto res = sc_decode_csi(bsc, code, rec.outputs, *rec.states);
        for (std::size_t i = 0; i < 8; ++i)
            EXPECT_NEAR(res.posteriors[i], oracle::enumerate_posterior(h, enc, as_ints(rec.outputs), res.u, i), 1e-12);
    }
}

TEST(TrellisDecoder, MatchesEnumerationErasure) {
    expect_matches_enumeration(build_ge_qec(0.1, 0.3, 0.1, 0.6), 2, 1, 1e-9);
    expect_matches_enumeration(build_ge_qec(0.2, 0.4, 0.3, 0.7), 3, 2, 1e-9);
}

TEST(TrellisDecoder, MatchesEnumerationBinary) {
    auto ch = build_queue_channel(0.5, 1.0, [](std::size_t s) { return 0.1 + 0.3 * s; }, 2);
    expect_matches_enumeration(ch, 2, 3, 1e-9);
    expect_matches_enumeration(ch, 3, 4, 1e-9);
}

TEST(TrellisDecoder, SingleStateEqualsScalar) {
    std::mt19937_64 gen(12);
    for (auto ch : {build_bec(0.4), assemble(finite_chain_spec(FiniteMarkovChain({{{0, 1.0}}})),
                                             NoiseSpec::depolarizing({0.2}), true)}) {
        const int n = 8;
        auto code = PolarCode::full(n);
        auto rec = transmit(ch, encode(code, random_bits(256, gen)), gen(), true);
        ChannelDecoder scalar(ch, n, DecodeMode::state_known), trellis(ch, n, DecodeMode::trellis);
        auto a = scalar.decode(code, rec.outputs, *rec.states);
        auto b = trellis.decode(code, rec.outputs);
        EXPECT_EQ(a.u, b.u);
        for (std::size_t i = 0; i < a.posteriors.size(); ++i)
            EXPECT_NEAR(a.posteriors[i], b.posteriors[i], 1e-12);
        EXPECT_NEAR(a.log2_evidence, b.log2_evidence, 1e-9);
    }
}

TEST(TrellisDecoder, IidStatesEqualAveragedMemorylessChannel) {
    // with k01 = k10 = 1/2 the state sequence is iid uniform
    auto ge = build_ge_qec(0.5, 0.5, 0.2, 0.6);
    auto bec = build_bec(0.4);
    std::mt19937_64 gen(13);
    const int n = 7;
    auto code = PolarCode::full(n);
    for (int block = 0; block < 5; ++block) {
        auto rec = transmit(ge, encode(code, random_bits(128, gen)), gen());
        auto a = sc_decode_trellis(ge, code, rec.outputs);
        std::vector<std::uint32_t> zeros(128, 0);
        auto b = ChannelDecoder(bec, n, DecodeMode::state_known).decode(code, rec.outputs, zeros);
        EXPECT_EQ(a.u, b.u);
        for (std::size_t i = 0; i < 128; ++i)
            EXPECT_NEAR(a.posteriors[i], b.posteriors[i], 1e-12);
    }
}

TEST(TrellisDecoder, ErasurePosteriorsAreExact) {
    auto ch = build_ge_qec(0.1, 0.3, 0.1, 0.6);
    std::mt19937_64 gen(14);
    auto code = PolarCode::full(9);
    auto msg = random_bits(512, gen);
    auto rec = transmit(ch, encode(code, msg), gen());
    auto res = sc_decode_trellis(ch, code, rec.outputs);
    for (double p : res.posteriors) {
        double d = std::min({std::abs(p), std::abs(p - 0.5), std::abs(p - 1.0)});
        EXPECT_LT(d, 1e-12);
    }
}

TEST(TrellisDecoder, EvidenceMatchesPathSum) {
    for (auto ch : {build_ge_qec(0.1, 0.3, 0.2, 0.7),
                    build_queue_channel(0.5, 1.0, [](std::size_t s) { return 0.1 + 0.3 * s; }, 2)}) {
        auto h = hidden(ch);
        auto enc = encoder_matrix(2);
        std::mt19937_64 gen(15);
        auto code = PolarCode::full(2);
        for (int block = 0; block < 8; ++block) {
            auto rec = transmit(ch, encode(code, random_bits(4, gen)), gen());
            auto y = as_ints(rec.outputs);
            double py = 0.0;
            for (std::size_t u = 0; u < 16; ++u) {
                std::vector<std::uint8_t> bits{static_cast<std::uint8_t>(u & 1), static_cast<std::uint8_t>((u >> 1) & 1),
                                               static_cast<std::uint8_t>((u >> 2) & 1),
                                               static_cast<std::uint8_t>((u >> 3) & 1)};
                py += oracle::path_sum(h, y, oracle::row_times(bits, enc)) / 16.0;
            }
            auto res = sc_decode_trellis(ch, code, rec.outputs);
            EXPECT_NEAR(res.log2_evidence, std::log2(py), 1e-9);
        }
    }
}

TEST(TrellisDecoder, LongBlockStaysFinite) {
    const int n = 14;
    const std::size_t N = std::size_t{1} << n;
    std::mt19937_64 gen(16);
    auto code = PolarCode::full(n);
    for (auto ch : {build_ge_qec(0.1, 0.3, 0.99, 0.99),
                    build_queue_channel(0.5, 1.0, [](std::size_t s) { return s == 0 ? 0.99 : 0.98; }, 3)}) {
        auto rec = transmit(ch, encode(code, random_bits(N, gen)), gen());
        auto res = sc_decode_trellis(ch, code, rec.outputs);
        EXPECT_TRUE(res.live);
        EXPECT_TRUE(std::isfinite(res.log2_evidence));
        EXPECT_LT(res.log2_evidence, 0.0);
        for (double p : res.posteriors)
            ASSERT_TRUE(p >= 0.0 && p <= 1.0);
    }
}

TEST(Decoder, RateZeroCode) {
    auto ch = build_ge_qec(0.1, 0.3, 0.2, 0.5);
    auto code = PolarCode::make(4, {}, std::vector<std::uint8_t>(16, 1));
    auto rec = transmit(ch, encode(code, {}), 2);
    auto res = sc_decode_trellis(ch, code, rec.outputs);
    EXPECT_TRUE(res.message.empty());
    EXPECT_EQ(res.u, std::vector<std::uint8_t>(16, 1));
}

TEST(Decoder, Errors) {
    auto ge = build_ge_qec(0.1, 0.3, 0.2, 0.5);
    auto code = PolarCode::full(3);
    std::vector<Symbol> y(8, Symbol::zero);
    try {
        sc_decode_csi(ge, code, y, {});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
    }
    std::vector<Symbol> short_y(4, Symbol::zero);
    EXPECT_THROW(sc_decode_trellis(ge, code, short_y), Error);
    try {
        sc_decode_trellis(ge, code, y, TrellisBudget{1, 1u << 30});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::resource);
        EXPECT_NE(std::string(e.what()).find("truncate"), std::string::npos);
    }
    auto rec = transmit(ge, encode(code, std::vector<std::uint8_t>(8, 0)), 1);
    EXPECT_THROW(genie_posteriors(ge, code, rec, std::vector<std::uint8_t>(8, 1)), Error);
}

TEST(Genie, BecSyntheticErasureRates) {
    const int n = 6;
    const std::size_t N = 64;
    const double eps = 0.4;
    auto ch = build_bec(eps);
    auto code = PolarCode::full(n);
    auto z = oracle::bec_recursion(n, eps);
    std::vector<double> erased(N, 0.0);
    const int trials = 20000;
    ChannelDecoder dec(ch, n, DecodeMode::trellis);
    std::mt19937_64 gen(17);
    for (int t = 0; t < trials; ++t) {
        auto msg = random_bits(N, gen);
        auto u = code.place(msg);
        auto rec = transmit(ch, encode(code, msg), gen());
        auto res = dec.decode(code, rec.outputs, {}, u);
        for (std::size_t i = 0; i < N; ++i)
            erased[i] += res.posteriors[i] == 0.5;
    }
    for (std::size_t i = 0; i < N; ++i) {
        double sigma = std::sqrt(z[i] * (1 - z[i]) / trials);
        EXPECT_NEAR(erased[i] / trials, z[i], 4 * sigma + 1e-12) << "index " << i;
    }
}

TEST(Genie, PosteriorsFromRecord) {
    auto ch = build_ge_qec(0.1, 0.3, 0.1, 0.6);
    std::mt19937_64 gen(18);
    auto code = PolarCode::full(5);
    auto msg = random_bits(32, gen);
    auto rec = transmit(ch, encode(code, msg), 4);
    auto post = genie_posteriors(ch, code, rec, msg);
    ASSERT_EQ(post.size(), 32u);
    auto u = code.place(msg);
    // a genie-aided erasure posterior never points at the wrong bit
    for (std::size_t i = 0; i < 32; ++i)
        EXPECT_NE(post[i], u[i] ? 0.0 : 1.0);
}
