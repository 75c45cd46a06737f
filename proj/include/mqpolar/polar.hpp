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

// Arikan polar transform and successive-cancellation decoding.
//
// Codewords are X = U G_N F_N, i.e. U = X F_N G_N with F_N the bit-reversal
// permutation and G_N the n-fold Kronecker power of [[1,0],[1,1]]. In the
// bit-reversed domain X' = X F_N the usual butterfly X' = U G_N applies, and
// each butterfly stage pairs two *adjacent* blocks of channel outputs. That
// lets one recursion serve both decoders:
//
//  - ScalarKernel: leaves are P(y_i | x, s_i) with the state path known;
//  - TrellisKernel: leaves are |S|x|S| matrices
//        M[x](s, s') = [s == s'] P(y_i | x, s),
//    and a butterfly joining an earlier block A to a later block B forms
//        M[a](s, s') = sum_b (A[a^b] K B[b])(s, s')      (check node)
//        M[b](s, s') = (A[u^b] K B[b])(s, s')            (bit node, u decided)
//    so that pi^T M[a] 1 is proportional to P(u_i = a, y | u_0..u_{i-1}).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "mqpolar/channels.hpp"
#include "mqpolar/error.hpp"

namespace mqpolar {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
    require(is_power_of_two(n), ErrorKind::shape, fmt::format("length {} is not a power of two", n));
    int k = 0;
    while ((std::size_t{1} << k) < n)
        ++k;
    return k;
}

inline std::size_t bit_reverse(std::size_t i, int bits) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b)
        r |= ((i >> b) & 1u) << (bits - 1 - b);
    return r;
}

namespace detail {

inline void butterfly(std::vector<std::uint8_t> &v) {
    for (std::size_t h = 1; h < v.size(); h *= 2)
        for (std::size_t i = 0; i < v.size(); i += 2 * h)
            for (std::size_t j = i; j < i + h; ++j)
                v[j] ^= v[j + h];
}

inline std::vector<std::uint8_t> bit_reversed(std::span<const std::uint8_t> bits) {
    const int n = log2_exact(bits.size());
    std::vector<std::uint8_t> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i] = bits[bit_reverse(i, n)] & 1u;
    return out;
}

} // namespace detail

/// bits * F_N * G_N over GF(2).
inline std::vector<std::uint8_t> polar_transform(std::span<const std::uint8_t> bits) {
    auto v = detail::bit_reversed(bits);
    detail::butterfly(v);
    return v;
}

/// bits * G_N * F_N, the inverse of polar_transform.
inline std::vector<std::uint8_t> inverse_polar_transform(std::span<const std::uint8_t> bits) {
    log2_exact(bits.size());
    std::vector<std::uint8_t> v(bits.begin(), bits.end());
    for (auto &b : v)
        b &= 1u;
    detail::butterfly(v);
    return detail::bit_reversed(v);
}

/// Blocklength 2^n with an information set; every other index is frozen to
/// a known bit (0 unless given).
class PolarCode {
public:
    static PolarCode make(int n, std::vector<std::size_t> info_set, std::vector<std::uint8_t> frozen_values = {}) {
        require(n >= 0 && n <= 30, ErrorKind::domain, fmt::format("log2 blocklength {} out of range", n));
        PolarCode c;
        c.n_ = n;
        const std::size_t N = std::size_t{1} << n;
        std::sort(info_set.begin(), info_set.end());
        require(std::adjacent_find(info_set.begin(), info_set.end()) == info_set.end(), ErrorKind::validation,
                "information set has repeated indices");
        require(info_set.empty() || info_set.back() < N, ErrorKind::validation, "information index out of range");
        c.info_mask_.assign(N, 0);
        for (auto i : info_set)
            c.info_mask_[i] = 1;
        c.info_ = std::move(info_set);
        c.frozen_.assign(N, 0);
        const std::size_t n_frozen = N - c.info_.size();
        require(frozen_values.empty() || frozen_values.size() == n_frozen, ErrorKind::shape,
                fmt::format("expected {} frozen values, got {}", n_frozen, frozen_values.size()));
        if (!frozen_values.empty()) {
            std::size_t k = 0;
            for (std::size_t i = 0; i < N; ++i)
                if (!c.info_mask_[i]) {
                    require(frozen_values[k] <= 1, ErrorKind::validation, "frozen values must be bits");
                    c.frozen_[i] = frozen_values[k++];
                }
        }
        return c;
    }

    /// Every index carries information.
    static PolarCode full(int n) {
        std::vector<std::size_t> all(std::size_t{1} << n);
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        return make(n, std::move(all));
    }

    int n() const { return n_; }
    std::size_t length() const { return info_mask_.size(); }
    const std::vector<std::size_t> &info_set() const { return info_; }
    std::size_t dimension() const { return info_.size(); }
    double rate() const { return static_cast<double>(info_.size()) / static_cast<double>(length()); }
    bool is_info(std::size_t i) const { return info_mask_[i] != 0; }
    std::uint8_t frozen_value(std::size_t i) const { return frozen_[i]; }

    /// Values of the frozen indices, ascending by index.
    std::vector<std::uint8_t> frozen_values() const {
        std::vector<std::uint8_t> v;
        for (std::size_t i = 0; i < length(); ++i)
            if (!is_info(i))
                v.push_back(frozen_[i]);
        return v;
    }

    /// Full U vector: message on the information set, frozen values elsewhere.
    std::vector<std::uint8_t> place(std::span<const std::uint8_t> message) const {
        require(message.size() == dimension(), ErrorKind::shape,
                fmt::format("message length {} differs from code dimension {}", message.size(), dimension()));
        std::vector<std::uint8_t> u = frozen_;
        for (std::size_t k = 0; k < info_.size(); ++k)
            u[info_[k]] = message[k] & 1u;
        return u;
    }

    std::vector<std::uint8_t> extract(std::span<const std::uint8_t> u) const {
        std::vector<std::uint8_t> m(info_.size());
        for (std::size_t k = 0; k < info_.size(); ++k)
            m[k] = u[info_[k]];
        return m;
    }

    bool operator==(const PolarCode &o) const { return n_ == o.n_ && info_ == o.info_ && frozen_ == o.frozen_; }

private:
    int n_ = 0;
    std::vector<std::size_t> info_;
    std::vector<std::uint8_t> info_mask_;
    std::vector<std::uint8_t> frozen_;
};

inline std::vector<std::uint8_t> encode(const PolarCode &code, std::span<const std::uint8_t> message) {
    auto u = code.place(message);
    return inverse_polar_transform(u);
}

/// Per-element layout: [P(0), P(1), log2 scale].
struct ScalarKernel {
    std::size_t stride() const { return 3; }

    void check(const double *a, const double *b, double *out) const {
        out[0] = a[0] * b[0] + a[1] * b[1];
        out[1] = a[1] * b[0] + a[0] * b[1];
        finish(a, b, out);
    }

    void variable(const double *a, const double *b, int decided, double *out) const {
        out[0] = a[decided] * b[0];
        out[1] = a[decided ^ 1] * b[1];
        finish(a, b, out);
    }

    double weight(const double *e, int bit) const { return e[bit]; }

    static void set_leaf(double *e, double p0, double p1) {
        e[0] = p0;
        e[1] = p1;
        e[2] = 0.0;
    }

private:
    static void finish(const double *a, const double *b, double *out) {
        const double m = std::max(out[0], out[1]);
        out[2] = a[2] + b[2];
        if (m > 0.0) {
            out[0] /= m;
            out[1] /= m;
            out[2] += std::log2(m);
        }
    }
};

/// Per-element layout: M[0] (S*S, row-major), M[1] (S*S), log2 scale.
/// Holds per-decode scratch, so one instance per decoding thread.
class TrellisKernel {
public:
    TrellisKernel(std::vector<double> transition, std::vector<double> stationary)
        : s_(stationary.size()), k_(std::move(transition)), pi_(std::move(stationary)), ak0_(s_ * s_),
          ak1_(s_ * s_), tmp_(s_ * s_) {
        require(k_.size() == s_ * s_, ErrorKind::shape, "transition matrix does not match stationary vector");
    }

    std::size_t states() const { return s_; }
    std::size_t stride() const { return 2 * s_ * s_ + 1; }

    void check(const double *a, const double *b, double *out) {
        const std::size_t q = s_ * s_;
        mul(a, k_.data(), ak0_.data());
        mul(a + q, k_.data(), ak1_.data());
        mul(ak0_.data(), b, out);
        mul(ak1_.data(), b + q, tmp_.data());
        for (std::size_t k = 0; k < q; ++k)
            out[k] += tmp_[k];
        mul(ak1_.data(), b, out + q);
        mul(ak0_.data(), b + q, tmp_.data());
        for (std::size_t k = 0; k < q; ++k)
            out[q + k] += tmp_[k];
        finish(a, b, out);
    }

    void variable(const double *a, const double *b, int decided, double *out) {
        const std::size_t q = s_ * s_;
        mul(a + q * static_cast<std::size_t>(decided), k_.data(), ak0_.data());
        mul(a + q * static_cast<std::size_t>(decided ^ 1), k_.data(), ak1_.data());
        mul(ak0_.data(), b, out);
        mul(ak1_.data(), b + q, out + q);
        finish(a, b, out);
    }

    /// pi^T M[bit] 1
    double weight(const double *e, int bit) const {
        const double *m = e + s_ * s_ * static_cast<std::size_t>(bit);
        double w = 0.0;
        for (std::size_t i = 0; i < s_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < s_; ++j)
                row += m[i * s_ + j];
            w += pi_[i] * row;
        }
        return w;
    }

    /// Diagonal leaf from per-state likelihoods of x = 0 and x = 1.
    void set_leaf(double *e, std::span<const double> like0, std::span<const double> like1) const {
        const std::size_t q = s_ * s_;
        std::fill(e, e + 2 * q + 1, 0.0);
        for (std::size_t s = 0; s < s_; ++s) {
            e[s * s_ + s] = like0[s];
            e[q + s * s_ + s] = like1[s];
        }
    }

private:
    void mul(const double *a, const double *b, double *c) const {
        for (std::size_t i = 0; i < s_; ++i) {
            double *crow = c + i * s_;
            std::fill(crow, crow + s_, 0.0);
            for (std::size_t k = 0; k < s_; ++k) {
                const double aik = a[i * s_ + k];
                if (aik == 0.0)
                    continue;
                const double *brow = b + k * s_;
                for (std::size_t j = 0; j < s_; ++j)
                    crow[j] += aik * brow[j];
            }
        }
    }

    void finish(const double *a, const double *b, double *out) const {
        const std::size_t q2 = 2 * s_ * s_;
        double m = 0.0;
        for (std::size_t k = 0; k < q2; ++k)
            m = std::max(m, out[k]);
        out[q2] = a[q2] + b[q2];
        if (m > 0.0) {
            const double inv = 1.0 / m;
            for (std::size_t k = 0; k < q2; ++k)
                out[k] *= inv;
            out[q2] += std::log2(m);
        }
    }

    std::size_t s_;
    std::vector<double> k_, pi_;
    std::vector<double> ak0_, ak1_, tmp_;
};

struct ScResult {
    std::vector<std::uint8_t> message;
    /// Decided (or, in genie mode, supplied) U vector.
    std::vector<std::uint8_t> u;
    /// P(u_i = 1 | y, [states,] u_0..u_{i-1}) for every index.
    std::vector<double> posteriors;
    /// log2 P(y [| states]) recovered from the normalisation bookkeeping.
    double log2_evidence = 0.0;
    /// False if some index saw zero likelihood under both hypotheses.
    bool live = true;
};

/// Successive cancellation over the butterfly with a pluggable likelihood
/// kernel. Workspaces live in the object; reuse it across blocks.
template <class Kernel>
class SuccessiveCancellation {
public:
    SuccessiveCancellation(Kernel kernel, int n)
        : kernel_(std::move(kernel)), n_(n), length_(std::size_t{1} << n), stride_(kernel_.stride()) {
        layers_.resize(static_cast<std::size_t>(n) + 1);
        bits_.resize(static_cast<std::size_t>(n) + 1);
        for (int d = 0; d <= n; ++d) {
            layers_[d].assign((length_ >> d) * stride_, 0.0);
            bits_[d].assign(length_ >> d, 0);
        }
    }

    Kernel &kernel() { return kernel_; }
    std::size_t length() const { return length_; }

    /// Storage of the leaf for channel use i (natural order).
    double *leaf(std::size_t i) { return layers_[0].data() + bit_reverse(i, n_) * stride_; }

    /// `genie`, when non-empty, supplies the true U vector; decisions then
    /// follow it instead of the posteriors.
    ScResult run(const PolarCode &code, std::span<const std::uint8_t> genie = {}) {
        require(code.length() == length_, ErrorKind::shape, "code length differs from decoder length");
        require(genie.empty() || genie.size() == length_, ErrorKind::shape, "genie vector has the wrong length");
        code_ = &code;
        genie_ = genie;
        out_ = ScResult{};
        out_.u.assign(length_, 0);
        out_.posteriors.assign(length_, 0.5);
        next_ = 0;
        descend(0);
        out_.message = code.extract(out_.u);
        return std::move(out_);
    }

private:
    void descend(int d) {
        const std::size_t len = length_ >> d;
        double *in = layers_[d].data();
        if (len == 1) {
            decide(in);
            bits_[d][0] = out_.u[next_ - 1];
            return;
        }
        const std::size_t half = len / 2;
        double *child = layers_[d + 1].data();
        for (std::size_t i = 0; i < half; ++i)
            kernel_.check(in + i * stride_, in + (i + half) * stride_, child + i * stride_);
        descend(d + 1);
        auto &cur = bits_[d];
        const auto &sub = bits_[d + 1];
        for (std::size_t i = 0; i < half; ++i)
            cur[half + i] = sub[i];
        for (std::size_t i = 0; i < half; ++i)
            kernel_.variable(in + i * stride_, in + (i + half) * stride_, cur[half + i], child + i * stride_);
        descend(d + 1);
        for (std::size_t i = 0; i < half; ++i) {
            cur[i] = cur[half + i] ^ sub[i];
            cur[half + i] = sub[i];
        }
    }

    void decide(const double *e) {
        const std::size_t i = next_++;
        const double w0 = kernel_.weight(e, 0), w1 = kernel_.weight(e, 1);
        const double total = w0 + w1;
        double p1 = 0.5;
        if (total > 0.0 && std::isfinite(total))
            p1 = w1 / total;
        else
            out_.live = false;
        out_.posteriors[i] = p1;
        if (i == 0)
            out_.log2_evidence = std::log2(total) + e[stride_ - 1] - static_cast<double>(length_);
        std::uint8_t bit;
        if (!code_->is_info(i))
            bit = code_->frozen_value(i);
        else if (!genie_.empty())
            bit = genie_[i] & 1u;
        else
            bit = p1 > 0.5 ? 1 : 0; // ties go to 0
        out_.u[i] = bit;
    }

    Kernel kernel_;
    int n_;
    std::size_t length_;
    std::size_t stride_;
    std::vector<std::vector<double>> layers_;
    std::vector<std::vector<std::uint8_t>> bits_;
    const PolarCode *code_ = nullptr;
    std::span<const std::uint8_t> genie_;
    ScResult out_;
    std::size_t next_ = 0;
};

struct TrellisBudget {
    std::size_t max_states = 64;
    std::size_t max_workspace_bytes = std::size_t{1} << 30;
};

enum class DecodeMode { state_known, trellis };

/// Decoder bound to one channel and blocklength; picks the scalar decoder
/// when states are observed and the matrix trellis otherwise.
class ChannelDecoder {
public:
    ChannelDecoder(const MarkovianCqChannel &channel, int n, std::optional<DecodeMode> mode = std::nullopt,
                   TrellisBudget budget = {})
        : channel_(&channel), mode_(mode.value_or(channel.csi ? DecodeMode::state_known : DecodeMode::trellis)) {
        if (mode_ == DecodeMode::state_known) {
            engine_.template emplace<SuccessiveCancellation<ScalarKernel>>(ScalarKernel{}, n);
            return;
        }
        const std::size_t S = channel.num_states();
        const std::size_t N = std::size_t{1} << n;
        const double bytes = 2.0 * static_cast<double>(N) * static_cast<double>(2 * S * S + 1) * sizeof(double);
        if (S > budget.max_states || bytes > static_cast<double>(budget.max_workspace_bytes))
            fail(ErrorKind::resource,
                 fmt::format("trellis decoding with {} states at N = {} exceeds the budget ({} states, {} MiB); "
                             "truncate the chain to fewer states",
                             S, N, budget.max_states, budget.max_workspace_bytes >> 20));
        auto &sc = engine_.template emplace<SuccessiveCancellation<TrellisKernel>>(
            TrellisKernel(channel.chain.dense(), channel.chain.stationary()), n);
        (void)sc;
        like0_.resize(S);
        like1_.resize(S);
    }

    DecodeMode mode() const { return mode_; }

    ScResult decode(const PolarCode &code, std::span<const Symbol> outputs, std::span<const std::uint32_t> states = {},
                    std::span<const std::uint8_t> genie = {}) {
        const auto &law = channel_->law;
        if (mode_ == DecodeMode::state_known) {
            auto &sc = std::get<SuccessiveCancellation<ScalarKernel>>(engine_);
            require(outputs.size() == sc.length(), ErrorKind::shape, "output length differs from blocklength");
            require(states.size() == outputs.size(), ErrorKind::validation,
                    "state-aware decoding needs the state path for every symbol");
            for (std::size_t i = 0; i < outputs.size(); ++i)
                ScalarKernel::set_leaf(sc.leaf(i), law.prob(outputs[i], 0, states[i]),
                                       law.prob(outputs[i], 1, states[i]));
            return sc.run(code, genie);
        }
        auto &sc = std::get<SuccessiveCancellation<TrellisKernel>>(engine_);
        require(outputs.size() == sc.length(), ErrorKind::shape, "output length differs from blocklength");
        const std::size_t S = like0_.size();
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            for (std::size_t s = 0; s < S; ++s) {
                like0_[s] = law.prob(outputs[i], 0, s);
                like1_[s] = law.prob(outputs[i], 1, s);
            }
            sc.kernel().set_leaf(sc.leaf(i), like0_, like1_);
        }
        return sc.run(code, genie);
    }

    ScResult decode(const PolarCode &code, const TransmissionRecord &rec, std::span<const std::uint8_t> genie = {}) {
        std::span<const std::uint32_t> st;
        if (rec.states)
            st = *rec.states;
        return decode(code, rec.outputs, st, genie);
    }

private:
    const MarkovianCqChannel *channel_;
    DecodeMode mode_;
    std::variant<std::monostate, SuccessiveCancellation<ScalarKernel>, SuccessiveCancellation<TrellisKernel>> engine_;
    std::vector<double> like0_, like1_;
};

/// Scalar SC given the state path: the channel is memoryless conditioned on it.
inline ScResult sc_decode_csi(const MarkovianCqChannel &channel, const PolarCode &code,
                              std::span<const Symbol> outputs, std::span<const std::uint32_t> states) {
    require(!states.empty(), ErrorKind::validation, "state-aware decoding needs the state path");
    ChannelDecoder dec(channel, code.n(), DecodeMode::state_known);
    return dec.decode(code, outputs, states);
}

/// SC over the hidden state with matrix likelihoods.
inline ScResult sc_decode_trellis(const MarkovianCqChannel &channel, const PolarCode &code,
                                  std::span<const Symbol> outputs, TrellisBudget budget = {}) {
    ChannelDecoder dec(channel, code.n(), DecodeMode::trellis, budget);
    return dec.decode(code, outputs);
}

/// Posteriors P(u_i = 1 | u_0..u_{i-1}, y) with the true past bits fed back.
inline std::vector<double> genie_posteriors(const MarkovianCqChannel &channel, const PolarCode &code,
                                            const TransmissionRecord &record,
                                            std::span<const std::uint8_t> true_message) {
    auto u = code.place(true_message);
    require(inverse_polar_transform(u) == record.inputs, ErrorKind::validation,
            "message does not encode to the recorded channel inputs");
    ChannelDecoder dec(channel, code.n());
    return dec.decode(code, record, u).posteriors;
}

} // namespace mqpolar
