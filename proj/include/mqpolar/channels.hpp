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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mqpolar/error.hpp"
#include "mqpolar/markov.hpp"
#include "mqpolar/qnoise.hpp"
#include "mqpolar/random.hpp"

namespace mqpolar {

struct TruncationDirective {
    std::size_t level = 0;
    Augmentation augmentation = Augmentation::last_column;

    bool operator==(const TruncationDirective &) const = default;
};

/// Hidden Markov noise state selecting a qubit noise map per channel use,
/// together with the classical law induced by product coding.
struct MarkovianCqChannel {
    std::string model_id;
    FiniteMarkovChain chain;
    NoiseSpec noise;
    InducedLaw law;
    bool csi = false;
    std::optional<TruncationDirective> provenance;

    std::size_t num_states() const { return chain.size(); }
};

/// Inputs, outputs and (with receiver CSI) the state path of one block.
struct TransmissionRecord {
    std::vector<std::uint8_t> inputs;
    std::vector<Symbol> outputs;
    std::optional<std::vector<std::uint32_t>> states;
};

namespace detail {

inline MarkovianCqChannel make_channel(std::string id, FiniteMarkovChain chain, NoiseSpec noise, bool csi,
                                       std::optional<TruncationDirective> provenance) {
    chain.stationary(); // rejects reducible / periodic chains up front
    auto law = induced_law(noise, csi, chain.size());
    for (std::size_t s = 0; s < law.num_states(); ++s) {
        for (int x = 0; x <= 1; ++x) {
            auto r = law.row(x, s);
            require(std::abs(r[0] + r[1] + r[2] - 1.0) <= kStochasticTol, ErrorKind::validation,
                    fmt::format("induced law row (x={}, s={}) is not a distribution", x, s));
        }
    }
    return {std::move(id), std::move(chain), std::move(noise), std::move(law), csi, provenance};
}

} // namespace detail

/// Gilbert-Elliott erasure channel: erasure probability p0 in state 0 and p1
/// in state 1. No state information at the receiver.
inline MarkovianCqChannel build_ge_qec(double k01, double k10, double p0, double p1) {
    auto chain = ge_chain(k01, k10);
    return detail::make_channel(fmt::format("ge-qec({},{},{},{})", k01, k10, p0, p1), std::move(chain),
                                NoiseSpec::erasure({p0, p1}), false, std::nullopt);
}

/// Memoryless erasure channel as a single-state chain.
inline MarkovianCqChannel build_bec(double p, bool csi = false) {
    return detail::make_channel(fmt::format("bec({})", p), FiniteMarkovChain({{{0, 1.0}}}), NoiseSpec::erasure({p}),
                                csi, std::nullopt);
}

/// Depolarizing noise whose strength depends on the queue length seen by each
/// arriving qubit of an M/M/1 queue; the receiver knows the queue length.
inline MarkovianCqChannel build_queue_channel(double lambda, double mu, const std::function<double(std::size_t)> &p_fn,
                                              std::size_t level,
                                              Augmentation augmentation = Augmentation::last_column) {
    require(level >= 1, ErrorKind::domain, "queue truncation level must be at least 1");
    auto spec = mm1_arrival_chain(lambda, mu);
    std::vector<double> table(level + 1);
    for (std::size_t s = 0; s <= level; ++s)
        table[s] = p_fn(s);
    return detail::make_channel(fmt::format("queue({},{})", lambda, mu), truncate_chain(spec, level, augmentation),
                                NoiseSpec::depolarizing(std::move(table)), true,
                                TruncationDirective{level, augmentation});
}

inline MarkovianCqChannel assemble(const CountableChainSpec &chain_spec, const NoiseSpec &noise, bool csi,
                                   std::optional<TruncationDirective> truncation = std::nullopt) {
    if (noise.unital())
        require(csi, ErrorKind::unsupported, "unital noise is only decodable with receiver state information");
    std::string id = chain_spec.name.empty() ? std::string(to_string(noise.family))
                                             : chain_spec.name + "+" + to_string(noise.family);
    if (!truncation) {
        require(chain_spec.is_finite(), ErrorKind::config, "countable chain needs a truncation directive");
        return detail::make_channel(std::move(id), truncate_chain(chain_spec, *chain_spec.finite_size - 1), noise, csi,
                                    std::nullopt);
    }
    require(truncation->level >= 1 || chain_spec.is_finite(), ErrorKind::config, "truncation level must be >= 1");
    return detail::make_channel(std::move(id), truncate_chain(chain_spec, truncation->level, truncation->augmentation),
                                noise, csi, truncation);
}

/// Sampler bound to one channel; reusable across blocks.
class Transmitter {
public:
    explicit Transmitter(const MarkovianCqChannel &channel) : channel_(&channel), paths_(channel.chain) {}

    /// `reveal_states` attaches the path even without CSI (genie experiments).
    TransmissionRecord operator()(std::span<const std::uint8_t> codeword, std::uint64_t seed,
                                  bool reveal_states = false) const {
        require(!codeword.empty(), ErrorKind::shape, "codeword must be non-empty");
        Rng path_rng(derive_seed(seed, "path"));
        Rng noise_rng(derive_seed(seed, "noise"));
        auto states = paths_.sample(codeword.size(), path_rng);
        TransmissionRecord rec;
        rec.inputs.assign(codeword.begin(), codeword.end());
        rec.outputs.resize(codeword.size());
        const auto &law = channel_->law;
        for (std::size_t i = 0; i < codeword.size(); ++i) {
            const int x = codeword[i] & 1;
            const double a = law.param[states[i]];
            const double u = noise_rng.uniform();
            if (law.mode == LawMode::erasure)
                rec.outputs[i] = u < a ? Symbol::erased : static_cast<Symbol>(x);
            else
                rec.outputs[i] = static_cast<Symbol>(u < a ? x ^ 1 : x);
        }
        if (channel_->csi || reveal_states)
            rec.states = std::move(states);
        return rec;
    }

private:
    const MarkovianCqChannel *channel_;
    PathSampler paths_;
};

inline TransmissionRecord transmit(const MarkovianCqChannel &channel, std::span<const std::uint8_t> codeword,
                                   std::uint64_t seed, bool reveal_states = false) {
    return Transmitter(channel)(codeword, seed, reveal_states);
}

} // namespace mqpolar
