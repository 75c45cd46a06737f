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

// Monte Carlo polarization estimates, code construction, closed-form
// capacities and block-error experiments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "mqpolar/channels.hpp"
#include "mqpolar/error.hpp"
#include "mqpolar/markov.hpp"
#include "mqpolar/parallel.hpp"
#include "mqpolar/polar.hpp"
#include "mqpolar/qnoise.hpp"
#include "mqpolar/random.hpp"

namespace mqpolar {

/// Per-index reliability of the synthetic channels u_i -> (u_0..u_{i-1}, y).
struct PolarizationEstimate {
    int n = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<double> z_hat;   // Bhattacharyya parameter
    std::vector<double> i_hat;   // mutual information, bits
    std::vector<double> err_hat; // genie-aided decision error rate
    // standard errors of the three means
    std::vector<double> z_se, i_se, err_se;

    std::size_t length() const { return z_hat.size(); }

    double mean_information() const {
        return std::accumulate(i_hat.begin(), i_hat.end(), 0.0) / static_cast<double>(i_hat.size());
    }

    /// Standard error of mean_information(), from per-trial block averages.
    double mean_information_se = 0.0;

    double fraction_i_above(double threshold) const {
        return static_cast<double>(std::count_if(i_hat.begin(), i_hat.end(), [&](double v) { return v > threshold; })) /
               static_cast<double>(i_hat.size());
    }

    double fraction_i_below(double threshold) const {
        return static_cast<double>(std::count_if(i_hat.begin(), i_hat.end(), [&](double v) { return v < threshold; })) /
               static_cast<double>(i_hat.size());
    }

    double fraction_z_below(double threshold) const {
        return static_cast<double>(std::count_if(z_hat.begin(), z_hat.end(), [&](double v) { return v < threshold; })) /
               static_cast<double>(z_hat.size());
    }
};

struct PolarizationOptions {
    std::optional<DecodeMode> mode;
    TrellisBudget budget;
};

/// Uniform U vectors are sent through the channel and decoded with the true
/// past bits fed back; per-index averages of sqrt(P(wrong)/P(true)), the
/// posterior entropy and the decision error are reported.
inline PolarizationEstimate estimate_polarization(const MarkovianCqChannel &channel, int n, std::uint64_t trials,
                                                  std::uint64_t seed, PolarizationOptions opts = {}) {
    require(trials >= 1000, ErrorKind::domain, "polarization estimates need at least 1e3 trials");
    const std::size_t N = std::size_t{1} << n;
    const auto code = PolarCode::full(n);
    const Transmitter tx(channel);

    struct Acc {
        std::vector<double> z, z2, h, h2, e;
        double block = 0.0, block2 = 0.0;
    };
    std::vector<Acc> shards(detail::kShards);
    detail::for_each_shard(trials, [&](std::size_t shard, std::size_t begin, std::size_t end) {
        Acc acc{std::vector<double>(N), std::vector<double>(N), std::vector<double>(N), std::vector<double>(N),
                std::vector<double>(N)};
        ChannelDecoder dec(channel, n, opts.mode, opts.budget);
        std::vector<std::uint8_t> u(N);
        for (std::size_t t = begin; t < end; ++t) {
            const std::uint64_t trial_seed = derive_seed(seed, t);
            Rng rng(derive_seed(trial_seed, "message"));
            for (auto &b : u)
                b = rng.bit();
            auto rec = tx(inverse_polar_transform(u), derive_seed(trial_seed, "channel"),
                          dec.mode() == DecodeMode::state_known);
            auto res = dec.decode(code, rec, u);
            double block = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double p1 = std::clamp(res.posteriors[i], 0.0, 1.0);
                const double p_true = u[i] ? p1 : 1.0 - p1;
                const double p_false = 1.0 - p_true;
                const double z = p_true > 0.0 ? std::min(1.0, std::sqrt(p_false / p_true)) : 1.0;
                const double h = binary_entropy(p1);
                const std::uint8_t decision = p1 > 0.5 ? 1 : 0;
                acc.z[i] += z;
                acc.z2[i] += z * z;
                acc.h[i] += h;
                acc.h2[i] += h * h;
                acc.e[i] += decision != u[i] ? 1.0 : 0.0;
                block += 1.0 - h;
            }
            block /= static_cast<double>(N);
            acc.block += block;
            acc.block2 += block * block;
        }
        shards[shard] = std::move(acc);
    });

    PolarizationEstimate est;
    est.n = n;
    est.trials = trials;
    est.seed = seed;
    est.z_hat.assign(N, 0.0);
    est.i_hat.assign(N, 0.0);
    est.err_hat.assign(N, 0.0);
    est.z_se.assign(N, 0.0);
    est.i_se.assign(N, 0.0);
    est.err_se.assign(N, 0.0);
    std::vector<double> z2(N, 0.0), h(N, 0.0), h2(N, 0.0);
    double block = 0.0, block2 = 0.0;
    for (const auto &acc : shards) {
        if (acc.z.empty())
            continue;
        for (std::size_t i = 0; i < N; ++i) {
            est.z_hat[i] += acc.z[i];
            z2[i] += acc.z2[i];
            h[i] += acc.h[i];
            h2[i] += acc.h2[i];
            est.err_hat[i] += acc.e[i];
        }
        block += acc.block;
        block2 += acc.block2;
    }
    const double T = static_cast<double>(trials);
    auto se = [T](double sum, double sum2) {
        const double m = sum / T;
        return std::sqrt(std::max(0.0, sum2 / T - m * m) / T);
    };
    for (std::size_t i = 0; i < N; ++i) {
        est.z_se[i] = se(est.z_hat[i], z2[i]);
        est.i_se[i] = se(h[i], h2[i]);
        est.err_se[i] = se(est.err_hat[i], est.err_hat[i]);
        est.z_hat[i] = std::clamp(est.z_hat[i] / T, 0.0, 1.0);
        est.i_hat[i] = std::clamp(1.0 - h[i] / T, 0.0, 1.0);
        est.err_hat[i] /= T;
    }
    est.mean_information_se = se(block, block2);
    return est;
}

/// The floor(rate * N) indices with smallest Z, ties broken by smaller error
/// estimate and then smaller index. Frozen bits are 0.
inline PolarCode select_information_set(const PolarizationEstimate &est, double rate) {
    require(rate >= 0.0 && rate <= 1.0, ErrorKind::domain, fmt::format("rate {} outside [0,1]", rate));
    const std::size_t N = est.length();
    const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(N) + 1e-9));
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (est.z_hat[a] != est.z_hat[b])
            return est.z_hat[a] < est.z_hat[b];
        if (est.err_hat[a] != est.err_hat[b])
            return est.err_hat[a] < est.err_hat[b];
        return a < b;
    });
    order.resize(std::min(k, N));
    return PolarCode::make(est.n, std::move(order));
}

struct CapacityReport {
    std::string model_id;
    std::string family;
    bool csi = false;
    /// Bits per channel use. For depolarizing noise without receiver CSI the
    /// capacity is unknown and this holds the upper bound.
    double capacity = 0.0;
    bool capacity_known = true;
    std::optional<std::pair<double, double>> bounds;
    double jensen_gap = 0.0;
    std::optional<TruncationDirective> provenance;
};

namespace detail {

// sum_s pi_s f(s), written as f(0) + sum_s pi_s (f(s) - f(0)) so that a
// constant f comes back exactly.
template <class F>
double expectation(std::span<const double> pi, F &&f) {
    const double f0 = f(std::size_t{0});
    double acc = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s)
        acc += pi[s] * (f(s) - f0);
    return f0 + acc;
}

inline double depolarizing_entropy(double p) { return binary_entropy(std::clamp(p / 2.0, 0.0, 1.0)); }

} // namespace detail

/// 1 - E_pi[p(K)]
inline CapacityReport capacity_erasure(const FiniteMarkovChain &chain, const std::function<double(std::size_t)> &p_fn) {
    const auto &pi = chain.stationary();
    CapacityReport r;
    r.family = "erasure";
    r.capacity = 1.0 - detail::expectation(pi, p_fn);
    return r;
}

/// E_pi[chi(N_K)] with receiver state information.
inline CapacityReport capacity_unital_csi(const FiniteMarkovChain &chain,
                                          const std::function<PauliNoiseParams(std::size_t)> &noise_fn) {
    const auto &pi = chain.stationary();
    CapacityReport r;
    r.family = "pauli";
    r.csi = true;
    r.capacity = detail::expectation(pi, [&](std::size_t s) { return holevo_chi_unital(noise_fn(s)); });
    return r;
}

/// E_pi[1 - h(p/2)], with the Jensen lower bound 1 - h(E_pi[p]/2).
inline CapacityReport capacity_depolarizing_csi(const FiniteMarkovChain &chain,
                                                const std::function<double(std::size_t)> &p_fn) {
    const auto &pi = chain.stationary();
    CapacityReport r;
    r.family = "depolarizing";
    r.csi = true;
    const double upper = 1.0 - detail::expectation(pi, [&](std::size_t s) { return detail::depolarizing_entropy(p_fn(s)); });
    const double lower = 1.0 - detail::depolarizing_entropy(detail::expectation(pi, p_fn));
    r.capacity = upper;
    r.bounds = std::pair{std::min(lower, upper), upper};
    r.jensen_gap = upper - r.bounds->first;
    return r;
}

inline CapacityReport capacity(const MarkovianCqChannel &channel) {
    CapacityReport r;
    switch (channel.noise.family) {
    case NoiseFamily::erasure:
        r = capacity_erasure(channel.chain, [&](std::size_t s) { return channel.noise.p(s); });
        break;
    case NoiseFamily::depolarizing:
        r = capacity_depolarizing_csi(channel.chain, [&](std::size_t s) { return channel.noise.p(s); });
        break;
    case NoiseFamily::pauli:
        r = capacity_unital_csi(channel.chain, [&](std::size_t s) { return channel.noise.q(s); });
        break;
    }
    r.model_id = channel.model_id;
    r.csi = channel.csi;
    r.provenance = channel.provenance;
    return r;
}

/// lim (1/N) H(X^N | Y^N [, states]) of the induced channel under uniform inputs.
inline double conditional_entropy_rate(const MarkovianCqChannel &channel) {
    const auto &pi = channel.chain.stationary();
    const auto &law = channel.law;
    if (law.mode == LawMode::erasure)
        return detail::expectation(pi, [&](std::size_t s) { return law.param[s]; });
    require(channel.csi, ErrorKind::unsupported,
            "entropy rate of a hidden-state binary channel is not available in closed form");
    if (channel.noise.family == NoiseFamily::depolarizing)
        return detail::expectation(pi, [&](std::size_t s) { return detail::depolarizing_entropy(channel.noise.p(s)); });
    return detail::expectation(pi, [&](std::size_t s) { return binary_entropy(law.param[s]); });
}

/// Wilson score interval.
inline std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t trials, double z = 1.959963984540054) {
    if (trials == 0)
        return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    const double lo = errors == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = errors == trials ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

struct BlerResult {
    std::size_t length = 0;
    double rate = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double bler = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Message and channel realization of trial `t` in a BLER experiment seeded by `seed`.
inline std::pair<std::vector<std::uint8_t>, TransmissionRecord>
bler_trial(const Transmitter &tx, const PolarCode &code, std::uint64_t seed, std::uint64_t t, bool reveal_states) {
    const std::uint64_t trial_seed = derive_seed(seed, t);
    std::vector<std::uint8_t> msg(code.dimension());
    Rng rng(derive_seed(trial_seed, "message"));
    for (auto &b : msg)
        b = rng.bit();
    auto rec = tx(encode(code, msg), derive_seed(trial_seed, "channel"), reveal_states);
    return {std::move(msg), std::move(rec)};
}

inline BlerResult bler_experiment(const MarkovianCqChannel &channel, const PolarCode &code, std::uint64_t trials,
                                  std::uint64_t seed, PolarizationOptions opts = {}) {
    require(trials >= 100, ErrorKind::domain, "BLER experiments need at least 1e2 trials");
    const Transmitter tx(channel);
    std::vector<std::uint64_t> shard_errors(detail::kShards, 0);
    detail::for_each_shard(trials, [&](std::size_t shard, std::size_t begin, std::size_t end) {
        if (begin == end)
            return;
        ChannelDecoder dec(channel, code.n(), opts.mode, opts.budget);
        std::uint64_t errors = 0;
        for (std::size_t t = begin; t < end; ++t) {
            auto [msg, rec] = bler_trial(tx, code, seed, t, dec.mode() == DecodeMode::state_known);
            auto res = dec.decode(code, rec);
            errors += res.message != msg ? 1 : 0;
        }
        shard_errors[shard] = errors;
    });
    BlerResult r;
    r.length = code.length();
    r.rate = code.rate();
    r.trials = trials;
    r.errors = std::accumulate(shard_errors.begin(), shard_errors.end(), std::uint64_t{0});
    r.bler = static_cast<double>(r.errors) / static_cast<double>(trials);
    std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.errors, trials);
    return r;
}

/// Capacity of the induced channel when the noise state has law `pi`.
inline double capacity_under(std::span<const double> pi, const NoiseSpec &noise) {
    switch (noise.family) {
    case NoiseFamily::erasure:
        return 1.0 - detail::expectation(pi, [&](std::size_t s) { return noise.p(s); });
    case NoiseFamily::depolarizing:
        return 1.0 - detail::expectation(pi, [&](std::size_t s) { return detail::depolarizing_entropy(noise.p(s)); });
    case NoiseFamily::pauli:
        return detail::expectation(pi, [&](std::size_t s) { return holevo_chi_unital(noise.q(s)); });
    }
    return 0.0;
}

struct SweepRow {
    std::size_t level = 0;
    double l1 = 0.0;
    double mean_p = 0.0;
    double capacity = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    std::string reference;
    double reference_mean_p = 0.0;
    double reference_capacity = 0.0;
    StructureReport structure;
};

/// Stationary law of the reference chain: the closed form when the spec has
/// one (cut where the remaining tail is below 1e-16), otherwise a deep
/// truncation.
inline std::vector<double> reference_distribution(const CountableChainSpec &spec, std::size_t reference_level,
                                                  Augmentation augmentation, std::string *description = nullptr) {
    if (spec.reference_stationary && !spec.is_finite()) {
        std::vector<double> ref;
        double mass = 0.0;
        for (std::size_t k = 0; k < 1'000'000 && mass < 1.0 - 1e-16; ++k) {
            ref.push_back(spec.reference_stationary(k));
            mass += ref.back();
        }
        if (description)
            *description = "closed-form stationary law";
        return ref;
    }
    auto chain = truncate_chain(spec, reference_level, augmentation);
    if (description)
        *description = spec.is_finite() ? "exact finite chain" : fmt::format("truncation at level {}", reference_level);
    return chain.stationary();
}

inline SweepTable truncation_sweep(const CountableChainSpec &spec, const NoiseSpec &noise,
                                   std::vector<std::size_t> levels, std::optional<std::size_t> reference_level = {},
                                   Augmentation augmentation = Augmentation::last_column) {
    require(!levels.empty(), ErrorKind::domain, "sweep needs at least one level");
    require(std::is_sorted(levels.begin(), levels.end()), ErrorKind::domain, "sweep levels must be ascending");
    const std::size_t top = levels.back();
    const bool closed_form = spec.reference_stationary && !spec.is_finite();
    std::size_t ref_level = 0;
    if (spec.is_finite())
        ref_level = *spec.finite_size - 1;
    else if (!closed_form) {
        require(reference_level.has_value() && *reference_level > top, ErrorKind::domain,
                "reference level must exceed every sweep level when no closed form is known");
        ref_level = *reference_level;
    }
    SweepTable table;
    table.structure = check_structure(spec, top);
    require(table.structure.verified_up_to >= std::min(top, spec.finite_size.value_or(top + 1) - 1),
            ErrorKind::validation, "structure check did not reach the largest sweep level");
    const auto ref = reference_distribution(spec, ref_level, augmentation, &table.reference);
    table.reference_mean_p = detail::expectation(ref, [&](std::size_t s) { return noise.probability(s); });
    table.reference_capacity = capacity_under(ref, noise);
    for (auto level : levels) {
        auto chain = truncate_chain(spec, level, augmentation);
        const auto &pi = chain.stationary();
        SweepRow row;
        row.level = level;
        row.l1 = l1_distance(pi, ref);
        row.mean_p = detail::expectation(pi, [&](std::size_t s) { return noise.probability(s); });
        row.capacity = capacity_under(pi, noise);
        table.rows.push_back(row);
    }
    return table;
}

} // namespace mqpolar
