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

// JSON model files: a chain, a noise assignment, receiver state information,
// an optional truncation directive and experiment parameters.
//
//   {
//     "model_id": "ge-qec",
//     "chain": {"type": "ge", "k01": 0.1, "k10": 0.3},
//     "noise": {"type": "erasure", "p": {"table": [0.01, 0.4], "tail": 1.0}},
//     "csi": false,
//     "truncation": {"level": 60, "augmentation": "last-column"},
//     "experiment": {"n": 10, "rate": 0.6, "seed": 1}
//   }
//
// Chains: {"type": "ge", k01, k10}, {"type": "mm1", lambda, mu} or
// {"type": "explicit", "rows": [[...], ...]}. Noise probabilities are a
// number (same in every state) or {"table": [...], "tail": x}; Pauli noise
// takes "q" with [q_I, q_X, q_Y, q_Z] entries. Unknown keys are errors.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include "json.hpp"

#include "mqpolar/analysis.hpp"
#include "mqpolar/channels.hpp"
#include "mqpolar/error.hpp"
#include "mqpolar/markov.hpp"
#include "mqpolar/qnoise.hpp"

namespace mqpolar {

struct ExperimentConfig {
    int n = 8;
    /// Code rate; if unset, rate_of_capacity * capacity is used.
    std::optional<double> rate;
    std::optional<double> rate_of_capacity;
    std::uint64_t trials = 1000;              // BLER blocks
    std::uint64_t construction_trials = 1000; // genie blocks for code construction
    std::uint64_t verify_trials = 100000;     // samples per induced-law cell
    std::vector<std::size_t> levels;          // truncation sweep
    std::optional<std::size_t> reference_level;
    std::uint64_t seed = 0;
    TrellisBudget budget;
};

struct ModelConfig {
    std::string model_id;
    CountableChainSpec chain;
    std::string chain_type;
    NoiseSpec noise;
    bool csi = false;
    std::optional<TruncationDirective> truncation;
    ExperimentConfig experiment;

    /// Rate used for code construction, given the channel capacity.
    double code_rate(double capacity) const {
        if (experiment.rate)
            return *experiment.rate;
        return std::clamp(experiment.rate_of_capacity.value_or(0.5) * capacity, 0.0, 1.0);
    }
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json &j, const std::string &where, std::initializer_list<const char *> allowed) {
    require(j.is_object(), ErrorKind::config, fmt::format("{} must be an object", where));
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &item : j.items())
        require(ok.count(item.key()) != 0, ErrorKind::config, fmt::format("unknown key '{}' in {}", item.key(), where));
}

inline const json &need(const json &j, const std::string &where, const char *key) {
    require(j.contains(key), ErrorKind::config, fmt::format("{} is missing '{}'", where, key));
    return j.at(key);
}

inline double number(const json &j, const std::string &what, double lo, double hi) {
    require(j.is_number(), ErrorKind::config, fmt::format("{} must be a number", what));
    const double v = j.get<double>();
    require(std::isfinite(v) && v >= lo && v <= hi, ErrorKind::config,
            fmt::format("{} = {} outside [{}, {}]", what, v, lo, hi));
    return v;
}

inline std::uint64_t count(const json &j, const std::string &what, std::uint64_t lo, std::uint64_t hi) {
    require(j.is_number_integer() && (j.is_number_unsigned() || j.get<std::int64_t>() >= 0), ErrorKind::config,
            fmt::format("{} must be a non-negative integer", what));
    const auto v = j.get<std::uint64_t>();
    require(v >= lo && v <= hi, ErrorKind::config, fmt::format("{} = {} outside [{}, {}]", what, v, lo, hi));
    return v;
}

inline std::pair<std::vector<double>, double> probability_table(const json &j, const std::string &what) {
    if (j.is_number()) {
        double v = number(j, what, 0.0, 1.0);
        return {{v}, v};
    }
    only_keys(j, what, {"table", "tail"});
    const auto &t = need(j, what, "table");
    require(t.is_array() && !t.empty(), ErrorKind::config, fmt::format("{}.table must be a non-empty array", what));
    std::vector<double> table;
    for (std::size_t k = 0; k < t.size(); ++k)
        table.push_back(number(t[k], fmt::format("{}.table[{}]", what, k), 0.0, 1.0));
    const double tail = j.contains("tail") ? number(j["tail"], what + ".tail", 0.0, 1.0) : 1.0;
    return {std::move(table), tail};
}

inline PauliNoiseParams pauli_entry(const json &j, const std::string &what) {
    require(j.is_array() && j.size() == 4, ErrorKind::config,
            fmt::format("{} must be [q_I, q_X, q_Y, q_Z]", what));
    double q[4];
    for (int k = 0; k < 4; ++k)
        q[k] = number(j[k], fmt::format("{}[{}]", what, k), 0.0, 1.0);
    require(std::abs(q[0] + q[1] + q[2] + q[3] - 1.0) <= 1e-9, ErrorKind::config,
            fmt::format("{} does not sum to 1", what));
    // absorb rounding into q_I
    return PauliNoiseParams::make(1.0 - q[1] - q[2] - q[3], q[1], q[2], q[3]);
}

inline CountableChainSpec parse_chain(const json &j, std::string &type) {
    const std::string where = "chain";
    require(j.is_object(), ErrorKind::config, "chain must be an object");
    const auto &t = need(j, where, "type");
    require(t.is_string(), ErrorKind::config, "chain.type must be a string");
    type = t.get<std::string>();
    if (type == "ge") {
        only_keys(j, where, {"type", "k01", "k10"});
        const double k01 = number(need(j, where, "k01"), "chain.k01", 0.0, 1.0);
        const double k10 = number(need(j, where, "k10"), "chain.k10", 0.0, 1.0);
        require(k01 > 0.0 && k01 < 1.0 && k10 > 0.0 && k10 < 1.0, ErrorKind::config,
                "chain.k01 and chain.k10 must lie strictly between 0 and 1");
        return finite_chain_spec(ge_chain(k01, k10), "ge");
    }
    if (type == "mm1") {
        only_keys(j, where, {"type", "lambda", "mu"});
        const double lambda = number(need(j, where, "lambda"), "chain.lambda", 0.0, 1e12);
        const double mu = number(need(j, where, "mu"), "chain.mu", 0.0, 1e12);
        require(lambda > 0.0 && mu > 0.0, ErrorKind::config, "chain.lambda and chain.mu must be positive");
        require(lambda < mu, ErrorKind::config,
                fmt::format("queue with lambda = {} >= mu = {} has no stationary law", lambda, mu));
        return mm1_arrival_chain(lambda, mu);
    }
    if (type == "explicit") {
        only_keys(j, where, {"type", "rows"});
        const auto &rows = need(j, where, "rows");
        require(rows.is_array() && !rows.empty(), ErrorKind::config, "chain.rows must be a non-empty array");
        std::vector<std::vector<double>> dense;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            require(rows[r].is_array() && rows[r].size() == rows.size(), ErrorKind::config,
                    fmt::format("chain.rows[{}] must have {} entries", r, rows.size()));
            std::vector<double> row;
            for (std::size_t c = 0; c < rows.size(); ++c)
                row.push_back(number(rows[r][c], fmt::format("chain.rows[{}][{}]", r, c), 0.0, 1.0));
            dense.push_back(std::move(row));
        }
        try {
            auto chain = FiniteMarkovChain::from_dense(dense);
            chain.stationary();
            return finite_chain_spec(chain, "explicit");
        } catch (const Error &e) {
            fail(ErrorKind::config, fmt::format("chain: {}", e.what()));
        }
    }
    fail(ErrorKind::config, fmt::format("unknown chain type '{}' (expected ge, mm1 or explicit)", type));
}

inline NoiseSpec parse_noise(const json &j) {
    require(j.is_object(), ErrorKind::config, "noise must be an object");
    const auto &f = need(j, "noise", "type");
    require(f.is_string(), ErrorKind::config, "noise.type must be a string");
    const auto family = f.get<std::string>();
    if (family == "erasure" || family == "depolarizing") {
        only_keys(j, "noise", {"type", "p"});
        auto [table, tail] = probability_table(need(j, "noise", "p"), "noise.p");
        return family == "erasure" ? NoiseSpec::erasure(std::move(table), tail)
                                   : NoiseSpec::depolarizing(std::move(table), tail);
    }
    if (family == "pauli") {
        only_keys(j, "noise", {"type", "q"});
        const auto &q = need(j, "noise", "q");
        if (q.is_array()) {
            auto entry = pauli_entry(q, "noise.q");
            return NoiseSpec::pauli({entry}, entry);
        }
        only_keys(q, "noise.q", {"table", "tail"});
        const auto &t = need(q, "noise.q", "table");
        require(t.is_array() && !t.empty(), ErrorKind::config, "noise.q.table must be a non-empty array");
        std::vector<PauliNoiseParams> table;
        for (std::size_t k = 0; k < t.size(); ++k)
            table.push_back(pauli_entry(t[k], fmt::format("noise.q.table[{}]", k)));
        auto tail = q.contains("tail") ? pauli_entry(q["tail"], "noise.q.tail") : PauliNoiseParams::depolarizing(1.0);
        return NoiseSpec::pauli(std::move(table), tail);
    }
    fail(ErrorKind::config, fmt::format("unknown noise family '{}' (expected erasure, depolarizing or pauli)", family));
}

inline ExperimentConfig parse_experiment(const json &j) {
    ExperimentConfig e;
    if (j.is_null())
        return e;
    only_keys(j, "experiment",
              {"n", "rate", "rate_of_capacity", "trials", "construction_trials", "verify_trials", "levels",
               "reference_level", "seed", "max_trellis_states", "max_workspace_mib"});
    if (j.contains("n"))
        e.n = static_cast<int>(count(j["n"], "experiment.n", 1, 24));
    if (j.contains("rate"))
        e.rate = number(j["rate"], "experiment.rate", 0.0, 1.0);
    if (j.contains("rate_of_capacity"))
        e.rate_of_capacity = number(j["rate_of_capacity"], "experiment.rate_of_capacity", 0.0, 1.0);
    require(!(e.rate && e.rate_of_capacity), ErrorKind::config,
            "experiment.rate and experiment.rate_of_capacity are mutually exclusive");
    if (j.contains("trials"))
        e.trials = count(j["trials"], "experiment.trials", 100, std::uint64_t{1} << 40);
    if (j.contains("construction_trials"))
        e.construction_trials = count(j["construction_trials"], "experiment.construction_trials", 1000,
                                      std::uint64_t{1} << 40);
    if (j.contains("verify_trials"))
        e.verify_trials = count(j["verify_trials"], "experiment.verify_trials", 10000, std::uint64_t{1} << 40);
    if (j.contains("levels")) {
        const auto &l = j["levels"];
        require(l.is_array(), ErrorKind::config, "experiment.levels must be an array");
        for (std::size_t k = 0; k < l.size(); ++k)
            e.levels.push_back(count(l[k], fmt::format("experiment.levels[{}]", k), 1, 1'000'000));
        require(std::is_sorted(e.levels.begin(), e.levels.end()) &&
                    std::adjacent_find(e.levels.begin(), e.levels.end()) == e.levels.end(),
                ErrorKind::config, "experiment.levels must be strictly ascending");
    }
    if (j.contains("reference_level"))
        e.reference_level = count(j["reference_level"], "experiment.reference_level", 1, 1'000'000);
    if (j.contains("seed"))
        e.seed = count(j["seed"], "experiment.seed", 0, UINT64_MAX);
    if (j.contains("max_trellis_states"))
        e.budget.max_states = count(j["max_trellis_states"], "experiment.max_trellis_states", 1, 4096);
    if (j.contains("max_workspace_mib"))
        e.budget.max_workspace_bytes = count(j["max_workspace_mib"], "experiment.max_workspace_mib", 1, 1 << 20) << 20;
    return e;
}

} // namespace detail

inline ModelConfig parse_model(const nlohmann::json &j) {
    detail::only_keys(j, "model", {"model_id", "chain", "noise", "csi", "truncation", "experiment"});
    ModelConfig cfg;
    if (j.contains("model_id")) {
        require(j["model_id"].is_string(), ErrorKind::config, "model_id must be a string");
        cfg.model_id = j["model_id"].get<std::string>();
    }
    cfg.chain = detail::parse_chain(detail::need(j, "model", "chain"), cfg.chain_type);
    cfg.noise = detail::parse_noise(detail::need(j, "model", "noise"));
    if (j.contains("csi")) {
        require(j["csi"].is_boolean(), ErrorKind::config, "csi must be true or false");
        cfg.csi = j["csi"].get<bool>();
    }
    if (j.contains("truncation")) {
        const auto &t = j["truncation"];
        detail::only_keys(t, "truncation", {"level", "augmentation"});
        TruncationDirective d;
        d.level = detail::count(detail::need(t, "truncation", "level"), "truncation.level", 1, 1'000'000);
        if (t.contains("augmentation")) {
            require(t["augmentation"].is_string(), ErrorKind::config, "truncation.augmentation must be a string");
            try {
                d.augmentation = parse_augmentation(t["augmentation"].get<std::string>());
            } catch (const Error &e) {
                fail(ErrorKind::config, e.what());
            }
        }
        cfg.truncation = d;
    }
    require(cfg.chain.is_finite() || cfg.truncation.has_value(), ErrorKind::config,
            "a countable chain needs a truncation directive");
    require(!cfg.noise.unital() || cfg.csi, ErrorKind::config,
            "unital noise needs \"csi\": true; without state information only capacity bounds are known");
    cfg.experiment = detail::parse_experiment(j.contains("experiment") ? j["experiment"] : nlohmann::json());
    if (cfg.model_id.empty())
        cfg.model_id = fmt::format("{}-{}", cfg.chain_type, to_string(cfg.noise.family));
    return cfg;
}

inline ModelConfig parse_model_text(const std::string &text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::config, fmt::format("malformed JSON: {}", e.what()));
    }
    return parse_model(j);
}

inline ModelConfig load_model(const std::string &path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, fmt::format("cannot read model file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_text(ss.str());
}

inline MarkovianCqChannel build_channel(const ModelConfig &cfg) {
    auto ch = assemble(cfg.chain, cfg.noise, cfg.csi, cfg.chain.is_finite() ? std::nullopt : cfg.truncation);
    ch.model_id = cfg.model_id;
    return ch;
}

} // namespace mqpolar
