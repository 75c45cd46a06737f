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

// Experiment stages behind the command-line tool and their CSV / JSON
// documents. Every stage takes its seed from the root seed and its own name,
// so running a stage alone reproduces the pipeline's output for it.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "mqpolar/analysis.hpp"
#include "mqpolar/config.hpp"
#include "mqpolar/polar.hpp"

namespace mqpolar {

using nlohmann::json;

inline std::uint64_t stage_seed(const ModelConfig &cfg, std::string_view stage) {
    return derive_seed(cfg.experiment.seed, stage);
}

// ---- documents -------------------------------------------------------------

inline json truncation_json(const std::optional<TruncationDirective> &t) {
    if (!t)
        return nullptr;
    return {{"level", t->level}, {"augmentation", to_string(t->augmentation)}};
}

inline json capacity_json(const CapacityReport &r) {
    json j{{"model_id", r.model_id},
           {"family", r.family},
           {"csi", r.csi},
           {"capacity", r.capacity},
           {"capacity_known", r.capacity_known},
           {"jensen_gap", r.jensen_gap},
           {"truncation", truncation_json(r.provenance)}};
    j["bounds"] = r.bounds ? json{{"lower", r.bounds->first}, {"upper", r.bounds->second}} : json(nullptr);
    return j;
}

inline std::string capacity_csv(const CapacityReport &r) {
    std::string out = "model_id,family,csi,capacity,lower,upper,jensen_gap,truncation_level,augmentation\n";
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.model_id, r.family, r.csi ? 1 : 0, r.capacity,
                       r.bounds ? fmt::format("{}", r.bounds->first) : "",
                       r.bounds ? fmt::format("{}", r.bounds->second) : "", r.jensen_gap,
                       r.provenance ? fmt::format("{}", r.provenance->level) : "",
                       r.provenance ? to_string(r.provenance->augmentation) : "");
    return out;
}

inline std::string sweep_csv(const SweepTable &t) {
    std::string out = "level,l1,mean_p,capacity\n";
    for (const auto &r : t.rows)
        out += fmt::format("{},{},{},{}\n", r.level, r.l1, r.mean_p, r.capacity);
    return out;
}

inline json sweep_json(const SweepTable &t) {
    json rows = json::array();
    for (const auto &r : t.rows)
        rows.push_back({{"level", r.level}, {"l1", r.l1}, {"mean_p", r.mean_p}, {"capacity", r.capacity}});
    json structure{{"upper_hessenberg", t.structure.upper_hessenberg},
                   {"lower_hessenberg", t.structure.lower_hessenberg},
                   {"doeblin_row", t.structure.doeblin_row},
                   {"verified_up_to", t.structure.verified_up_to},
                   {"explanations", t.structure.explanations}};
    return {{"rows", rows},
            {"reference", t.reference},
            {"reference_mean_p", t.reference_mean_p},
            {"reference_capacity", t.reference_capacity},
            {"structure", structure}};
}

inline std::string induced_csv(const InducedVerification &v) {
    std::string out = "state,input,output,expected,observed,count,sigma,pass\n";
    for (const auto &c : v.cells)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", c.state, c.input, symbol_char(c.output), c.expected,
                           c.observed, c.count, c.sigma, c.pass ? 1 : 0);
    return out;
}

inline json induced_json(const InducedVerification &v) {
    json cells = json::array();
    for (const auto &c : v.cells)
        cells.push_back({{"state", c.state},
                         {"input", c.input},
                         {"output", std::string(1, symbol_char(c.output))},
                         {"expected", c.expected},
                         {"observed", c.observed},
                         {"count", c.count},
                         {"sigma", c.sigma},
                         {"pass", c.pass}});
    return {{"trials", v.trials}, {"passed", v.passed}, {"failure", v.failure}, {"cells", cells}};
}

inline std::string polarization_csv(const PolarizationEstimate &e) {
    std::string out = "index,Z_hat,I_hat,err_hat\n";
    for (std::size_t i = 0; i < e.length(); ++i)
        out += fmt::format("{},{},{},{}\n", i, e.z_hat[i], e.i_hat[i], e.err_hat[i]);
    return out;
}

inline json polarization_json(const PolarizationEstimate &e) {
    return {{"n", e.n},
            {"trials", e.trials},
            {"seed", e.seed},
            {"Z_hat", e.z_hat},
            {"I_hat", e.i_hat},
            {"err_hat", e.err_hat},
            {"Z_se", e.z_se},
            {"I_se", e.i_se},
            {"err_se", e.err_se},
            {"mean_information", e.mean_information()},
            {"mean_information_se", e.mean_information_se}};
}

inline json code_json(const PolarCode &code) {
    return {{"n", code.n()},
            {"length", code.length()},
            {"rate", code.rate()},
            {"info_set", code.info_set()},
            {"frozen_values", code.frozen_values()}};
}

inline PolarCode parse_code(const json &j) {
    detail::only_keys(j, "code", {"n", "length", "rate", "info_set", "frozen_values"});
    const int n = static_cast<int>(detail::count(detail::need(j, "code", "n"), "code.n", 0, 30));
    const auto &info = detail::need(j, "code", "info_set");
    require(info.is_array(), ErrorKind::config, "code.info_set must be an array");
    std::vector<std::size_t> set;
    for (std::size_t k = 0; k < info.size(); ++k)
        set.push_back(detail::count(info[k], fmt::format("code.info_set[{}]", k), 0, (std::uint64_t{1} << n) - 1));
    std::vector<std::uint8_t> frozen;
    if (j.contains("frozen_values")) {
        const auto &f = j["frozen_values"];
        require(f.is_array(), ErrorKind::config, "code.frozen_values must be an array");
        for (std::size_t k = 0; k < f.size(); ++k)
            frozen.push_back(static_cast<std::uint8_t>(detail::count(f[k], "code.frozen_values entry", 0, 1)));
    }
    try {
        return PolarCode::make(n, std::move(set), std::move(frozen));
    } catch (const Error &e) {
        fail(ErrorKind::config, fmt::format("code: {}", e.what()));
    }
}

inline PolarCode load_code(const std::string &path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, fmt::format("cannot read code file '{}'", path));
    try {
        return parse_code(json::parse(in));
    } catch (const json::exception &e) {
        fail(ErrorKind::config, fmt::format("malformed code file: {}", e.what()));
    }
}

inline std::string bler_csv(const std::vector<BlerResult> &rows) {
    std::string out = "N,rate,trials,errors,bler,ci_lo,ci_hi\n";
    for (const auto &r : rows)
        out += fmt::format("{},{},{},{},{},{},{}\n", r.length, r.rate, r.trials, r.errors, r.bler, r.ci_lo, r.ci_hi);
    return out;
}

inline json bler_json(const std::vector<BlerResult> &rows) {
    json out = json::array();
    for (const auto &r : rows)
        out.push_back({{"N", r.length},
                       {"rate", r.rate},
                       {"trials", r.trials},
                       {"errors", r.errors},
                       {"bler", r.bler},
                       {"ci_lo", r.ci_lo},
                       {"ci_hi", r.ci_hi}});
    return out;
}

inline std::string transmission_csv(const TransmissionRecord &rec) {
    std::string out = rec.states ? "index,input,output,state\n" : "index,input,output\n";
    for (std::size_t i = 0; i < rec.inputs.size(); ++i) {
        out += fmt::format("{},{},{}", i, rec.inputs[i], symbol_char(rec.outputs[i]));
        out += rec.states ? fmt::format(",{}\n", (*rec.states)[i]) : "\n";
    }
    return out;
}

inline json transmission_json(const TransmissionRecord &rec) {
    std::string outputs;
    for (auto y : rec.outputs)
        outputs += symbol_char(y);
    json out = {{"inputs", rec.inputs}, {"outputs", outputs}};
    if (rec.states)
        out["states"] = *rec.states;
    return out;
}

// ---- stages ----------------------------------------------------------------

/// Runs `body`, prefixing any error with the stage name.
template <class F>
auto stage(const char *name, F &&body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error &e) {
        throw Error(e.kind(), fmt::format("stage '{}': {}", name, e.what()));
    }
}

inline CapacityReport run_capacity(const ModelConfig &cfg) {
    auto ch = stage("truncate", [&] { return build_channel(cfg); });
    return stage("capacity", [&] { return capacity(ch); });
}

inline SweepTable run_sweep(const ModelConfig &cfg, std::vector<std::size_t> levels = {}) {
    if (levels.empty())
        levels = cfg.experiment.levels;
    if (levels.empty())
        levels.push_back(cfg.truncation ? cfg.truncation->level : cfg.chain.finite_size.value_or(2) - 1);
    const auto aug = cfg.truncation ? cfg.truncation->augmentation : Augmentation::last_column;
    return truncation_sweep(cfg.chain, cfg.noise, levels, cfg.experiment.reference_level, aug);
}

inline InducedVerification run_induced(const ModelConfig &cfg, const MarkovianCqChannel &ch,
                                       std::optional<std::uint64_t> trials = {}) {
    return verify_induced(ch.noise, ch.law, trials.value_or(cfg.experiment.verify_trials),
                          stage_seed(cfg, "induced-verify"));
}

inline PolarizationEstimate run_polarize(const ModelConfig &cfg, const MarkovianCqChannel &ch,
                                         std::optional<std::uint64_t> trials = {}) {
    return estimate_polarization(ch, cfg.experiment.n, trials.value_or(cfg.experiment.construction_trials),
                                 stage_seed(cfg, "polarize"), {std::nullopt, cfg.experiment.budget});
}

inline PolarCode run_construct(const ModelConfig &cfg, const PolarizationEstimate &est, const CapacityReport &cap) {
    return select_information_set(est, cfg.code_rate(cap.capacity));
}

inline BlerResult run_simulate(const ModelConfig &cfg, const MarkovianCqChannel &ch, const PolarCode &code,
                               std::optional<std::uint64_t> trials = {}) {
    return bler_experiment(ch, code, trials.value_or(cfg.experiment.trials), stage_seed(cfg, "simulate"),
                           {std::nullopt, cfg.experiment.budget});
}

/// Block `t` of the experiment run_simulate performs, states included when the
/// receiver has them.
inline TransmissionRecord run_transmission(const ModelConfig &cfg, const MarkovianCqChannel &ch,
                                           const PolarCode &code, std::uint64_t t) {
    return bler_trial(Transmitter(ch), code, stage_seed(cfg, "simulate"), t, ch.csi).second;
}

/// Files written into an output directory; removed again unless committed.
class OutputBundle {
public:
    explicit OutputBundle(std::filesystem::path dir) : dir_(std::move(dir)) {
        namespace fs = std::filesystem;
        std::error_code ec;
        created_dir_ = !fs::exists(dir_, ec);
        fs::create_directories(dir_, ec);
        require(!ec && fs::is_directory(dir_), ErrorKind::config,
                fmt::format("cannot create output directory '{}'", dir_.string()));
    }
    OutputBundle(const OutputBundle &) = delete;
    OutputBundle &operator=(const OutputBundle &) = delete;

    ~OutputBundle() {
        if (committed_)
            return;
        std::error_code ec;
        for (const auto &f : written_)
            std::filesystem::remove(f, ec);
        if (created_dir_ && std::filesystem::is_empty(dir_, ec))
            std::filesystem::remove(dir_, ec);
    }

    void write(const std::string &name, const std::string &content) {
        auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorKind::config, fmt::format("cannot write '{}'", path.string()));
        written_.push_back(path);
        out << content;
        require(out.good(), ErrorKind::resource, fmt::format("short write to '{}'", path.string()));
    }

    void commit() { committed_ = true; }

    const std::vector<std::filesystem::path> &files() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool created_dir_ = false;
    bool committed_ = false;
};

struct PipelineSummary {
    CapacityReport capacity;
    std::optional<SweepTable> sweep;
    InducedVerification induced;
    PolarizationEstimate polarization;
    PolarCode code;
    BlerResult bler;
};

/// truncate -> verify the induced law -> estimate polarization -> construct
/// -> simulate, writing every artifact into `out_dir`. On any error the files
/// written so far are removed and the error names the failing stage.
inline PipelineSummary run_pipeline(const ModelConfig &cfg, const std::filesystem::path &out_dir) {
    OutputBundle out(out_dir);
    PipelineSummary s;
    auto ch = stage("truncate", [&] { return build_channel(cfg); });
    s.capacity = stage("capacity", [&] { return capacity(ch); });
    out.write("capacity.json", capacity_json(s.capacity).dump(2) + "\n");
    if (!cfg.chain.is_finite()) {
        s.sweep = stage("truncate", [&] { return run_sweep(cfg); });
        out.write("sweep.csv", sweep_csv(*s.sweep));
    }
    s.induced = stage("induced-verify", [&] { return run_induced(cfg, ch); });
    out.write("induced.csv", induced_csv(s.induced));
    if (!s.induced.passed)
        fail(ErrorKind::statistical, fmt::format("stage 'induced-verify': {}", s.induced.failure));
    s.polarization = stage("polarize", [&] { return run_polarize(cfg, ch); });
    out.write("polarization.csv", polarization_csv(s.polarization));
    s.code = stage("construct", [&] { return run_construct(cfg, s.polarization, s.capacity); });
    out.write("code.json", code_json(s.code).dump(2) + "\n");
    s.bler = stage("simulate", [&] { return run_simulate(cfg, ch, s.code); });
    out.write("bler.csv", bler_csv({s.bler}));
    out.commit();
    return s;
}

} // namespace mqpolar
