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

// mqpolar: command-line front end. Every subcommand reads a JSON model file;
// flags override the model's experiment section.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mqpolar/pipeline.hpp"

using namespace mqpolar;

namespace {

struct Options {
    std::string model;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<int> n;
    std::optional<double> rate;
    std::string levels;
    std::string out;
    std::string format = "csv";
    std::string code;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> block;
};

std::vector<std::size_t> parse_levels(const std::string &text) {
    std::vector<std::size_t> levels;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        require(used == item.size() && !item.empty() && v >= 1, ErrorKind::config,
                fmt::format("--levels: '{}' is not a positive integer", item));
        levels.push_back(static_cast<std::size_t>(v));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    require(std::is_sorted(levels.begin(), levels.end()) &&
                std::adjacent_find(levels.begin(), levels.end()) == levels.end(),
            ErrorKind::config, "--levels must be strictly ascending");
    return levels;
}

ModelConfig load(const Options &o) {
    auto cfg = load_model(o.model);
    auto &e = cfg.experiment;
    if (o.seed)
        e.seed = *o.seed;
    if (o.n) {
        require(*o.n >= 1 && *o.n <= 24, ErrorKind::config, "--n must be in [1, 24]");
        e.n = *o.n;
    }
    if (o.rate) {
        require(*o.rate >= 0.0 && *o.rate <= 1.0, ErrorKind::config, "--rate must be in [0, 1]");
        e.rate = *o.rate;
        e.rate_of_capacity.reset();
    }
    if (!o.levels.empty())
        e.levels = parse_levels(o.levels);
    return cfg;
}

// Writes `name` into --out, or prints it when no directory was given.
void emit(const Options &o, const std::string &name, const std::string &content) {
    if (o.out.empty()) {
        std::fwrite(content.data(), 1, content.size(), stdout);
        return;
    }
    OutputBundle bundle(o.out);
    bundle.write(name, content);
    bundle.commit();
}

void emit(const Options &o, const std::string &stem, const std::string &csv, const json &doc) {
    if (o.format == "json")
        emit(o, stem + ".json", doc.dump(2) + "\n");
    else
        emit(o, stem + ".csv", csv);
}

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::statistical: return 3;
    case ErrorKind::resource: return 4;
    default: return 2;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Polar coding over Markovian quantum channels"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--model", o.model, "JSON model file")->required();
        sub->add_option("--seed", o.seed, "root seed");
        sub->add_option("--trials", o.trials, "Monte Carlo trials for this stage (pipeline: BLER blocks)");
        sub->add_option("--n", o.n, "log2 of the blocklength");
        sub->add_option("--rate", o.rate, "code rate");
        sub->add_option("--levels", o.levels, "comma-separated truncation levels");
        sub->add_option("--out", o.out, "output directory (default: stdout)");
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 64u));
    };
    auto *cap = app.add_subcommand("capacity", "capacity and Jensen bounds of the model");
    auto *trunc = app.add_subcommand("truncate", "stationary-law convergence over truncation levels");
    auto *induced = app.add_subcommand("induced-verify", "Monte Carlo check of the induced classical law");
    auto *polarize = app.add_subcommand("polarize", "per-index reliability estimates");
    auto *construct = app.add_subcommand("construct", "information set at the configured rate");
    auto *simulate = app.add_subcommand("simulate", "block error rate of a code");
    auto *pipeline = app.add_subcommand("pipeline", "every stage, artifacts written to --out");
    for (auto *sub : {cap, trunc, induced, polarize, construct, simulate, pipeline})
        common(sub);
    simulate->add_option("--code", o.code, "code file from 'construct' (default: construct one)");
    simulate->add_option("--block", o.block, "also write the transmission record of this block");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (o.threads)
        setenv("MQPOLAR_THREADS", std::to_string(*o.threads).c_str(), 1);

    try {
        auto cfg = load(o);
        if (cap->parsed()) {
            auto r = run_capacity(cfg);
            emit(o, "capacity", capacity_csv(r), capacity_json(r));
        } else if (trunc->parsed()) {
            auto t = stage("truncate", [&] { return run_sweep(cfg); });
            emit(o, "sweep", sweep_csv(t), sweep_json(t));
        } else if (induced->parsed()) {
            auto ch = stage("truncate", [&] { return build_channel(cfg); });
            auto v = stage("induced-verify", [&] { return run_induced(cfg, ch, o.trials); });
            emit(o, "induced", induced_csv(v), induced_json(v));
            if (!v.passed)
                fail(ErrorKind::statistical, v.failure);
        } else if (polarize->parsed()) {
            auto ch = stage("truncate", [&] { return build_channel(cfg); });
            auto est = stage("polarize", [&] { return run_polarize(cfg, ch, o.trials); });
            emit(o, "polarization", polarization_csv(est), polarization_json(est));
        } else if (construct->parsed()) {
            auto ch = stage("truncate", [&] { return build_channel(cfg); });
            auto est = stage("polarize", [&] { return run_polarize(cfg, ch, o.trials); });
            auto code = stage("construct", [&] { return run_construct(cfg, est, capacity(ch)); });
            emit(o, "code.json", code_json(code).dump(2) + "\n");
        } else if (simulate->parsed()) {
            auto ch = stage("truncate", [&] { return build_channel(cfg); });
            PolarCode code;
            if (!o.code.empty()) {
                code = load_code(o.code);
            } else {
                auto est = stage("polarize", [&] { return run_polarize(cfg, ch); });
                code = stage("construct", [&] { return run_construct(cfg, est, capacity(ch)); });
            }
            auto r = stage("simulate", [&] { return run_simulate(cfg, ch, code, o.trials); });
            emit(o, "bler", bler_csv({r}), bler_json({r}));
            if (o.block) {
                auto rec = run_transmission(cfg, ch, code, *o.block);
                emit(o, "transmission", transmission_csv(rec), transmission_json(rec));
            }
        } else if (pipeline->parsed()) {
            require(!o.out.empty(), ErrorKind::config, "pipeline needs --out");
            if (o.trials)
                cfg.experiment.trials = *o.trials;
            auto s = run_pipeline(cfg, o.out);
            std::cout << fmt::format("capacity {:.6f}  N {}  rate {:.4f}  BLER {} ({}/{})\n", s.capacity.capacity,
                                     s.bler.length, s.bler.rate, s.bler.bler, s.bler.errors, s.bler.trials);
        }
    } catch (const Error &e) {
        std::cerr << "mqpolar: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "mqpolar: internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
