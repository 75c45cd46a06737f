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

// Finite and countable-state Markov chains: stationary laws, north-west
// corner truncation with augmentation, and structural checks that are
// sufficient for the truncated stationary laws to converge.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mqpolar/error.hpp"
#include "mqpolar/random.hpp"

namespace mqpolar {

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kStationaryTol = 1e-10;
inline constexpr double kDistributionTol = 1e-9;

struct Transition {
    std::size_t to;
    double prob;
};

using SparseRow = std::vector<Transition>;

namespace detail {

inline void validate_row(const SparseRow &row, std::size_t state, std::size_t size_limit) {
    double sum = 0.0;
    for (const auto &t : row) {
        require(t.to < size_limit, ErrorKind::validation,
                fmt::format("row {} points at state {} outside the chain", state, t.to));
        require(t.prob >= 0.0 && t.prob <= 1.0 && std::isfinite(t.prob), ErrorKind::validation,
                fmt::format("row {} has probability {} outside [0,1]", state, t.prob));
        sum += t.prob;
    }
    require(std::abs(sum - 1.0) <= kStochasticTol, ErrorKind::validation,
            fmt::format("row {} sums to {:.17g}, not 1", state, sum));
}

// Sorts by target, merges duplicates and drops zero entries.
inline SparseRow canonical_row(SparseRow row) {
    std::sort(row.begin(), row.end(), [](const Transition &a, const Transition &b) { return a.to < b.to; });
    SparseRow out;
    for (const auto &t : row) {
        if (!out.empty() && out.back().to == t.to)
            out.back().prob += t.prob;
        else
            out.push_back(t);
    }
    std::erase_if(out, [](const Transition &t) { return t.prob == 0.0; });
    return out;
}

} // namespace detail

/// Irreducibility and period of the support graph of a finite chain.
struct ChainClassification {
    bool irreducible = false;
    std::size_t period = 0;
    /// Strongly connected components, each sorted ascending.
    std::vector<std::vector<std::size_t>> classes;
};

/// Row-stochastic chain over states 0..size()-1. Immutable once built; the
/// stationary law is computed on first request and shared between copies.
class FiniteMarkovChain {
public:
    explicit FiniteMarkovChain(std::vector<SparseRow> rows) : cache_(std::make_shared<Cache>()) {
        require(!rows.empty(), ErrorKind::validation, "chain needs at least one state");
        rows_.reserve(rows.size());
        for (std::size_t s = 0; s < rows.size(); ++s) {
            detail::validate_row(rows[s], s, rows.size());
            rows_.push_back(detail::canonical_row(std::move(rows[s])));
        }
    }

    FiniteMarkovChain(std::vector<SparseRow> rows, std::vector<double> stationary)
        : FiniteMarkovChain(std::move(rows)) {
        require(stationary.size() == size(), ErrorKind::shape, "stationary vector length differs from chain size");
        double total = 0.0;
        for (double v : stationary) {
            require(v >= 0.0, ErrorKind::validation, "stationary vector has a negative entry");
            total += v;
        }
        require(std::abs(total - 1.0) <= kStationaryTol, ErrorKind::validation, "stationary vector does not sum to 1");
        auto next = step(stationary);
        double resid = 0.0;
        for (std::size_t s = 0; s < size(); ++s)
            resid += std::abs(next[s] - stationary[s]);
        require(resid < kStationaryTol, ErrorKind::validation,
                fmt::format("supplied stationary vector is not invariant (L1 residual {:.3g})", resid));
        std::call_once(cache_->once, [&] { cache_->pi = std::move(stationary); });
        cache_->ready = true;
    }

    static FiniteMarkovChain from_dense(const std::vector<std::vector<double>> &matrix) {
        std::vector<SparseRow> rows;
        for (const auto &r : matrix) {
            require(r.size() == matrix.size(), ErrorKind::shape, "transition matrix must be square");
            SparseRow row;
            for (std::size_t j = 0; j < r.size(); ++j)
                if (r[j] != 0.0)
                    row.push_back({j, r[j]});
            rows.push_back(std::move(row));
        }
        return FiniteMarkovChain(std::move(rows));
    }

    std::size_t size() const { return rows_.size(); }

    std::span<const Transition> row(std::size_t s) const { return rows_.at(s); }

    double prob(std::size_t from, std::size_t to) const {
        const auto &r = rows_.at(from);
        auto it = std::lower_bound(r.begin(), r.end(), to,
                                   [](const Transition &t, std::size_t v) { return t.to < v; });
        return (it != r.end() && it->to == to) ? it->prob : 0.0;
    }

    /// Row-major dense copy of the transition matrix.
    std::vector<double> dense() const {
        std::vector<double> m(size() * size(), 0.0);
        for (std::size_t s = 0; s < size(); ++s)
            for (const auto &t : rows_[s])
                m[s * size() + t.to] = t.prob;
        return m;
    }

    /// dist * K
    std::vector<double> step(std::span<const double> dist) const {
        std::vector<double> out(size(), 0.0);
        for (std::size_t s = 0; s < size(); ++s) {
            if (dist[s] == 0.0)
                continue;
            for (const auto &t : rows_[s])
                out[t.to] += dist[s] * t.prob;
        }
        return out;
    }

    bool has_stationary() const { return cache_->ready.load(); }

    /// Cached stationary distribution; throws for reducible or periodic chains.
    const std::vector<double> &stationary() const;

    bool operator==(const FiniteMarkovChain &other) const {
        if (size() != other.size())
            return false;
        for (std::size_t s = 0; s < size(); ++s) {
            if (rows_[s].size() != other.rows_[s].size())
                return false;
            for (std::size_t k = 0; k < rows_[s].size(); ++k)
                if (rows_[s][k].to != other.rows_[s][k].to || rows_[s][k].prob != other.rows_[s][k].prob)
                    return false;
        }
        return true;
    }

private:
    struct Cache {
        std::once_flag once;
        std::atomic<bool> ready{false};
        std::vector<double> pi;
        std::exception_ptr error;
    };

    std::vector<SparseRow> rows_;
    std::shared_ptr<Cache> cache_;
};

/// Tarjan SCC plus the gcd of level differences along edges for the period.
inline ChainClassification classify(const FiniteMarkovChain &chain) {
    const std::size_t n = chain.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t counter = 0;
    ChainClassification out;

    struct Frame {
        std::size_t v;
        std::size_t edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited)
            continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto &f = call.back();
            auto r = chain.row(f.v);
            if (f.edge < r.size()) {
                std::size_t w = r[f.edge++].to;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            std::size_t v = f.v;
            call.pop_back();
            if (!call.empty())
                low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::size_t> component;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    component.push_back(w);
                } while (w != v);
                std::sort(component.begin(), component.end());
                out.classes.push_back(std::move(component));
            }
        }
    }
    std::sort(out.classes.begin(), out.classes.end());
    out.irreducible = out.classes.size() == 1;
    if (!out.irreducible)
        return out;

    std::vector<std::size_t> level(n, unvisited);
    std::vector<std::size_t> queue{0};
    level[0] = 0;
    std::size_t g = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        std::size_t v = queue[head];
        for (const auto &t : chain.row(v)) {
            if (level[t.to] == unvisited) {
                level[t.to] = level[v] + 1;
                queue.push_back(t.to);
            } else {
                auto a = static_cast<long long>(level[v] + 1);
                auto b = static_cast<long long>(level[t.to]);
                g = std::gcd(g, static_cast<std::size_t>(std::llabs(a - b)));
            }
        }
    }
    out.period = g;
    return out;
}

namespace detail {

inline double stationary_residual(const FiniteMarkovChain &chain, std::span<const double> pi) {
    auto next = chain.step(pi);
    double r = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s)
        r += std::abs(next[s] - pi[s]);
    return r;
}

inline void normalize(std::vector<double> &v) {
    double total = 0.0;
    for (double &x : v) {
        x = std::max(x, 0.0);
        total += x;
    }
    for (double &x : v)
        x /= total;
}

inline std::vector<double> direct_stationary(const FiniteMarkovChain &chain) {
    const auto n = static_cast<Eigen::Index>(chain.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index s = 0; s < n; ++s)
        for (const auto &t : chain.row(static_cast<std::size_t>(s)))
            a(static_cast<Eigen::Index>(t.to), s) += t.prob;
    a -= Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd x = a.partialPivLu().solve(rhs);
    std::vector<double> pi(x.data(), x.data() + n);
    normalize(pi);
    return pi;
}

// Power iteration; every few sweeps an Aitken delta-squared extrapolation is
// tried and kept only if it lowers the residual.
inline std::optional<std::vector<double>> power_stationary(const FiniteMarkovChain &chain,
                                                           std::size_t max_iter = 200000) {
    const std::size_t n = chain.size();
    std::vector<double> x0(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 0; it < max_iter; it += 3) {
        auto x1 = chain.step(x0);
        auto x2 = chain.step(x1);
        if (stationary_residual(chain, x2) < kStochasticTol) {
            normalize(x2);
            return x2;
        }
        std::vector<double> acc(n);
        for (std::size_t s = 0; s < n; ++s) {
            double d2 = x2[s] - 2.0 * x1[s] + x0[s];
            acc[s] = std::abs(d2) > 1e-300 ? x2[s] - (x2[s] - x1[s]) * (x2[s] - x1[s]) / d2 : x2[s];
        }
        normalize(acc);
        auto x3 = chain.step(x2);
        x0 = stationary_residual(chain, acc) < stationary_residual(chain, x3) ? std::move(acc) : std::move(x3);
    }
    return std::nullopt;
}

inline std::string describe_states(const std::vector<std::size_t> &states) {
    if (states.size() <= 8)
        return fmt::format("{{{}}}", fmt::join(states, ","));
    return fmt::format("{{{},{},...,{}}} ({} states)", states[0], states[1], states.back(), states.size());
}

} // namespace detail

inline constexpr std::size_t kDirectSolveLimit = 2000;

inline std::vector<double> compute_stationary(const FiniteMarkovChain &chain) {
    auto cls = classify(chain);
    if (!cls.irreducible) {
        // report a closed class, which is where the mass gets trapped
        const std::vector<std::size_t> *closed = &cls.classes.front();
        for (const auto &c : cls.classes) {
            std::set<std::size_t> members(c.begin(), c.end());
            bool is_closed = std::all_of(c.begin(), c.end(), [&](std::size_t s) {
                auto r = chain.row(s);
                return std::all_of(r.begin(), r.end(), [&](const Transition &t) { return members.count(t.to) > 0; });
            });
            if (is_closed) {
                closed = &c;
                break;
            }
        }
        fail(ErrorKind::structural, fmt::format("reducible chain: states {} form a separate class ({} classes total)",
                                                detail::describe_states(*closed), cls.classes.size()));
    }
    if (cls.period != 1)
        fail(ErrorKind::structural,
             fmt::format("periodic chain: class {} has period {}", detail::describe_states(cls.classes.front()), cls.period));

    std::vector<double> pi;
    if (chain.size() <= kDirectSolveLimit) {
        pi = detail::direct_stationary(chain);
        // a few polishing sweeps to wash out LU rounding
        for (int k = 0; k < 4; ++k) {
            auto next = chain.step(pi);
            if (detail::stationary_residual(chain, next) >= detail::stationary_residual(chain, pi))
                break;
            pi = std::move(next);
            detail::normalize(pi);
        }
    } else {
        auto p = detail::power_stationary(chain);
        require(p.has_value(), ErrorKind::resource, "power iteration did not converge for a large chain");
        pi = std::move(*p);
    }
    double resid = detail::stationary_residual(chain, pi);
    require(resid < kStationaryTol, ErrorKind::validation,
            fmt::format("stationary solve left an L1 residual of {:.3g}", resid));
    return pi;
}

inline const std::vector<double> &FiniteMarkovChain::stationary() const {
    std::call_once(cache_->once, [this] {
        try {
            cache_->pi = compute_stationary(*this);
        } catch (...) {
            cache_->error = std::current_exception();
        }
    });
    if (cache_->error)
        std::rethrow_exception(cache_->error);
    cache_->ready = true;
    return cache_->pi;
}

inline const std::vector<double> &stationary_distribution(const FiniteMarkovChain &chain) { return chain.stationary(); }

enum class StructureTag { upper_hessenberg, lower_hessenberg, doeblin_row, monotone_dominated };

/// Generator-style description of a (possibly countable) chain: rows are
/// produced on demand and must each be finitely supported.
struct CountableChainSpec {
    std::function<SparseRow(std::size_t)> row_fn;
    std::set<StructureTag> structural_tags;
    std::optional<std::size_t> truncation_hint;
    /// Number of states when the chain is already finite.
    std::optional<std::size_t> finite_size;
    /// Closed-form stationary probability of state k, when known.
    std::function<double(std::size_t)> reference_stationary;
    std::string name;
    /// The chain itself when the spec wraps a finite chain; truncating at or
    /// past its last state returns it unchanged, stationary law included.
    std::shared_ptr<const FiniteMarkovChain> source;

    bool is_finite() const { return finite_size.has_value(); }

    SparseRow row(std::size_t s) const {
        auto r = detail::canonical_row(row_fn(s));
        detail::validate_row(r, s, finite_size.value_or(static_cast<std::size_t>(-1)));
        return r;
    }
};

inline CountableChainSpec finite_chain_spec(const FiniteMarkovChain &chain, std::string name = "explicit") {
    CountableChainSpec spec;
    spec.row_fn = [chain](std::size_t s) {
        auto r = chain.row(s);
        return SparseRow(r.begin(), r.end());
    };
    spec.finite_size = chain.size();
    spec.name = std::move(name);
    spec.source = std::make_shared<const FiniteMarkovChain>(chain);
    return spec;
}

/// Two-state Gilbert-Elliott chain; k01 is the 0 -> 1 switching probability.
inline FiniteMarkovChain ge_chain(double k01, double k10) {
    require(k01 > 0.0 && k01 < 1.0 && k10 > 0.0 && k10 < 1.0, ErrorKind::structural,
            fmt::format("GE chain needs k01, k10 in (0,1) for an aperiodic irreducible chain (got {}, {})", k01, k10));
    // balance: pi_0 k01 = pi_1 k10
    const double pi1 = k01 / (k01 + k10);
    return FiniteMarkovChain({{{0, 1.0 - k01}, {1, k01}}, {{0, k10}, {1, 1.0 - k10}}}, {1.0 - pi1, pi1});
}

/// Queue length seen by successive arrivals of an M/M/1 queue (Poisson
/// arrivals at rate lambda, exponential service at rate mu). Between two
/// arrivals exactly m services complete with probability
/// a_m = (lambda/(lambda+mu)) (mu/(lambda+mu))^m, so from state i the next
/// arrival sees j = i+1-m for m <= i, and 0 otherwise.
inline CountableChainSpec mm1_arrival_chain(double lambda, double mu) {
    require(lambda > 0.0 && mu > 0.0, ErrorKind::domain, "queue rates must be positive");
    require(lambda < mu, ErrorKind::structural,
            fmt::format("unstable queue: lambda {} >= mu {}", lambda, mu));
    const double arrive = lambda / (lambda + mu);
    const double serve = mu / (lambda + mu);
    CountableChainSpec spec;
    spec.row_fn = [arrive, serve](std::size_t i) {
        SparseRow row;
        row.push_back({0, std::pow(serve, static_cast<double>(i + 1))});
        for (std::size_t j = 1; j <= i + 1; ++j)
            row.push_back({j, arrive * std::pow(serve, static_cast<double>(i + 1 - j))});
        return row;
    };
    spec.structural_tags = {StructureTag::lower_hessenberg};
    const double rho = lambda / mu;
    spec.reference_stationary = [rho](std::size_t k) { return (1.0 - rho) * std::pow(rho, static_cast<double>(k)); };
    spec.name = "mm1";
    return spec;
}

enum class Augmentation { last_column, linear, identity_diagonal };

inline const char *to_string(Augmentation a) {
    switch (a) {
    case Augmentation::last_column: return "last-column";
    case Augmentation::linear: return "linear";
    case Augmentation::identity_diagonal: return "identity-diagonal";
    }
    return "?";
}

inline Augmentation parse_augmentation(const std::string &name) {
    if (name == "last-column")
        return Augmentation::last_column;
    if (name == "linear")
        return Augmentation::linear;
    if (name == "identity-diagonal")
        return Augmentation::identity_diagonal;
    fail(ErrorKind::config, "unknown augmentation '" + name + "'");
}

struct TruncationDiagnostics {
    /// Rows whose entire mass lay beyond the truncation level.
    std::vector<std::size_t> degenerate_rows;
    std::vector<std::string> warnings;
};

/// North-west corner truncation to states 0..level, with the mass that leaves
/// the corner returned per `augmentation`. The result dominates the corner
/// block element-wise.
inline FiniteMarkovChain truncate_chain(const CountableChainSpec &spec, std::size_t level,
                                        Augmentation augmentation = Augmentation::last_column,
                                        TruncationDiagnostics *diag = nullptr) {
    if (spec.is_finite()) {
        level = std::min(level, *spec.finite_size - 1);
        if (spec.source && level + 1 == spec.source->size())
            return *spec.source;
    }
    if (level == 0)
        return FiniteMarkovChain({{{0, 1.0}}});

    std::vector<SparseRow> rows;
    rows.reserve(level + 1);
    for (std::size_t s = 0; s <= level; ++s) {
        SparseRow kept;
        double lost = 0.0;
        double kept_mass = 0.0;
        for (const auto &t : spec.row(s)) {
            if (t.to <= level) {
                kept.push_back(t);
                kept_mass += t.prob;
            } else {
                lost += t.prob;
            }
        }
        if (lost > 0.0) {
            auto strategy = augmentation;
            if (kept.empty()) {
                if (diag) {
                    diag->degenerate_rows.push_back(s);
                    diag->warnings.push_back(fmt::format("row {} has all its mass beyond level {}", s, level));
                }
                strategy = Augmentation::last_column;
            }
            switch (strategy) {
            case Augmentation::last_column:
                kept.push_back({level, lost});
                break;
            case Augmentation::identity_diagonal:
                kept.push_back({s, lost});
                break;
            case Augmentation::linear:
                for (auto &t : kept)
                    t.prob += lost * (t.prob / kept_mass);
                break;
            }
        }
        rows.push_back(std::move(kept));
    }
    return FiniteMarkovChain(std::move(rows));
}

/// Verdicts for the simple structural conditions under which truncated
/// stationary laws converge. The Harris drift/minorization conditions are
/// not certified; callers may record their own assertion in `harris_note`.
struct StructureReport {
    bool upper_hessenberg = false;
    bool lower_hessenberg = false;
    bool doeblin_row = false;
    std::size_t doeblin_column = 0;
    double doeblin_delta = 0.0;
    std::optional<bool> monotone_dominated;
    std::string dominating_description;
    std::size_t verified_up_to = 0;
    std::vector<std::string> explanations;
    std::string harris_note;

    bool any() const { return upper_hessenberg || lower_hessenberg || doeblin_row || monotone_dominated.value_or(false); }
};

namespace detail {

inline std::vector<double> tail_sums(const SparseRow &row, std::size_t width) {
    // tail[m] = sum_{r > m} row[r], for m in [0, width)
    std::vector<double> dense(width + 1, 0.0);
    for (const auto &t : row)
        dense[std::min(t.to, width)] += t.prob;
    std::vector<double> tail(width, 0.0);
    double acc = dense[width];
    for (std::size_t m = width; m-- > 0;) {
        tail[m] = acc;
        acc += dense[m];
    }
    return tail;
}

} // namespace detail

/// A column minimum below this over the checked rows is treated as decaying
/// rather than as a uniform minorization.
inline constexpr double kDoeblinFloor = 1e-6;

/// Checks rows 0..up_to. `dominating` is an optional candidate matrix M for
/// the stochastic-monotone dominance condition.
inline StructureReport check_structure(const CountableChainSpec &spec, std::size_t up_to,
                                       const CountableChainSpec *dominating = nullptr) {
    if (spec.is_finite())
        up_to = std::min(up_to, *spec.finite_size - 1);
    StructureReport rep;
    rep.verified_up_to = up_to;
    std::vector<SparseRow> rows;
    for (std::size_t s = 0; s <= up_to; ++s)
        rows.push_back(spec.row(s));

    rep.upper_hessenberg = true;
    rep.lower_hessenberg = true;
    for (std::size_t s = 0; s <= up_to; ++s) {
        for (const auto &t : rows[s]) {
            if (rep.upper_hessenberg && s > t.to + 1) {
                rep.upper_hessenberg = false;
                rep.explanations.push_back(fmt::format("not upper-Hessenberg: k({},{}) = {:.3g} > 0", s, t.to, t.prob));
            }
            if (rep.lower_hessenberg && t.to > s + 1) {
                rep.lower_hessenberg = false;
                rep.explanations.push_back(fmt::format("not lower-Hessenberg: k({},{}) = {:.3g} > 0", s, t.to, t.prob));
            }
        }
    }

    // Doeblin row: the column whose minimum over checked rows is largest.
    for (const auto &cand : rows[0]) {
        double lo = cand.prob;
        for (std::size_t s = 1; s <= up_to && lo > 0.0; ++s) {
            auto it = std::find_if(rows[s].begin(), rows[s].end(), [&](const Transition &t) { return t.to == cand.to; });
            lo = std::min(lo, it == rows[s].end() ? 0.0 : it->prob);
        }
        if (lo > rep.doeblin_delta) {
            rep.doeblin_delta = lo;
            rep.doeblin_column = cand.to;
        }
    }
    rep.doeblin_row = rep.doeblin_delta >= kDoeblinFloor;
    if (!rep.doeblin_row)
        rep.explanations.push_back(fmt::format("no column stays above {:g} over states 0..{} (best: column {}, {:.3g})",
                                               kDoeblinFloor, up_to, rep.doeblin_column, rep.doeblin_delta));

    if (dominating) {
        rep.dominating_description = dominating->name.empty() ? "user-supplied matrix" : dominating->name;
        std::vector<SparseRow> mrows;
        std::size_t width = 1;
        for (std::size_t s = 0; s <= up_to; ++s) {
            mrows.push_back(dominating->row(s));
            for (const auto &t : mrows.back())
                width = std::max(width, t.to + 1);
            for (const auto &t : rows[s])
                width = std::max(width, t.to + 1);
        }
        bool ok = true;
        std::vector<double> prev;
        for (std::size_t s = 0; s <= up_to && ok; ++s) {
            auto mt = detail::tail_sums(mrows[s], width);
            auto kt = detail::tail_sums(rows[s], width);
            for (std::size_t m = 0; m < width && ok; ++m) {
                if (mt[m] + kStochasticTol < kt[m]) {
                    ok = false;
                    rep.explanations.push_back(fmt::format("M does not dominate K at row {}, tail beyond {}", s, m));
                }
                if (!prev.empty() && prev[m] > mt[m] + kStochasticTol) {
                    ok = false;
                    rep.explanations.push_back(fmt::format("M is not stochastically monotone between rows {} and {}", s - 1, s));
                }
            }
            prev = std::move(mt);
        }
        rep.monotone_dominated = ok;
    }
    return rep;
}

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
    auto check = [](std::span<const double> v, const char *name) {
        double total = std::accumulate(v.begin(), v.end(), 0.0);
        require(std::abs(total - 1.0) <= kDistributionTol, ErrorKind::validation,
                fmt::format("{} sums to {:.12g}, not 1", name, total));
    };
    check(p, "first distribution");
    check(q, "second distribution");
    const std::size_t n = std::max(p.size(), q.size());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = i < p.size() ? p[i] : 0.0;
        double b = i < q.size() ? q[i] : 0.0;
        d += std::abs(a - b);
    }
    return d;
}

namespace detail {

struct CumulativeRow {
    std::vector<std::size_t> to;
    std::vector<double> cdf;

    std::size_t draw(double u) const {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cdf.begin());
        return to[std::min(k, to.size() - 1)];
    }
};

inline CumulativeRow cumulative(std::span<const Transition> row) {
    CumulativeRow c;
    double acc = 0.0;
    for (const auto &t : row) {
        acc += t.prob;
        c.to.push_back(t.to);
        c.cdf.push_back(acc);
    }
    return c;
}

} // namespace detail

/// Draws a state path started in the stationary law.
class PathSampler {
public:
    explicit PathSampler(const FiniteMarkovChain &chain) {
        const auto &pi = chain.stationary();
        SparseRow init;
        for (std::size_t s = 0; s < pi.size(); ++s)
            if (pi[s] > 0.0)
                init.push_back({s, pi[s]});
        initial_ = detail::cumulative(init);
        for (std::size_t s = 0; s < chain.size(); ++s)
            rows_.push_back(detail::cumulative(chain.row(s)));
    }

    std::vector<std::uint32_t> sample(std::size_t length, Rng &rng) const {
        std::vector<std::uint32_t> path(length);
        if (length == 0)
            return path;
        std::size_t s = initial_.draw(rng.uniform());
        path[0] = static_cast<std::uint32_t>(s);
        for (std::size_t i = 1; i < length; ++i) {
            s = rows_[s].draw(rng.uniform());
            path[i] = static_cast<std::uint32_t>(s);
        }
        return path;
    }

private:
    detail::CumulativeRow initial_;
    std::vector<detail::CumulativeRow> rows_;
};

inline std::vector<std::uint32_t> sample_path(const FiniteMarkovChain &chain, std::size_t length, std::uint64_t seed) {
    require(length >= 1, ErrorKind::domain, "path length must be positive");
    Rng rng(seed);
    return PathSampler(chain).sample(length, rng);
}

} // namespace mqpolar
