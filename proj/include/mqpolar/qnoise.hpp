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

// Qubit density operators, erasure and Pauli (unital) noise maps, entropies,
// and the classical channel induced by orthogonal product encoding followed
// by a product projective measurement.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mqpolar/error.hpp"
#include "mqpolar/random.hpp"

namespace mqpolar {

inline constexpr double kOperatorTol = 1e-12;

using cd = std::complex<double>;

namespace pauli {
inline Eigen::Matrix2cd I() { return Eigen::Matrix2cd::Identity(); }
inline Eigen::Matrix2cd X() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}
inline Eigen::Matrix2cd Y() {
    Eigen::Matrix2cd m;
    m << 0, cd(0, -1), cd(0, 1), 0;
    return m;
}
inline Eigen::Matrix2cd Z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}
inline Eigen::Matrix2cd axis(int a) { return a == 0 ? X() : a == 1 ? Y() : Z(); }
} // namespace pauli

/// Density operator of a qubit (dimension 2) or of a qubit plus an
/// orthogonal erasure flag (dimension 3).
class DensityOperator {
public:
    explicit DensityOperator(Eigen::MatrixXcd m) : m_(std::move(m)) {
        require(m_.rows() == m_.cols() && (m_.rows() == 2 || m_.rows() == 3), ErrorKind::shape,
                fmt::format("density operator must be 2x2 or 3x3, got {}x{}", m_.rows(), m_.cols()));
        require((m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= kOperatorTol, ErrorKind::validation,
                "density operator is not Hermitian");
        m_ = (m_ + m_.adjoint()) * 0.5;
        require(std::abs(m_.trace().real() - 1.0) <= kOperatorTol, ErrorKind::validation,
                fmt::format("density operator trace is {:.15g}", m_.trace().real()));
        require(eigenvalues().minCoeff() >= -kOperatorTol, ErrorKind::validation,
                "density operator has a negative eigenvalue");
    }

    static DensityOperator from_bloch(double x, double y, double z) {
        Eigen::Matrix2cd m = 0.5 * (pauli::I() + x * pauli::X() + y * pauli::Y() + z * pauli::Z());
        return DensityOperator(m);
    }

    static DensityOperator basis(int bit) { return from_bloch(0, 0, bit ? -1.0 : 1.0); }

    static DensityOperator maximally_mixed() { return from_bloch(0, 0, 0); }

    int dimension() const { return static_cast<int>(m_.rows()); }

    const Eigen::MatrixXcd &matrix() const { return m_; }

    Eigen::VectorXd eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    /// Bloch vector of a qubit state.
    std::array<double, 3> bloch() const {
        require(dimension() == 2, ErrorKind::shape, "Bloch vector needs a qubit");
        return {(m_ * pauli::X()).trace().real(), (m_ * pauli::Y()).trace().real(),
                (m_ * pauli::Z()).trace().real()};
    }

    /// Tr(projector * rho)
    double expectation(const Eigen::MatrixXcd &op) const { return (op * m_).trace().real(); }

private:
    Eigen::MatrixXcd m_;
};

/// Pauli channel rho -> sum_k q_k sigma_k rho sigma_k.
struct PauliNoiseParams {
    double i = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static PauliNoiseParams make(double qi, double qx, double qy, double qz) {
        PauliNoiseParams p{qi, qx, qy, qz};
        p.validate();
        return p;
    }

    /// (1-p) rho + p I/2
    static PauliNoiseParams depolarizing(double p) {
        require(p >= 0.0 && p <= 1.0, ErrorKind::domain, fmt::format("depolarizing probability {} outside [0,1]", p));
        return {1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p};
    }

    void validate() const {
        for (double v : {i, x, y, z})
            require(v >= 0.0 && v <= 1.0, ErrorKind::validation, fmt::format("Pauli weight {} outside [0,1]", v));
        require(std::abs(i + x + y + z - 1.0) <= kOperatorTol, ErrorKind::validation,
                fmt::format("Pauli weights sum to {:.15g}", i + x + y + z));
    }

    /// Componentwise Bloch contraction factors (lambda_x, lambda_y, lambda_z).
    std::array<double, 3> lambdas() const { return {i + x - y - z, i - x + y - z, i - x - y + z}; }

    /// Axis with the largest |lambda|; ties resolve to z, then x.
    int best_axis() const {
        auto l = lambdas();
        int best = 2;
        for (int a : {0, 1})
            if (std::abs(l[a]) > std::abs(l[best]))
                best = a;
        return best;
    }

    double lambda_max() const { return std::abs(lambdas()[best_axis()]); }

    bool operator==(const PauliNoiseParams &) const = default;
};

inline DensityOperator apply_erasure(double p, const DensityOperator &rho) {
    require(p >= 0.0 && p <= 1.0, ErrorKind::domain, fmt::format("erasure probability {} outside [0,1]", p));
    require(rho.dimension() == 2, ErrorKind::shape, "erasure map takes a qubit");
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(3, 3);
    out.topLeftCorner(2, 2) = (1.0 - p) * rho.matrix();
    out(2, 2) = p;
    return DensityOperator(out);
}

inline DensityOperator apply_pauli(const PauliNoiseParams &params, const DensityOperator &rho) {
    params.validate();
    require(rho.dimension() == 2, ErrorKind::shape, "Pauli map takes a qubit");
    const Eigen::Matrix2cd r = rho.matrix();
    Eigen::Matrix2cd out = params.i * r + params.x * (pauli::X() * r * pauli::X()) +
                           params.y * (pauli::Y() * r * pauli::Y()) + params.z * (pauli::Z() * r * pauli::Z());
    return DensityOperator(Eigen::MatrixXcd(out));
}

inline double binary_entropy(double x) {
    require(x >= 0.0 && x <= 1.0, ErrorKind::domain, fmt::format("binary entropy argument {} outside [0,1]", x));
    if (x == 0.0 || x == 1.0)
        return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline double von_neumann_entropy(const DensityOperator &rho) {
    double s = 0.0;
    auto ev = rho.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        double e = ev(k);
        require(e >= -kOperatorTol, ErrorKind::validation, "negative eigenvalue in entropy");
        if (e > 0.0)
            s -= e * std::log2(e);
    }
    return std::clamp(s, 0.0, std::log2(static_cast<double>(rho.dimension())));
}

/// Holevo capacity of a Pauli channel: uniform antipodal pure states on the
/// least contracted Bloch axis.
inline double holevo_chi_unital(const PauliNoiseParams &params) {
    params.validate();
    return 1.0 - binary_entropy(std::min(1.0, (1.0 + params.lambda_max()) / 2.0));
}

/// Per-state value with a constant continuation beyond the table.
template <class T>
struct StateFunction {
    std::vector<T> table;
    T tail{};

    const T &operator()(std::size_t s) const { return s < table.size() ? table[s] : tail; }

    bool operator==(const StateFunction &) const = default;
};

enum class NoiseFamily { erasure, depolarizing, pauli };

inline const char *to_string(NoiseFamily f) {
    switch (f) {
    case NoiseFamily::erasure: return "erasure";
    case NoiseFamily::depolarizing: return "depolarizing";
    case NoiseFamily::pauli: return "pauli";
    }
    return "?";
}

/// Assignment of a qubit noise map to every chain state.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::erasure;
    StateFunction<double> p;
    StateFunction<PauliNoiseParams> q;

    static NoiseSpec erasure(std::vector<double> table, double tail = 1.0) {
        return make_scalar(NoiseFamily::erasure, std::move(table), tail);
    }

    static NoiseSpec depolarizing(std::vector<double> table, double tail = 1.0) {
        return make_scalar(NoiseFamily::depolarizing, std::move(table), tail);
    }

    static NoiseSpec pauli(std::vector<PauliNoiseParams> table,
                           PauliNoiseParams tail = PauliNoiseParams::depolarizing(1.0)) {
        for (const auto &row : table)
            row.validate();
        tail.validate();
        NoiseSpec n;
        n.family = NoiseFamily::pauli;
        n.q = {std::move(table), tail};
        return n;
    }

    bool unital() const { return family != NoiseFamily::erasure; }

    /// Erasure or depolarizing probability; total error weight 1 - q_I for Pauli noise.
    double probability(std::size_t s) const { return family == NoiseFamily::pauli ? 1.0 - q(s).i : p(s); }

    PauliNoiseParams pauli_params(std::size_t s) const {
        require(unital(), ErrorKind::unsupported, "erasure noise has no Pauli form");
        return family == NoiseFamily::pauli ? q(s) : PauliNoiseParams::depolarizing(p(s));
    }

    DensityOperator apply(std::size_t s, const DensityOperator &rho) const {
        return family == NoiseFamily::erasure ? apply_erasure(p(s), rho) : apply_pauli(pauli_params(s), rho);
    }

    bool operator==(const NoiseSpec &) const = default;

private:
    static NoiseSpec make_scalar(NoiseFamily family, std::vector<double> table, double tail) {
        for (double v : table)
            require(v >= 0.0 && v <= 1.0, ErrorKind::validation, fmt::format("noise probability {} outside [0,1]", v));
        require(tail >= 0.0 && tail <= 1.0, ErrorKind::validation, fmt::format("noise tail {} outside [0,1]", tail));
        NoiseSpec n;
        n.family = family;
        n.p = {std::move(table), tail};
        return n;
    }
};

enum class Symbol : std::uint8_t { zero = 0, one = 1, erased = 2 };

inline char symbol_char(Symbol y) { return y == Symbol::erased ? 'e' : y == Symbol::one ? '1' : '0'; }

enum class LawMode { erasure, binary };

/// Which Bloch axis carries the bit. `per_state_best` needs the encoder to
/// know the state; `z` is the computational basis.
enum class EncodingAxis { z, per_state_best };

/// P(y | x, s) of the classical channel seen after product measurement.
struct InducedLaw {
    LawMode mode = LawMode::erasure;
    bool csi = false;
    EncodingAxis encoding = EncodingAxis::z;
    /// Erasure probability (erasure mode) or crossover probability (binary mode) per state.
    std::vector<double> param;
    /// Bloch axis used in each state (0 = x, 1 = y, 2 = z).
    std::vector<int> axis;

    std::size_t num_states() const { return param.size(); }

    double prob(Symbol y, int x, std::size_t s) const {
        const double a = param[s];
        if (mode == LawMode::erasure) {
            if (y == Symbol::erased)
                return a;
            return static_cast<int>(y) == x ? 1.0 - a : 0.0;
        }
        if (y == Symbol::erased)
            return 0.0;
        return static_cast<int>(y) == x ? 1.0 - a : a;
    }

    /// Probabilities of outputs (0, 1, e).
    std::array<double, 3> row(int x, std::size_t s) const {
        return {prob(Symbol::zero, x, s), prob(Symbol::one, x, s), prob(Symbol::erased, x, s)};
    }

    bool operator==(const InducedLaw &) const = default;
};

inline InducedLaw induced_law(const NoiseSpec &noise, bool csi, std::size_t num_states,
                              EncodingAxis encoding = EncodingAxis::z) {
    require(num_states >= 1, ErrorKind::domain, "law needs at least one state");
    InducedLaw law;
    law.csi = csi;
    law.encoding = encoding;
    law.param.resize(num_states);
    law.axis.assign(num_states, 2);
    if (noise.family == NoiseFamily::erasure) {
        law.mode = LawMode::erasure;
        for (std::size_t s = 0; s < num_states; ++s)
            law.param[s] = noise.p(s);
        return law;
    }
    require(csi, ErrorKind::unsupported,
            "unital noise needs receiver state information; without it the capacity is only bracketed");
    law.mode = LawMode::binary;
    for (std::size_t s = 0; s < num_states; ++s) {
        auto q = noise.pauli_params(s);
        if (encoding == EncodingAxis::per_state_best)
            law.axis[s] = q.best_axis();
        // crossover along axis a is (1 - lambda_a)/2; on z this is q_X + q_Y
        law.param[s] = law.axis[s] == 2 ? q.x + q.y : (1.0 - q.lambdas()[law.axis[s]]) / 2.0;
    }
    return law;
}

struct InducedCell {
    std::size_t state = 0;
    int input = 0;
    Symbol output = Symbol::zero;
    double expected = 0.0;
    double observed = 0.0;
    std::uint64_t count = 0;
    double sigma = 0.0;
    bool pass = true;
};

struct InducedVerification {
    std::uint64_t trials = 0;
    std::vector<InducedCell> cells;
    bool passed = true;
    std::string failure;
};

/// Monte Carlo check of an induced law: prepare the codeword state for each
/// (input, state), run it through the density-operator noise map, sample the
/// product measurement and compare frequencies with `law` at 3 sigma.
inline InducedVerification verify_induced(const NoiseSpec &noise, const InducedLaw &law, std::uint64_t trials,
                                          std::uint64_t seed) {
    require(trials >= 10000, ErrorKind::domain, "induced-law verification needs at least 1e4 trials");
    InducedVerification rep;
    rep.trials = trials;
    for (std::size_t s = 0; s < law.num_states(); ++s) {
        const int a = law.axis[s];
        const Eigen::Matrix2cd sa = pauli::axis(a);
        for (int x = 0; x <= 1; ++x) {
            std::array<double, 3> bloch{0, 0, 0};
            bloch[a] = x ? -1.0 : 1.0;
            auto sent = DensityOperator::from_bloch(bloch[0], bloch[1], bloch[2]);
            auto received = noise.apply(s, sent);

            std::array<double, 3> born{0, 0, 0};
            const Eigen::Matrix2cd plus = 0.5 * (pauli::I() + sa), minus = 0.5 * (pauli::I() - sa);
            const int d = received.dimension();
            Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(d, d), p1 = Eigen::MatrixXcd::Zero(d, d);
            p0.topLeftCorner(2, 2) = plus;
            p1.topLeftCorner(2, 2) = minus;
            born[0] = std::max(0.0, received.expectation(p0));
            born[1] = std::max(0.0, received.expectation(p1));
            if (d == 3)
                born[2] = std::max(0.0, received.matrix()(2, 2).real());

            Rng rng(derive_seed(seed, s * 2 + static_cast<std::size_t>(x)));
            std::array<std::uint64_t, 3> counts{0, 0, 0};
            const double c0 = born[0], c1 = born[0] + born[1];
            const double total = born[0] + born[1] + born[2];
            for (std::uint64_t t = 0; t < trials; ++t) {
                double u = rng.uniform() * total;
                ++counts[u < c0 ? 0 : u < c1 ? 1 : 2];
            }
            for (int y = 0; y < 3; ++y) {
                InducedCell cell;
                cell.state = s;
                cell.input = x;
                cell.output = static_cast<Symbol>(y);
                cell.expected = law.prob(cell.output, x, s);
                cell.count = counts[y];
                cell.observed = static_cast<double>(counts[y]) / static_cast<double>(trials);
                cell.sigma = std::sqrt(cell.expected * (1.0 - cell.expected) / static_cast<double>(trials));
                if (cell.expected <= 0.0 || cell.expected >= 1.0)
                    cell.pass = std::abs(cell.observed - cell.expected) == 0.0;
                else
                    cell.pass = std::abs(cell.observed - cell.expected) <= 3.0 * cell.sigma;
                if (!cell.pass && rep.passed) {
                    rep.passed = false;
                    rep.failure = fmt::format("cell (state {}, input {}, output {}): observed {:.6f}, law {:.6f}", s, x,
                                              symbol_char(cell.output), cell.observed, cell.expected);
                }
                rep.cells.push_back(cell);
            }
        }
    }
    return rep;
}

} // namespace mqpolar
