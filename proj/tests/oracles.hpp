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

// Independent reference computations for the test suites. Nothing here calls
// into the decoder or transform implementations it is used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

using BitMatrix = std::vector<std::vector<std::uint8_t>>;

inline BitMatrix identity(std::size_t n) {
    BitMatrix m(n, std::vector<std::uint8_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        m[i][i] = 1;
    return m;
}

inline BitMatrix kron(const BitMatrix &a, const BitMatrix &b) {
    BitMatrix m(a.size() * b.size(), std::vector<std::uint8_t>(a.size() * b.size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k)
                for (std::size_t l = 0; l < b.size(); ++l)
                    m[i * b.size() + k][j * b.size() + l] = a[i][j] & b[k][l];
    return m;
}

/// n-fold Kronecker power of [[1,0],[1,1]].
inline BitMatrix kernel_power(int n) {
    BitMatrix g = identity(1);
    const BitMatrix f = {{1, 0}, {1, 1}};
    for (int k = 0; k < n; ++k)
        g = kron(g, f);
    return g;
}

/// Permutation matrix of the bit-reversal map built from the recursive
/// definition: R_N sends even positions to the first half and odd positions
/// to the second half, then recurses on each half.
inline std::vector<std::size_t> reverse_shuffle_perm(std::size_t N) {
    if (N == 1)
        return {0};
    auto half = reverse_shuffle_perm(N / 2);
    std::vector<std::size_t> perm(N);
    // output position j takes input index perm[j]
    for (std::size_t j = 0; j < N / 2; ++j) {
        perm[j] = 2 * half[j];
        perm[N / 2 + j] = 2 * half[j] + 1;
    }
    return perm;
}

inline BitMatrix bit_reversal_matrix(int n) {
    const std::size_t N = std::size_t{1} << n;
    auto perm = reverse_shuffle_perm(N);
    BitMatrix m(N, std::vector<std::uint8_t>(N, 0));
    // row vector v times m: (v m)[j] = v[perm[j]]
    for (std::size_t j = 0; j < N; ++j)
        m[perm[j]][j] = 1;
    return m;
}

inline BitMatrix multiply(const BitMatrix &a, const BitMatrix &b) {
    BitMatrix m(a.size(), std::vector<std::uint8_t>(b[0].size(), 0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            if (a[i][k])
                for (std::size_t j = 0; j < b[0].size(); ++j)
                    m[i][j] ^= b[k][j];
    return m;
}

inline std::vector<std::uint8_t> row_times(const std::vector<std::uint8_t> &v, const BitMatrix &m) {
    std::vector<std::uint8_t> out(m[0].size(), 0);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] & 1)
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] ^= m[i][j];
    return out;
}

/// Exact erasure probabilities of the synthetic BEC channels, natural index
/// order: index 2i is the "minus" child and 2i+1 the "plus" child of i.
inline std::vector<double> bec_recursion(int n, double z0) {
    std::vector<double> z{z0};
    for (int k = 0; k < n; ++k) {
        std::vector<double> next(2 * z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            next[2 * i] = 2 * z[i] - z[i] * z[i];
            next[2 * i + 1] = z[i] * z[i];
        }
        z = std::move(next);
    }
    return z;
}

/// Dense row-major power iteration, many sweeps, no acceleration.
inline std::vector<double> power_iteration(const std::vector<double> &k, std::size_t size, std::size_t sweeps) {
    std::vector<double> x(size, 1.0 / static_cast<double>(size)), y(size);
    for (std::size_t it = 0; it < sweeps; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j)
                y[j] += x[i] * k[i * size + j];
        double t = 0.0;
        for (double v : y)
            t += v;
        for (std::size_t j = 0; j < size; ++j)
            x[j] = y[j] / t;
    }
    return x;
}

inline double h2(double x) {
    if (x <= 0.0 || x >= 1.0)
        return 0.0;
    return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

/// Hidden-Markov channel described densely for enumeration.
struct HiddenChannel {
    std::size_t states;
    std::vector<double> k;  // row-major transition matrix
    std::vector<double> pi; // initial law
    // like(y, x, s)
    std::function<double(int, int, std::size_t)> like;
};

/// P(y_1..y_N | x_1..x_N) summed over every state path.
inline double path_sum(const HiddenChannel &ch, const std::vector<int> &y, const std::vector<std::uint8_t> &x) {
    const std::size_t N = y.size();
    std::size_t paths = 1;
    for (std::size_t i = 0; i < N; ++i)
        paths *= ch.states;
    double total = 0.0;
    std::vector<std::size_t> s(N);
    for (std::size_t code = 0; code < paths; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < N; ++i) {
            s[i] = c % ch.states;
            c /= ch.states;
        }
        double p = ch.pi[s[0]] * ch.like(y[0], x[0], s[0]);
        for (std::size_t i = 1; i < N && p > 0.0; ++i)
            p *= ch.k[s[i - 1] * ch.states + s[i]] * ch.like(y[i], x[i], s[i]);
        total += p;
    }
    return total;
}

/// P(u_i = 1 | y, u_0..u_{i-1} = past) by enumerating all completions
/// u_{i+1}.. and all state paths; x = u * encoder.
inline double enumerate_posterior(const HiddenChannel &ch, const BitMatrix &encoder, const std::vector<int> &y,
                                  const std::vector<std::uint8_t> &past, std::size_t i) {
    const std::size_t N = y.size();
    const std::size_t free_bits = N - i - 1;
    double w[2] = {0.0, 0.0};
    std::vector<std::uint8_t> u(N);
    for (std::size_t k = 0; k < i; ++k)
        u[k] = past[k];
    for (int a = 0; a <= 1; ++a) {
        u[i] = static_cast<std::uint8_t>(a);
        for (std::size_t rest = 0; rest < (std::size_t{1} << free_bits); ++rest) {
            for (std::size_t k = 0; k < free_bits; ++k)
                u[i + 1 + k] = (rest >> k) & 1u;
            w[a] += path_sum(ch, y, row_times(u, encoder));
        }
    }
    return w[1] / (w[0] + w[1]);
}

} // namespace oracle
