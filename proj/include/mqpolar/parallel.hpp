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

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace mqpolar::detail {

inline constexpr std::size_t kShards = 64;

/// MQPOLAR_THREADS overrides the hardware thread count.
inline unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (const char *env = std::getenv("MQPOLAR_THREADS")) {
        char *end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            hw = static_cast<unsigned>(std::min<unsigned long>(v, kShards));
    }
    return std::max(1u, std::min(hw, static_cast<unsigned>(kShards)));
}

// Runs body(shard, begin, end) over a fixed partition of [0, total) into
// kShards contiguous ranges. The partition is independent of the thread
// count, so per-shard partial results reduced in shard order are
// bit-reproducible.
template <class Body>
void for_each_shard(std::size_t total, Body &&body) {
    auto range = [total](std::size_t shard) {
        return std::pair{total * shard / kShards, total * (shard + 1) / kShards};
    };
    unsigned workers = worker_count();
    if (workers == 1) {
        for (std::size_t s = 0; s < kShards; ++s) {
            auto [b, e] = range(s);
            body(s, b, e);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t s = w; s < kShards; s += workers) {
                    auto [b, e] = range(s);
                    body(s, b, e);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &t : pool)
        t.join();
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace mqpolar::detail
