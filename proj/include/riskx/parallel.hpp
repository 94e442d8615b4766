#pragma once

#include <cstdint>
#include <functional>

namespace riskx {

/// Hardware parallelism, at least 1.
int default_workers();

/// Resolves a worker hint: 0 means default_workers(), anything else is
/// clamped to >= 1.
int resolve_workers(int hint);

/// Runs fn(block) for every block in [0, blocks). workers <= 1 executes the
/// plain serial loop (the reference path); otherwise blocks are distributed
/// over OpenMP threads. Blocks must write only their own output slots; with
/// that discipline the two paths produce bit-identical results.
void for_each_block(std::int64_t blocks, int workers,
                    const std::function<void(std::int64_t)>& fn);

}  // namespace riskx
