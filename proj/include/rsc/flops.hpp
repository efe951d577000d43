#pragma once

#include <cstdint>

namespace rsc {

/// Multiply-add counter. One unit is one fused multiply-add, so an SpMM
/// over a CSR with nnz stored entries and a d-column dense operand costs nnz*d.
struct FlopCounter {
    std::uint64_t count = 0;

    void add(std::uint64_t n) noexcept { count += n; }
    void reset() noexcept { count = 0; }
};

inline void count_flops(FlopCounter* counter, std::uint64_t n) noexcept {
    if (counter != nullptr) counter->add(n);
}

}  // namespace rsc
