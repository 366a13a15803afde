#pragma once

#include <cstdint>

namespace shlr {

/// splitmix64; all property sampling goes through this so reports are
/// reproducible from the seed alone.
struct SplitMix {
    uint64_t state;
    explicit SplitMix(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// small rational in [-max, max] with denominator 1 or 2
    long small_int(long max) { return (long)(next() % (2 * max + 1)) - max; }
};

}  // namespace shlr
