#pragma once

#include <cstdint>

namespace quadcool {

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream seed for grid cell (a, b) of a run keyed by `base`. Deterministic
// and independent of execution order, so threaded scans stay reproducible.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
    return splitmix64(splitmix64(base ^ (a * 0xD1B54A32D192ED03ULL)) ^
                      (b * 0x9E3779B97F4A7C15ULL));
}

}  // namespace quadcool
