#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace orc {

// FNV-1a, the workbench's only hash. Used for content hashes in manifests and
// for deriving per-condition RNG seeds, so it must stay stable forever.
inline constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

inline uint64_t fnv1a64(double v, uint64_t h) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    return fnv1a64(bytes, sizeof v, h);
}

inline uint64_t fnv1a64(uint64_t v, uint64_t h) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    return fnv1a64(bytes, sizeof v, h);
}

inline uint64_t fnv1a64(int v, uint64_t h) {
    return fnv1a64(static_cast<uint64_t>(static_cast<int64_t>(v)), h);
}

}  // namespace orc
