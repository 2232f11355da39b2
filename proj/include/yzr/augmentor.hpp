#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace yzr {

using Rng = std::mt19937_64;

/// Edit budget and edit mix for positive-pair generation. Edits only touch
/// interior characters; the first and last character always survive.
struct AugmentPolicy {
    double p_delete = 0.5;
    int ops_divisor = 4;  // max_ops(len) = max(ops_min, len / ops_divisor) ...
    int ops_min = 1;
    int ops_max = -1;  // ... optionally clamped to ops_max (-1: no clamp)
    bool keep_endpoints = true;
    std::uint64_t rng_seed = 0;

    static AugmentPolicy training() { return {}; }
    static AugmentPolicy validation() {
        AugmentPolicy p;
        p.ops_max = 1;
        return p;
    }

    /// Never exceeds the number of interior positions (len - 2).
    int max_ops(int len) const;
    void validate() const;
};

struct AugmentedPair {
    std::string anchor;
    std::string t;
    std::string t_prime;
};

/// Throws TokenTooShort (< 2) / TokenTooLong (> 24).
std::string augment(std::string_view token, const AugmentPolicy& policy, Rng& rng);
AugmentedPair make_pair(std::string_view token, const AugmentPolicy& policy, Rng& rng);

}  // namespace yzr
