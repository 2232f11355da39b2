#include "yzr/augmentor.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "yzr/chardomain.hpp"
#include "yzr/error.hpp"

namespace yzr {

int AugmentPolicy::max_ops(int len) const {
    if (len <= 2) return 0;
    int ops = std::max(ops_min, len / std::max(ops_divisor, 1));
    if (ops_max >= 0) ops = std::min(ops, ops_max);
    return std::clamp(ops, 0, len - 2);
}

void AugmentPolicy::validate() const {
    if (!(p_delete >= 0.0 && p_delete <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p_delete must be in [0, 1]");
    if (ops_divisor < 1 || ops_min < 0) throw Error(ErrorCode::InvalidArgument, "invalid augmentation budget");
    if (!keep_endpoints) throw Error(ErrorCode::InvalidArgument, "endpoint retention cannot be disabled");
}

std::string augment(std::string_view token, const AugmentPolicy& policy, Rng& rng) {
    const int len = static_cast<int>(token.size());
    if (len < 2) throw Error(ErrorCode::TokenTooShort, "cannot augment '" + std::string(token) + "'");
    if (len > kSeqLen) throw Error(ErrorCode::TokenTooLong, "cannot augment '" + std::string(token) + "'");
    const int max_ops = policy.max_ops(len);
    if (max_ops == 0) return std::string(token);

    const int k = std::uniform_int_distribution<int>(0, max_ops)(rng);
    std::vector<int> interior(static_cast<std::size_t>(len - 2));
    std::iota(interior.begin(), interior.end(), 1);
    // partial Fisher-Yates: the first k slots become the edited positions
    for (int i = 0; i < k; ++i) {
        const int j = std::uniform_int_distribution<int>(i, len - 3)(rng);
        std::swap(interior[static_cast<std::size_t>(i)], interior[static_cast<std::size_t>(j)]);
    }
    enum class Edit : char { Keep, Delete, Star };
    std::vector<Edit> edits(static_cast<std::size_t>(len), Edit::Keep);
    std::bernoulli_distribution del(policy.p_delete);
    for (int i = 0; i < k; ++i) {
        edits[static_cast<std::size_t>(interior[static_cast<std::size_t>(i)])] = del(rng) ? Edit::Delete : Edit::Star;
    }
    std::string out;
    out.reserve(token.size());
    for (int i = 0; i < len; ++i) {
        switch (edits[static_cast<std::size_t>(i)]) {
            case Edit::Keep: out.push_back(token[static_cast<std::size_t>(i)]); break;
            case Edit::Star: out.push_back('*'); break;
            case Edit::Delete: break;
        }
    }
    return out;
}

AugmentedPair make_pair(std::string_view token, const AugmentPolicy& policy, Rng& rng) {
    AugmentedPair pair;
    pair.anchor = std::string(token);
    pair.t = augment(token, policy, rng);
    pair.t_prime = augment(token, policy, rng);
    return pair;
}

}  // namespace yzr
