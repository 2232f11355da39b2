#include <gtest/gtest.h>

#include <set>

#include "yzr/augmentor.hpp"
#include "yzr/error.hpp"
#include "yzr/fixtures.hpp"
#include "testkit.hpp"

using namespace yzr;

namespace {

// v is x with some interior characters deleted or replaced by '*', endpoints kept.
bool aligns(const std::string& x, const std::string& v) {
    if (v.size() < 2 || v.front() != x.front() || v.back() != x.back()) return false;
    const std::string xi = x.substr(1, x.size() - 2);
    const std::string vi = v.substr(1, v.size() - 2);
    // can[i][j]: vi[j..] aligns onto xi[i..]
    std::vector<std::vector<char>> can(xi.size() + 1, std::vector<char>(vi.size() + 1, 0));
    for (std::size_t i = xi.size() + 1; i-- > 0;) {
        for (std::size_t j = vi.size() + 1; j-- > 0;) {
            if (j == vi.size()) {
                can[i][j] = 1;
            } else if (i == xi.size()) {
                can[i][j] = 0;
            } else {
                can[i][j] = can[i + 1][j] || ((vi[j] == xi[i] || vi[j] == '*') && can[i + 1][j + 1]);
            }
        }
    }
    return can[0][0];
}

int edit_count(const std::string& x, const std::string& v) {
    int stars = 0;
    for (char c : v) stars += c == '*';
    return static_cast<int>(x.size() - v.size()) + stars;
}

}  // namespace

TEST(AugmentPolicy, MaxOps) {
    const AugmentPolicy train = AugmentPolicy::training();
    EXPECT_EQ(train.max_ops(2), 0);
    EXPECT_EQ(train.max_ops(3), 1);
    EXPECT_EQ(train.max_ops(4), 1);
    EXPECT_EQ(train.max_ops(8), 2);
    EXPECT_EQ(train.max_ops(24), 6);
    const AugmentPolicy valid = AugmentPolicy::validation();
    for (int len = 3; len <= 24; ++len) EXPECT_EQ(valid.max_ops(len), 1);
    for (int len = 3; len <= 24; ++len) {
        EXPECT_LE(train.max_ops(len), len - 2);
        if (len >= 4) EXPECT_LT(train.max_ops(len), len - 2);
    }
}

TEST(AugmentPolicy, Validation) {
    AugmentPolicy p;
    p.p_delete = 1.5;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.keep_endpoints = false;
    EXPECT_THROW(p.validate(), Error);
    EXPECT_NO_THROW(AugmentPolicy{}.validate());
}

TEST(Augment, BitchNeverLosesItsEndpoints) {
    Rng rng(1);
    std::set<std::string> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::string v = augment("bitch", AugmentPolicy::training(), rng);
        EXPECT_NE(v, "itch");
        EXPECT_EQ(v.front(), 'b');
        EXPECT_EQ(v.back(), 'h');
        seen.insert(v);
    }
    EXPECT_TRUE(seen.count("b*tch"));
    EXPECT_TRUE(seen.count("btch"));
}

TEST(Augment, TwoCharacterTokensAreUntouched) {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(augment("ab", AugmentPolicy::training(), rng), "ab");
    const AugmentedPair p = make_pair("ab", AugmentPolicy::training(), rng);
    EXPECT_EQ(p.t, "ab");
    EXPECT_EQ(p.t_prime, "ab");
}

TEST(Augment, SeededDeterminism) {
    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(augment("abcdef", AugmentPolicy::training(), a), augment("abcdef", AugmentPolicy::training(), b));
    }
    Rng c(42), d(42);
    const auto p = make_pair("abcdefgh", AugmentPolicy::training(), c);
    const auto q = make_pair("abcdefgh", AugmentPolicy::training(), d);
    EXPECT_EQ(p.t, q.t);
    EXPECT_EQ(p.t_prime, q.t_prime);
}

TEST(Augment, Errors) {
    Rng rng(0);
    try {
        augment("a", AugmentPolicy::training(), rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TokenTooShort);
    }
    try {
        augment(std::string(25, 'a'), AugmentPolicy::training(), rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TokenTooLong);
    }
}

TEST(Augment, EveryOutputIsAnInteriorEditWithinBudget) {
    Rng rng(9);
    const AugmentPolicy policy = AugmentPolicy::training();
    for (const auto& x : testkit::random_tokens(400, 2, 8, 77)) {
        const int len = static_cast<int>(x.size());
        for (int r = 0; r < 10; ++r) {
            const std::string v = augment(x, policy, rng);
            ASSERT_TRUE(aligns(x, v)) << x << " -> " << v;
            ASSERT_LE(edit_count(x, v), policy.max_ops(len)) << x << " -> " << v;
            ASSERT_GE(static_cast<int>(v.size()), len - policy.max_ops(len));
            ASSERT_LE(v.size(), x.size());
        }
    }
}

TEST(Augment, OneEditSpaceMatchesEnumeration) {
    // With one edit the reachable set is exactly the 1-edit variant space
    // (plus the untouched token for k = 0).
    AugmentPolicy p = AugmentPolicy::validation();
    Rng rng(4);
    std::set<std::string> seen;
    for (int i = 0; i < 4000; ++i) seen.insert(augment("abcde", p, rng));
    std::set<std::string> expect{"abcde", "a*cde", "ab*de", "abc*e", "acde", "abde", "abce"};
    EXPECT_EQ(seen, expect);
    for (const auto& v : variant_space("fuck", 1)) EXPECT_TRUE(aligns("fuck", v));
}

TEST(Augment, DeleteProbabilityExtremes) {
    AugmentPolicy stars;
    stars.p_delete = 0.0;
    AugmentPolicy dels;
    dels.p_delete = 1.0;
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(augment("abcdefghij", stars, rng).size(), 10u);
        EXPECT_EQ(augment("abcdefghij", dels, rng).find('*'), std::string::npos);
    }
}
