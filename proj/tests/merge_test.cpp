#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "solbug/merge.hpp"

namespace solbug {
namespace {

BugRecord rec(std::string source, std::string name, std::string behavior, std::set<std::string> consequences) {
    BugRecord r;
    r.source = std::move(source);
    r.name = std::move(name);
    r.behavior = std::move(behavior);
    r.consequences = std::move(consequences);
    return r;
}

TEST(Merge, DifferentBehaviorsKeptApart) {
    auto out = merge_records({rec("s1", "Reentrancy", "reentrant call", {"steal ethers"}),
                              rec("s2", "Integer Overflow", "arithmetic overflow", {"wrong balance"})});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_FALSE(out[0].renamed);
    EXPECT_FALSE(out[1].renamed);
}

TEST(Merge, SameBehaviorUnionsConsequences) {
    auto out = merge_records({rec("s1", "Reentrancy", "reentrant-call", {"steal ethers"}),
                              rec("s2", "Recursive Call", "reentrant-call", {"drain balance"})});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].consequences, (std::set<std::string>{"steal ethers", "drain balance"}));
    EXPECT_TRUE(out[0].renamed);
    EXPECT_EQ(out[0].aliases, (std::set<std::string>{"Reentrancy", "Recursive Call"}));
    EXPECT_EQ(out[0].source, "s1; s2");
}

TEST(Merge, IdenticalRecordsCollapse) {
    auto r = rec("s1", "Reentrancy", "reentrant call", {"steal ethers"});
    auto out = merge_records({r, r});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].renamed);
    EXPECT_EQ(out[0].name, "Reentrancy");
}

TEST(Merge, SameConsequencesKeepSmallerName) {
    auto out = merge_records({rec("s1", "Re-entrancy", "reentrant call", {"steal ethers"}),
                              rec("s2", "Reentrancy", "reentrant call", {"steal ethers"})});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].name, "Re-entrancy");
    EXPECT_EQ(out[0].aliases.size(), 2u);
    EXPECT_FALSE(out[0].renamed);
}

TEST(Merge, BehaviorKeysAreNormalized) {
    EXPECT_EQ(normalize_key("  Reentrant \t  CALL "), "reentrant call");
    auto out = merge_records({rec("a", "X", "Reentrant  Call", {"c"}), rec("b", "Y", "reentrant call", {"c"})});
    EXPECT_EQ(out.size(), 1u);
}

TEST(Merge, EmptyInput) {
    EXPECT_TRUE(merge_records({}).empty());
}

std::vector<BugRecord> random_records(std::mt19937& rng) {
    static const std::vector<std::string> behaviors = {"reentrant call", "Reentrant Call", "overflow", "tx.origin auth",
                                                       "unchecked send"};
    static const std::vector<std::string> consequences = {"steal ethers", "drain balance", "lock funds",
                                                          "wrong balance"};
    static const std::vector<std::string> names = {"Alpha", "Beta", "Gamma", "Delta", "Epsilon"};
    static const std::vector<std::string> sources = {"blog", "forum", "audit", "repo"};
    std::uniform_int_distribution<int> count(0, 12);
    std::vector<BugRecord> out;
    for (int n = count(rng); n > 0; --n) {
        BugRecord r;
        r.source = sources[rng() % sources.size()];
        r.name = names[rng() % names.size()];
        r.behavior = behaviors[rng() % behaviors.size()];
        for (int k = 1 + static_cast<int>(rng() % 2); k > 0; --k) {
            r.consequences.insert(consequences[rng() % consequences.size()]);
        }
        out.push_back(r);
        if (rng() % 4 == 0) {
            out.push_back(r);  // multiset: exact duplicates
        }
    }
    return out;
}

TEST(MergeProperty, IdempotentAndOrderInsensitive) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        auto input = random_records(rng);
        auto once = merge_records(input);
        EXPECT_EQ(merge_records(once), once) << "trial " << trial;
        EXPECT_LE(once.size(), input.size());

        auto shuffled = input;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(merge_records(shuffled), once) << "trial " << trial;

        std::set<std::string> keys;
        for (const auto& r : once) {
            EXPECT_TRUE(keys.insert(r.behavior).second);
        }
    }
}

}  // namespace
}  // namespace solbug
