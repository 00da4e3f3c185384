#include <gtest/gtest.h>

#include "solbug/pragma.hpp"

namespace solbug {
namespace {

CompilerVersion v(int a, int b, int c) { return {a, b, c}; }

TEST(Pragma, VersionAppliesExamples) {
    auto affected = PragmaConstraint::parse("<=0.4.26");
    EXPECT_TRUE(version_applies(PragmaConstraint::parse("^0.4.24"), affected));
    EXPECT_FALSE(version_applies(PragmaConstraint::parse("0.6.2"), affected));
    EXPECT_TRUE(version_applies(PragmaConstraint::unbounded(), affected));
}

TEST(Pragma, CaretStaysInMinorSeries) {
    auto p = PragmaConstraint::parse("^0.4.24");
    EXPECT_FALSE(p.contains(v(0, 4, 23)));
    EXPECT_TRUE(p.contains(v(0, 4, 24)));
    EXPECT_TRUE(p.contains(v(0, 4, 99)));
    EXPECT_FALSE(p.contains(v(0, 5, 0)));
}

TEST(Pragma, PinnedVersion) {
    auto p = PragmaConstraint::parse("0.6.2");
    EXPECT_TRUE(p.contains(v(0, 6, 2)));
    EXPECT_FALSE(p.contains(v(0, 6, 3)));
    EXPECT_FALSE(p.contains(v(0, 6, 1)));
}

TEST(Pragma, MultiClauseIntersects) {
    auto p = PragmaConstraint::parse(">=0.4.22 <0.6.0");
    EXPECT_TRUE(p.contains(v(0, 4, 22)));
    EXPECT_TRUE(p.contains(v(0, 5, 17)));
    EXPECT_FALSE(p.contains(v(0, 6, 0)));
    EXPECT_FALSE(p.contains(v(0, 4, 21)));
}

TEST(Pragma, DisjointClausesAreUnsatisfiable) {
    auto p = PragmaConstraint::parse(">=0.6.0 <0.5.0");
    EXPECT_TRUE(p.unsatisfiable);
    EXPECT_FALSE(version_applies(p, PragmaConstraint::unbounded()));
}

TEST(Pragma, IntersectMatchesContains) {
    auto a = PragmaConstraint::parse("^0.4.20");
    auto b = PragmaConstraint::parse("<=0.4.26");
    auto both = a.intersect(b);
    for (int minor = 3; minor <= 7; ++minor) {
        for (int patch = 0; patch <= 30; ++patch) {
            auto x = v(0, minor, patch);
            EXPECT_EQ(both.contains(x), a.contains(x) && b.contains(x)) << x.str();
        }
    }
}

TEST(Pragma, PartialAndWildcardVersions) {
    auto minor_only = PragmaConstraint::parse("0.4");
    EXPECT_TRUE(minor_only.contains(v(0, 4, 0)));
    EXPECT_TRUE(minor_only.contains(v(0, 4, 26)));
    EXPECT_FALSE(minor_only.contains(v(0, 5, 0)));
    auto wild = PragmaConstraint::parse("0.5.x");
    EXPECT_TRUE(wild.contains(v(0, 5, 17)));
    EXPECT_FALSE(wild.contains(v(0, 6, 0)));
    std::vector<std::string> diags;
    PragmaConstraint::parse("0.x.1", &diags);
    EXPECT_FALSE(diags.empty());
}

TEST(Pragma, GarbageReportsDiagnostics) {
    std::vector<std::string> diags;
    auto p = PragmaConstraint::parse("banana", &diags);
    EXPECT_FALSE(diags.empty());
    EXPECT_TRUE(p.is_unbounded());
}

TEST(Pragma, CanonicalRoundTrips) {
    for (std::string_view text : {"^0.4.24", "0.6.2", "<=0.4.26", ">=0.4.22 <0.6.0", "*"}) {
        auto p = PragmaConstraint::parse(text);
        EXPECT_EQ(PragmaConstraint::parse(p.canonical()), p) << text;
    }
}

TEST(CompilerVersionTest, ParseAndOrder) {
    auto a = CompilerVersion::parse("0.4.26");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->str(), "0.4.26");
    EXPECT_LT(*a, v(0, 5, 0));
    EXPECT_FALSE(CompilerVersion::parse("0.x.1"));
    EXPECT_FALSE(CompilerVersion::parse("0.4"));
    EXPECT_FALSE(CompilerVersion::parse("0.4.26."));
    EXPECT_FALSE(CompilerVersion::parse("0.4.26abc"));
}

}  // namespace
}  // namespace solbug
