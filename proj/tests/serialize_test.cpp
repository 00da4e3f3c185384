#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "solbug/error.hpp"
#include "solbug/serialize.hpp"
#include "solbug/taxonomy.hpp"

namespace solbug {
namespace {

Finding sample() {
    Finding f;
    f.bug_id = "D-a-R";
    f.file = "re.sol";
    f.contract = "Re";
    f.function = "withdraw";
    f.span = {10, 20};
    f.message = "call before write";
    f.evidence = {{10, 20}, {30, 40}};
    return f;
}

TEST(Serialize, FindingJsonShape) {
    auto j = finding_to_json(sample(), Catalog::builtin());
    EXPECT_EQ(j["bug_id"], "D-a-R");
    EXPECT_EQ(j["severity"], "Critical");
    EXPECT_EQ(j["span"]["start"], 10);
    EXPECT_EQ(j["span"]["end"], 20);
    EXPECT_EQ(j["evidence"].size(), 2u);
    EXPECT_EQ(j["function"], "withdraw");
}

TEST(Serialize, FindingTextLine) {
    EXPECT_EQ(finding_to_text(sample(), Catalog::builtin()), "re.sol:10-20: D-a-R Critical call before write");
}

TEST(Serialize, FindingsArrayIsStable) {
    std::vector<Finding> fs = {sample()};
    auto a = findings_to_json(fs, Catalog::builtin());
    EXPECT_EQ(a, findings_to_json(fs, Catalog::builtin()));
    EXPECT_EQ(a.back(), '\n');
    EXPECT_TRUE(nlohmann::json::parse(a).is_array());
    EXPECT_EQ(findings_to_json({}, Catalog::builtin()), "[]\n");
}

TEST(Serialize, RecordsRoundTrip) {
    std::string text = R"([{"source": "s1", "name": "Reentrancy", "behavior": "reentrant call",
                            "consequences": ["steal ethers"], "aliases": ["Re-entrancy"], "renamed": true}])";
    auto recs = records_from_json_text(text);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_TRUE(recs[0].renamed);
    EXPECT_EQ(records_from_json_text(records_to_json(recs)), recs);
}

TEST(Serialize, RecordSchemaErrors) {
    EXPECT_THROW(records_from_json_text("{}"), Error);
    EXPECT_THROW(records_from_json_text(R"([{"name": "x", "behavior": "b"}])"), Error);
    EXPECT_THROW(records_from_json_text(R"([{"name": "x", "behavior": "b", "consequences": []}])"), Error);
    try {
        records_from_json_text(R"([{"name": "x"}, {"behavior": "b", "consequences": ["c"]}])");
        FAIL();
    } catch (const Error& e) {
        EXPECT_GE(e.details().size(), 2u);
    }
}

}  // namespace
}  // namespace solbug
