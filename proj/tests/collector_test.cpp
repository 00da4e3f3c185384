#include <csignal>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "collector_fixture.hpp"
#include "solbug/collector.hpp"
#include "test_support.hpp"

namespace solbug::collector {
namespace {

using solbug::testing::add_search;
using solbug::testing::fake_runtime;
using solbug::testing::Repo;
using solbug::testing::TempDir;

constexpr Timestamp kNow = 1700000000;

WatchConfig config_for(const std::vector<std::string>& keywords, const std::filesystem::path& state) {
    WatchConfig c;
    c.keywords = keywords;
    c.state_path = state.string();
    c.per_page = 10;
    c.token_env = "";
    return c;
}

TEST(Collector, DefaultsMatchTheWatchSchedule) {
    WatchConfig c;
    EXPECT_EQ(c.interval, std::chrono::hours(24 * 15));
    EXPECT_EQ(c.keywords.size(), 6u);
    EXPECT_EQ(c.notify, "stdout");
    auto parsed = WatchConfig::from_json_text("{}");
    EXPECT_EQ(parsed.interval, c.interval);
}

TEST(Collector, ConfigValidation) {
    EXPECT_THROW(WatchConfig::from_json_text(R"({"keywords": []})"), Error);
    EXPECT_THROW(WatchConfig::from_json_text(R"({"interval_days": -1})"), Error);
    EXPECT_THROW(WatchConfig::from_json_text(R"({"colour": "blue"})"), Error);
    EXPECT_THROW(WatchConfig::from_json_text("nope"), Error);
    auto c = WatchConfig::from_json_text(R"({"interval_days": 3, "notify": "http://127.0.0.1:9/hook"})");
    EXPECT_EQ(c.interval, std::chrono::hours(72));
    EXPECT_EQ(WatchConfig::from_json_text(c.to_json()).to_json(), c.to_json());
}

TEST(Collector, Timestamps) {
    EXPECT_EQ(parse_timestamp("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(parse_timestamp("2020-02-29T12:00:00Z"), 1582977600);
    EXPECT_EQ(parse_timestamp("2020-02-29T14:00:00+02:00"), 1582977600);
    EXPECT_EQ(parse_timestamp("2020-02-29T12:00:00.750Z"), 1582977600);
    EXPECT_FALSE(parse_timestamp("2020-13-01T00:00:00Z"));
    EXPECT_FALSE(parse_timestamp("yesterday"));
    EXPECT_EQ(format_timestamp(1582977600), "2020-02-29T12:00:00Z");
}

TEST(Collector, ProjectIds) {
    EXPECT_EQ(normalize_project_id("api.github.com", "Foo/Bar"), "github.com/foo/bar");
    EXPECT_EQ(normalize_project_id("api.github.com", "https://github.com/Foo/Bar.git"), "github.com/foo/bar");
}

TEST(Poll, DuplicatesAcrossKeywordsMerge) {
    TempDir dir;
    RecordedTransport t;
    std::vector<Repo> repos = {{"a/one", "2021-01-01T00:00:00Z"}, {"b/two", "2021-02-01T00:00:00Z"}};
    add_search(t, "k1", repos, 10);
    repos[0].updated_at = "2021-03-01T00:00:00Z";
    add_search(t, "k2", repos, 10);
    auto got = poll(config_for({"k1", "k2"}, dir / "s.json"), t, fake_runtime(kNow));
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].id, "github.com/a/one");
    EXPECT_EQ(got[0].last_update, *parse_timestamp("2021-03-01T00:00:00Z"));
    EXPECT_EQ(got[0].matched_keywords, (std::set<std::string>{"k1", "k2"}));
}

TEST(Poll, EmptyResults) {
    TempDir dir;
    RecordedTransport t;
    add_search(t, "k", {}, 10);
    EXPECT_TRUE(poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow)).empty());
}

TEST(Poll, HeadlineProjectCountWithPaging) {
    TempDir dir;
    RecordedTransport t;
    WatchConfig c;
    c.state_path = (dir / "s.json").string();
    c.token_env = "";
    c.per_page = 20;
    for (const auto& [kw, repos] : solbug::testing::headline_search()) {
        add_search(t, kw, repos, c.per_page);
    }
    auto got = poll(c, t, fake_runtime(kNow));
    EXPECT_EQ(got.size(), 266u);
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end(), [](auto& a, auto& b) { return a.id < b.id; }));
    for (const auto& target : t.requested()) {
        EXPECT_NE(target.find("per_page=20"), std::string::npos);
    }
}

TEST(Poll, TokenIsSentAsBearer) {
    class Capture : public HttpTransport {
    public:
        HttpResponse get(const std::string&, const std::map<std::string, std::string>& h) override {
            auto it = h.find("Authorization");
            auth = it == h.end() ? "" : it->second;
            return {200, R"({"total_count": 0, "items": []})", {}, ""};
        }
        HttpResponse post(const std::string&, const std::string&, const std::string&) override { return {}; }
        std::string auth;
    } t;
    WatchConfig c;
    c.keywords = {"k"};
    auto rt = fake_runtime(kNow);
    rt.getenv = [](const std::string& n) -> std::optional<std::string> {
        return n == "GITHUB_TOKEN" ? std::optional<std::string>("s3cret") : std::nullopt;
    };
    poll(c, t, rt);
    EXPECT_EQ(t.auth, "Bearer s3cret");
}

TEST(Poll, UnauthorizedIsFatal) {
    RecordedTransport t;
    t.add_get(search_target("k", 1, 10), {401, R"({"message": "Bad credentials"})", {}, ""});
    TempDir dir;
    EXPECT_THROW(poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow)), AuthError);
    EXPECT_EQ(t.requested().size(), 1u);
}

TEST(Poll, RateLimitSleepsUntilReset) {
    RecordedTransport t;
    const std::string target = search_target("k", 1, 10);
    HttpResponse limited{403, "{}", {{"x-ratelimit-remaining", "0"}, {"x-ratelimit-reset", std::to_string(kNow + 42)}},
                         ""};
    t.add_get(target, limited);
    t.add_get(target, {200, R"({"total_count": 0, "items": []})", {}, ""});
    std::vector<std::chrono::milliseconds> sleeps;
    TempDir dir;
    EXPECT_TRUE(poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow, &sleeps)).empty());
    ASSERT_EQ(sleeps.size(), 1u);
    EXPECT_EQ(sleeps[0], std::chrono::seconds(42));
}

TEST(Poll, RetryAfterOn429) {
    RecordedTransport t;
    const std::string target = search_target("k", 1, 10);
    t.add_get(target, {429, "", {{"retry-after", "7"}}, ""});
    t.add_get(target, {200, R"({"total_count": 0, "items": []})", {}, ""});
    std::vector<std::chrono::milliseconds> sleeps;
    TempDir dir;
    poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow, &sleeps));
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::seconds(7)}));
}

TEST(Poll, ServerErrorsBackOffThenGiveUp) {
    RecordedTransport t;
    t.add_get(search_target("k", 1, 10), {503, "", {}, ""});
    std::vector<std::chrono::milliseconds> sleeps;
    TempDir dir;
    auto c = config_for({"k"}, dir / "s.json");
    c.max_retries = 3;
    c.backoff = std::chrono::milliseconds(100);
    EXPECT_THROW(poll(c, t, fake_runtime(kNow, &sleeps)), NetworkError);
    using ms = std::chrono::milliseconds;
    EXPECT_EQ(sleeps, (std::vector<ms>{ms(100), ms(200), ms(400)}));
}

TEST(Poll, TransientFailureRecovers) {
    RecordedTransport t;
    const std::string target = search_target("k", 1, 10);
    t.add_get(target, {0, "", {}, "connection reset"});
    t.add_get(target, {200, R"({"total_count": 1, "items": [{"full_name": "a/b", "updated_at": "2021-01-01T00:00:00Z"}]})",
                       {}, ""});
    TempDir dir;
    EXPECT_EQ(poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow)).size(), 1u);
}

TEST(Poll, MalformedBodyIsAnError) {
    RecordedTransport t;
    t.add_get(search_target("k", 1, 10), {200, "<html>", {}, ""});
    TempDir dir;
    EXPECT_THROW(poll(config_for({"k"}, dir / "s.json"), t, fake_runtime(kNow)), Error);
}

ProjectSnapshot snap(std::string id, Timestamp t) { return {std::move(id), t, {"k"}}; }

TEST(Diff, Examples) {
    std::vector<ProjectSnapshot> a = {snap("x", 1), snap("y", 2)};
    EXPECT_TRUE(diff(a, a).empty());
    auto b = a;
    b[1].last_update = 3;
    EXPECT_EQ(diff(a, b), (ChangeSet{{}, {"y"}, {}}));
    EXPECT_EQ(diff({}, a), (ChangeSet{{"x", "y"}, {}, {}}));
    EXPECT_EQ(diff(a, {snap("x", 1)}), (ChangeSet{{}, {}, {"y"}}));
}

TEST(Notify, StdoutSummaryLine) {
    WatchConfig c;
    std::ostringstream out;
    auto r = notify({{"github.com/a/x"}, {}, {}}, c, kNow, out, nullptr);
    EXPECT_TRUE(r.ok);
    std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_NE(text.find("github.com/a/x"), std::string::npos);
}

TEST(Notify, JsonPayload) {
    WatchConfig c;
    c.stdout_format = "json";
    std::ostringstream out;
    notify({{"a"}, {"b"}, {}}, c, kNow, out, nullptr);
    auto doc = nlohmann::json::parse(out.str());
    EXPECT_EQ(doc["added"], nlohmann::json::array({"a"}));
    EXPECT_EQ(doc["at"], format_timestamp(kNow));
}

TEST(State, RoundTripAndMissingFile) {
    TempDir dir;
    EXPECT_EQ(load_state(dir / "absent.json"), WatchState{});
    WatchState s{kNow, {snap("github.com/a/b", 5)}};
    save_state(dir / "s.json", s);
    EXPECT_EQ(load_state(dir / "s.json"), s);
    solbug::testing::write_file(dir / "bad.json", "{\"cursor\":");
    EXPECT_THROW(load_state(dir / "bad.json"), Error);
    // no temporary files left behind
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) {
        ++files;
    }
    EXPECT_EQ(files, 2u);
}

class Cycle : public ::testing::Test {
protected:
    void SetUp() override {
        config = config_for({"k"}, dir / "state.json");
        add_search(search, "k", {{"a/one", "2021-01-01T00:00:00Z"}}, 10);
    }
    TempDir dir;
    WatchConfig config;
    RecordedTransport search;
};

TEST_F(Cycle, FirstRunReportsEverythingAsAdded) {
    std::ostringstream out;
    auto r = run_cycle(config, search, nullptr, fake_runtime(kNow), out);
    EXPECT_TRUE(r.delivered);
    EXPECT_EQ(r.changes.added, std::vector<std::string>{"github.com/a/one"});
    EXPECT_EQ(load_state(config.state_path).cursor, kNow);
}

TEST_F(Cycle, NoChangesStillAdvancesState) {
    std::ostringstream out;
    run_cycle(config, search, nullptr, fake_runtime(kNow), out);
    std::ostringstream second;
    auto r = run_cycle(config, search, nullptr, fake_runtime(kNow + 100), second);
    EXPECT_TRUE(r.delivered);
    EXPECT_TRUE(r.changes.empty());
    EXPECT_TRUE(second.str().empty());
    EXPECT_EQ(load_state(config.state_path).cursor, kNow + 100);
}

TEST_F(Cycle, WebhookFailureKeepsState) {
    config.notify = "http://hooks.invalid/solbug";
    RecordedTransport hook;
    hook.add_post(config.notify, {500, "boom", {}, ""});
    std::ostringstream out;
    auto r = run_cycle(config, search, &hook, fake_runtime(kNow), out);
    EXPECT_FALSE(r.delivered);
    EXPECT_FALSE(std::filesystem::exists(config.state_path));
    ASSERT_EQ(hook.posted_bodies().size(), 1u);

    // next cycle retries the same diff and succeeds
    hook.add_post(config.notify, {204, "", {}, ""});
    auto again = run_cycle(config, search, &hook, fake_runtime(kNow + 1), out);
    EXPECT_TRUE(again.delivered);
    EXPECT_EQ(again.changes.added, r.changes.added);
}

TEST_F(Cycle, ByteIdenticalAcrossRuns) {
    TempDir other;
    auto c2 = config;
    c2.state_path = (other / "state.json").string();
    RecordedTransport s2;
    add_search(s2, "k", {{"a/one", "2021-01-01T00:00:00Z"}}, 10);
    std::ostringstream o1;
    std::ostringstream o2;
    run_cycle(config, search, nullptr, fake_runtime(kNow), o1);
    run_cycle(c2, s2, nullptr, fake_runtime(kNow), o2);
    EXPECT_EQ(o1.str(), o2.str());
    EXPECT_EQ(solbug::testing::read_file(config.state_path), solbug::testing::read_file(c2.state_path));
}

TEST(LiveTransport, LocalServerSearchAndWebhook) {
    httplib::Server server;
    std::vector<std::string> posted;
    server.Get("/search/repositories", [](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = {{"total_count", 1},
                               {"items", {{{"full_name", "Local/" + req.get_param_value("q")},
                                           {"updated_at", "2022-05-05T05:05:05Z"}}}}};
        res.set_content(body.dump(), "application/json");
    });
    server.Post("/hook", [&](const httplib::Request& req, httplib::Response& res) {
        posted.push_back(req.body);
        res.status = 500;
    });
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir;
    WatchConfig c = config_for({"abc"}, dir / "state.json");
    c.endpoint = "http://127.0.0.1:" + std::to_string(port);
    c.notify = c.endpoint + "/hook";
    auto search = make_http_transport(c.endpoint, std::chrono::seconds(5));
    auto hook = make_http_transport(c.notify, std::chrono::seconds(5));
    std::ostringstream out;
    auto r = run_cycle(c, *search, hook.get(), fake_runtime(kNow), out);
    server.stop();
    th.join();

    EXPECT_EQ(r.projects, 1u);
    EXPECT_EQ(r.changes.added, std::vector<std::string>{"127.0.0.1/local/abc"});
    EXPECT_FALSE(r.delivered);
    EXPECT_EQ(posted.size(), 1u);
    EXPECT_FALSE(std::filesystem::exists(c.state_path));
}

TEST(CrashSafety, KillDuringWriteLeavesLoadableState) {
    TempDir dir;
    const auto path = dir / "state.json";
    WatchState base{kNow, {}};
    for (int i = 0; i < 2000; ++i) {
        base.projects.push_back(snap("github.com/o/p" + std::to_string(i), i));
    }
    save_state(path, base);

    for (int round = 0; round < 10; ++round) {
        pid_t pid = ::fork();
        ASSERT_GE(pid, 0);
        if (pid == 0) {
            WatchState s = base;
            for (Timestamp t = 1;; ++t) {
                s.cursor = kNow + t;
                save_state(path, s);
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5 + 7 * round));
        ::kill(pid, SIGKILL);
        int status = 0;
        ::waitpid(pid, &status, 0);
        WatchState loaded;
        ASSERT_NO_THROW(loaded = load_state(path)) << "round " << round;
        EXPECT_EQ(loaded.projects, base.projects);
        ASSERT_TRUE(loaded.cursor);
        EXPECT_GE(*loaded.cursor, kNow);
    }
}

TEST(Recording, JsonFormat) {
    auto t = RecordedTransport::from_json_text(R"({
        "get": {"/x": [{"status": 500}, {"status": 200, "body": "ok", "headers": {"X-A": "1"}}]},
        "post": {"http://h/hook": {"status": 202}}
    })");
    EXPECT_EQ(t->get("/x", {}).status, 500);
    auto ok = t->get("/x", {});
    EXPECT_EQ(ok.body, "ok");
    EXPECT_EQ(ok.headers.at("x-a"), "1");
    EXPECT_EQ(t->get("/x", {}).status, 200);
    EXPECT_EQ(t->get("/y", {}).status, 404);
    EXPECT_EQ(t->post("http://h/hook", "{}", "application/json").status, 202);
    EXPECT_THROW(RecordedTransport::from_json_text(R"({"get": {"/x": {"status": "x"}}})"), Error);
}

}  // namespace
}  // namespace solbug::collector
