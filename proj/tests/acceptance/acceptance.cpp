// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <csignal>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "collector_fixture.hpp"
#include "metric_oracle.hpp"
#include "solbug/collector.hpp"
#include "solbug/corpus.hpp"
#include "solbug/detectors.hpp"
#include "solbug/evaluation.hpp"
#include "solbug/lexer.hpp"
#include "solbug/merge.hpp"
#include "solbug/parser.hpp"
#include "solbug/taxonomy.hpp"
#include "test_support.hpp"

namespace {

using namespace solbug;
using solbug::testing::kCorpusDir;
using solbug::testing::read_file;

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

const CorpusManifest& manifest() {
    static const CorpusManifest m = CorpusManifest::load(kCorpusDir / "manifest.json");
    return m;
}

std::string repragma(const std::string& src, const std::string& version) {
    std::regex line(R"(pragma solidity [^;]*;)");
    return std::regex_replace(src, line, version.empty() ? "" : "pragma solidity " + version + ";");
}

Outcome ac1_criteria_fidelity() {
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    int assertions = 0;
    for (const auto& spec : detector_specs()) {
        const std::string& id = spec.bug_id;
        const CorpusEntry* buggy = nullptr;
        const CorpusEntry* fixed = nullptr;
        for (const auto& e : manifest().entries()) {
            if (e.kind == EntryKind::Buggy && e.labels == std::set<std::string>{id} && !buggy) {
                buggy = &e;
            }
            if (e.kind == EntryKind::Fixed && e.fixes == id && !fixed) {
                fixed = &e;
            }
        }
        if (!buggy || !fixed) {
            o.check(false, id + ": missing fixture pair");
            continue;
        }
        // every detector runs; only the labeled kind may fire
        auto hits = detect_all(parse_file(manifest().resolve(*buggy).string()));
        std::set<std::pair<std::string, std::string>> units;
        for (const auto& f : hits) {
            units.insert({f.file, f.bug_id});
        }
        ++assertions;
        o.check(units.size() == 1 && units.begin()->second == id,
                id + ": buggy gave " + std::to_string(units.size()) + " (file, kind) findings");
        // raw occurrences: one per violating statement; the wrong-operator
        // fixture carries two such statements
        std::size_t want_raw = id == "A-a-W" ? 2 : 1;
        o.check(hits.size() == want_raw, id + ": " + std::to_string(hits.size()) + " occurrences, expected " +
                                             std::to_string(want_raw));
        auto clean = detect_all(parse_file(manifest().resolve(*fixed).string()));
        ++assertions;
        o.check(clean.empty(), id + ": fixed gave " + std::to_string(clean.size()) + " findings");
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    o.check(assertions == 14, "ran " + std::to_string(assertions) + " fixture assertions");
    o.check(ms < 1000, "took " + std::to_string(ms) + " ms");
    if (o.pass) {
        o.detail = "14 fixture assertions in " + std::to_string(ms) + " ms (A-a-W fixture: 2 occurrences, 1 file-level finding)";
    }
    return o;
}

Outcome ac2_catalog() {
    Outcome o;
    const Catalog& c = Catalog::builtin();
    o.check(c.size() == 49, std::to_string(c.size()) + " kinds");
    o.check(c.categories().size() == 9, std::to_string(c.categories().size()) + " categories");
    std::size_t partitioned = 0;
    for (const auto& cat : c.categories()) {
        partitioned += c.in_category(cat.id).size();
    }
    o.check(partitioned == 49, "category partition covers " + std::to_string(partitioned));
    const std::vector<std::pair<std::string, Severity>> spot = {
        {"D-a-R", Severity::Critical}, {"H-a-S", Severity::Critical}, {"D-b-L", Severity::Critical},
        {"H-a-WC", Severity::Critical}, {"F-c-T", Severity::Middle},  {"G-a-B", Severity::Low},
        {"I-a-I", Severity::Low},      {"I-a-N", Severity::Low},      {"I-a-UC", Severity::Low},
        {"I-a-UD", Severity::Low}};
    for (const auto& [id, sev] : spot) {
        const BugKind* k = c.find(id);
        o.check(k && k->severity == sev, id + " severity");
    }
    int graded = 0;
    for (const auto& k : c.kinds()) {
        auto g = grade_severity(k.effects);
        if (g && *g == k.severity) {
            ++graded;
        } else {
            o.check(false, k.id + " not reproduced by the rubric");
        }
    }
    if (o.pass) {
        o.detail = "49 kinds, 9 categories, 10 spot checks, rubric reproduces " + std::to_string(graded) + "/49";
    }
    return o;
}

Outcome ac3_coverage() {
    Outcome o;
    double cov = coverage({"A-a-IO", "D-a-R", "F-c-T"}, Catalog::builtin());
    std::ostringstream s;
    s.precision(9);
    s << "coverage " << cov;
    o.check(std::abs(cov - 3.0 / 49.0) < 1e-9, s.str() + " != 3/49");
    o.check(std::abs(cov - 0.061224) < 1e-6, s.str() + " != 0.061224");
    o.detail = o.pass ? s.str() + " (3/49)" : o.detail;
    return o;
}

Outcome ac4_metric_oracle() {
    Outcome o;
    std::mt19937 rng(20240417);
    int undefined_p = 0;
    int undefined_r = 0;
    for (int i = 0; i < 20; ++i) {
        auto c = solbug::testing::make_synthetic_case(rng, Catalog::builtin());
        auto want = solbug::testing::oracle_counts(c);
        auto got = evaluate(c.report, c.manifest, Catalog::builtin());
        auto wp = solbug::testing::oracle_ratio(want.tp, want.fp);
        auto wr = solbug::testing::oracle_ratio(want.tp, want.fn);
        o.check(got.overall.micro_precision == wp, "corpus " + std::to_string(i) + ": precision differs");
        o.check(got.overall.micro_recall == wr, "corpus " + std::to_string(i) + ": recall differs");
        undefined_p += !wp;
        undefined_r += !wr;
    }
    // the zero-denominator path must have been exercised
    o.check(undefined_p > 0 && undefined_r > 0, "no undefined case generated");
    if (o.pass) {
        o.detail = "20 corpora; undefined precision in " + std::to_string(undefined_p) + ", undefined recall in " +
                   std::to_string(undefined_r);
    }
    return o;
}

BugRecord rec(std::string source, std::string name, std::string behavior, std::set<std::string> consequences) {
    BugRecord r;
    r.source = std::move(source);
    r.name = std::move(name);
    r.behavior = std::move(behavior);
    r.consequences = std::move(consequences);
    return r;
}

Outcome ac5_merge() {
    Outcome o;
    auto keep = merge_records({rec("a", "X", "reentrant call", {"steal ethers"}), rec("b", "Y", "overflow", {"loss"})});
    o.check(keep.size() == 2, "rule 1");
    auto unioned = merge_records({rec("a", "Reentrancy", "reentrant-call", {"steal ethers"}),
                                  rec("b", "Recursive Call", "reentrant-call", {"drain balance"})});
    o.check(unioned.size() == 1 &&
                unioned[0].consequences == std::set<std::string>{"steal ethers", "drain balance"} &&
                unioned[0].renamed,
            "rule 2");
    auto same = rec("a", "Reentrancy", "reentrant call", {"steal ethers"});
    auto collapsed = merge_records({same, same});
    o.check(collapsed.size() == 1 && collapsed[0].name == "Reentrancy", "rule 3");

    const std::vector<std::string> behaviors = {"reentrant call", "REENTRANT  call", "overflow", "tx origin",
                                                "unchecked send"};
    const std::vector<std::string> consequences = {"steal", "drain", "lock", "skew"};
    const std::vector<std::string> names = {"A", "B", "C", "D"};
    std::mt19937 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<BugRecord> input;
        for (int n = static_cast<int>(rng() % 14); n > 0; --n) {
            auto r = rec("src" + std::to_string(rng() % 3), names[rng() % names.size()],
                         behaviors[rng() % behaviors.size()], {consequences[rng() % consequences.size()]});
            if (rng() % 2) {
                r.consequences.insert(consequences[rng() % consequences.size()]);
            }
            input.push_back(r);
            if (rng() % 3 == 0) {
                input.push_back(r);
            }
        }
        auto once = merge_records(input);
        if (merge_records(once) != once) {
            o.check(false, "not idempotent on trial " + std::to_string(trial));
            break;
        }
        std::shuffle(input.begin(), input.end(), rng);
        if (merge_records(input) != once) {
            o.check(false, "order-sensitive on trial " + std::to_string(trial));
            break;
        }
    }
    if (o.pass) {
        o.detail = "3 rule examples; idempotent and permutation-invariant on 100 random multisets";
    }
    return o;
}

Outcome ac6_crafted() {
    Outcome o;
    int crafted = 0;
    for (const auto& e : manifest().entries()) {
        if (e.kind != EntryKind::Crafted) {
            continue;
        }
        ++crafted;
        std::set<std::string> got;
        for (const auto& f : detect_all(parse_file(manifest().resolve(e).string()))) {
            got.insert(f.bug_id);
        }
        o.check(got == e.expected(), e.path + ": outcome differs from manifest");
    }
    auto report = evaluate(run_builtin_tool(manifest()), manifest(), Catalog::builtin(), true);
    const MetricsView* plain = nullptr;
    const MetricsView* trap = nullptr;
    for (const auto& v : report.split) {
        (v.name == "crafted" ? trap : plain) = &v;
    }
    o.check(plain && trap && plain->micro_recall && trap->micro_recall, "split recall undefined");
    if (o.pass) {
        o.check(*trap->micro_recall <= *plain->micro_recall, "crafted recall exceeds non-crafted recall");
        std::ostringstream s;
        s << crafted << " crafted fixtures match the manifest; recall crafted " << *trap->micro_recall
          << " vs non-crafted " << *plain->micro_recall;
        if (trap->micro_precision && plain->micro_precision) {
            s << "; precision " << *trap->micro_precision << " vs " << *plain->micro_precision;
        }
        if (o.pass) {
            o.detail = s.str();
        }
    }
    return o;
}

Outcome ac7_version_gating() {
    Outcome o;
    for (auto [id, path] : {std::pair<std::string, std::string>{"A-a-W", "wrong_operator/buggy.sol"},
                            std::pair<std::string, std::string>{"A-c-US", "uninitialized_storage/buggy.sol"}}) {
        std::string src = read_file(kCorpusDir / path);
        auto count = [&](const std::string& v) { return detect_all(parse(repragma(src, v), path), {id}).size(); };
        o.check(count("0.6.2") == 0, id + " fires under 0.6.2");
        o.check(count("^0.4.24") >= 1, id + " silent under ^0.4.24");
        o.check(count("") >= 1, id + " silent without a pragma");
    }
    if (o.pass) {
        o.detail = "A-a-W and A-c-US: 0 findings under 0.6.2, >=1 under ^0.4.24 and with no pragma";
    }
    return o;
}

Outcome ac8_round_trip() {
    Outcome o;
    auto check_one = [&](const std::string& s, const std::string& what) {
        std::string joined;
        for (const auto& t : lex(s)) {
            joined += t.text;
        }
        o.check(joined == s, what + ": token concatenation differs");
        try {
            (void)parse(s, what);
        } catch (const std::exception& e) {
            o.check(false, what + ": parse threw " + e.what());
        }
    };
    int files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(kCorpusDir)) {
        if (e.path().extension() == ".sol") {
            check_one(read_file(e.path()), e.path().string());
            ++files;
        }
    }
    std::mt19937 rng(8);
    for (int i = 0; i < 1000; ++i) {
        std::string s(rng() % 256, '\0');
        for (auto& c : s) {
            c = static_cast<char>(rng() & 0xff);
        }
        check_one(s, "fuzz case " + std::to_string(i));
        if (!o.pass) {
            break;
        }
    }
    if (o.pass) {
        o.detail = std::to_string(files) + " corpus files and 1000 random byte strings";
    }
    return o;
}

struct CycleOutput {
    std::string state1;
    std::string state2;
    std::string stdout_text;
    std::vector<std::string> webhook_bodies;
};

CycleOutput run_watch_sequence() {
    using namespace solbug::collector;
    solbug::testing::TempDir dir;
    WatchConfig c;
    c.state_path = (dir / "state.json").string();
    c.token_env = "";
    c.per_page = 50;
    auto search = solbug::testing::headline_search();
    RecordedTransport first;
    for (const auto& [kw, repos] : search) {
        solbug::testing::add_search(first, kw, repos, c.per_page);
    }
    std::ostringstream out;
    CycleOutput r;
    run_cycle(c, first, nullptr, solbug::testing::fake_runtime(1700000000), out);
    r.state1 = read_file(c.state_path);

    // second cycle: one project moves, one disappears, webhook delivery
    auto& repos = search.begin()->second;
    repos[0].updated_at = "2023-11-20T10:00:00Z";
    repos.pop_back();
    RecordedTransport second;
    for (const auto& [kw, list] : search) {
        solbug::testing::add_search(second, kw, list, c.per_page);
    }
    c.notify = "https://hooks.example.test/solbug";
    RecordedTransport hook;
    hook.add_post(c.notify, {200, "", {}, ""});
    run_cycle(c, second, &hook, solbug::testing::fake_runtime(1700000000 + 15 * 86400), out);
    r.state2 = read_file(c.state_path);
    r.stdout_text = out.str();
    r.webhook_bodies = hook.posted_bodies();
    return r;
}

Outcome ac9_collector() {
    using namespace solbug::collector;
    Outcome o;
    auto a = run_watch_sequence();
    auto b = run_watch_sequence();
    o.check(a.state1 == b.state1 && a.state2 == b.state2, "state files differ between runs");
    o.check(a.stdout_text == b.stdout_text && a.webhook_bodies == b.webhook_bodies, "notifications differ");
    o.check(a.webhook_bodies.size() == 1, "expected one webhook delivery");
    o.check(state_from_json_text(a.state1).projects.size() == 266, "first cycle did not record 266 projects");

    // kill a writer mid-save repeatedly; the file must always load
    solbug::testing::TempDir dir;
    const auto path = dir / "state.json";
    WatchState base = state_from_json_text(a.state1);
    save_state(path, base);
    int kills = 0;
    for (int round = 0; round < 20; ++round) {
        pid_t pid = ::fork();
        if (pid == 0) {
            WatchState s = base;
            for (Timestamp t = 1;; ++t) {
                s.cursor = *base.cursor + t;
                save_state(path, s);
            }
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(3 + 5 * round));
        ::kill(pid, SIGKILL);
        int status = 0;
        ::waitpid(pid, &status, 0);
        kills += WIFSIGNALED(status);
        try {
            WatchState s = load_state(path);
            o.check(s.projects == base.projects, "round " + std::to_string(round) + ": projects changed");
        } catch (const std::exception& e) {
            o.check(false, "round " + std::to_string(round) + ": " + e.what());
        }
    }
    if (o.pass) {
        o.detail = "two identical runs (266 projects, 2 cycles); state loadable after " + std::to_string(kills) +
                   " SIGKILLs during writes";
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"AC1 criteria fidelity", ac1_criteria_fidelity},
        {"AC2 catalog conformance", ac2_catalog},
        {"AC3 coverage arithmetic", ac3_coverage},
        {"AC4 metric oracle", ac4_metric_oracle},
        {"AC5 merge properties", ac5_merge},
        {"AC6 crafted-trap ledger", ac6_crafted},
        {"AC7 version gating", ac7_version_gating},
        {"AC8 frontend round-trip", ac8_round_trip},
        {"AC9 collector determinism", ac9_collector},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
