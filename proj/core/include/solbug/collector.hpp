#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solbug/error.hpp"

namespace solbug::collector {

/// The token was rejected. Not retried.
class AuthError : public Error {
public:
    using Error::Error;
};

/// The host stayed unreachable or kept failing after the retry budget.
class NetworkError : public Error {
public:
    using Error::Error;
};

struct WatchConfig {
    std::vector<std::string> keywords = {
        "smart contract vulnerabilities", "smart contract bugs",     "smart contract defects",
        "smart contract problems",        "smart contract security", "smart contract analysis tools",
    };
    std::chrono::seconds interval = std::chrono::hours(24 * 15);
    std::string endpoint = "https://api.github.com";
    /// Environment variable holding the bearer token; empty disables auth.
    std::string token_env = "GITHUB_TOKEN";
    std::string state_path = "solbug-watch-state.json";
    /// "stdout" or an http(s) webhook URL.
    std::string notify = "stdout";
    /// "text" (one summary line) or "json" (the webhook payload) on stdout.
    std::string stdout_format = "text";
    int per_page = 100;
    int max_pages = 10;
    int max_retries = 4;
    std::chrono::milliseconds backoff = std::chrono::milliseconds(500);

    /// Unknown keys and invalid values are errors. Missing keys keep defaults.
    static WatchConfig from_json_text(std::string_view text, const std::string& origin = "<config>");
    static WatchConfig load(const std::filesystem::path& path);
    std::string to_json() const;
};

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

std::string format_timestamp(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SSZ" (fractional seconds and numeric offsets
/// are honoured).
std::optional<Timestamp> parse_timestamp(std::string_view text);

struct ProjectSnapshot {
    std::string id;  // "host/owner/name", lower case
    Timestamp last_update = 0;
    std::set<std::string> matched_keywords;

    bool operator==(const ProjectSnapshot&) const = default;
};

/// "https://github.com/Foo/Bar.git" or "github.com/Foo/Bar" -> "github.com/foo/bar".
std::string normalize_project_id(std::string_view host, std::string_view full_name);

struct HttpResponse {
    int status = 0;  // 0: transport failure, see `error`
    std::string body;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string error;
};

/// Minimal HTTP surface used by the collector.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// `target` is the path plus query string relative to the endpoint.
    virtual HttpResponse get(const std::string& target, const std::map<std::string, std::string>& headers) = 0;
    /// `url` is absolute.
    virtual HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) = 0;
};

/// Live transport (cpp-httplib, TLS through OpenSSL).
std::unique_ptr<HttpTransport> make_http_transport(const std::string& endpoint,
                                                   std::chrono::seconds timeout = std::chrono::seconds(30));

/// Replays responses from a recording:
///   {"get": {"<target>": {"status", "body", "headers"}}, "post": {"<url>": {...}}}
/// A target may map to an array of responses, served in order (the last
/// one repeats). Unrecorded requests get status 404. Posted bodies are kept.
class RecordedTransport : public HttpTransport {
public:
    static std::unique_ptr<RecordedTransport> from_json_text(std::string_view text,
                                                             const std::string& origin = "<recording>");
    static std::unique_ptr<RecordedTransport> load(const std::filesystem::path& path);

    void add_get(const std::string& target, HttpResponse r);
    void add_post(const std::string& url, HttpResponse r);

    HttpResponse get(const std::string& target, const std::map<std::string, std::string>& headers) override;
    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override;

    const std::vector<std::string>& requested() const { return requested_; }
    const std::vector<std::string>& posted_bodies() const { return posted_; }

private:
    std::map<std::string, std::vector<HttpResponse>> gets_;
    std::map<std::string, std::vector<HttpResponse>> posts_;
    std::map<std::string, std::size_t> served_;
    std::vector<std::string> requested_;
    std::vector<std::string> posted_;
};

/// Time and environment hooks, replaceable in tests.
struct Runtime {
    std::function<Timestamp()> now;
    std::function<void(std::chrono::milliseconds)> sleep;
    std::function<std::optional<std::string>(const std::string&)> getenv;
    /// Diagnostics (retries, rate-limit waits). May be empty.
    std::function<void(const std::string&)> log;
};

Runtime system_runtime();

/// Search target for one keyword and page.
std::string search_target(const std::string& keyword, int page, int per_page);

/// Queries every keyword, following pages, and merges the results: one
/// snapshot per project with the newest update time and every keyword that
/// matched it. Sorted by id.
std::vector<ProjectSnapshot> poll(const WatchConfig& config, HttpTransport& transport, const Runtime& rt);

struct ChangeSet {
    std::vector<std::string> added;
    std::vector<std::string> updated;
    std::vector<std::string> removed;

    bool empty() const { return added.empty() && updated.empty() && removed.empty(); }
    bool operator==(const ChangeSet&) const = default;
};

ChangeSet diff(const std::vector<ProjectSnapshot>& previous, const std::vector<ProjectSnapshot>& current);

struct WatchState {
    std::optional<Timestamp> cursor;  // time of the last delivered cycle
    std::vector<ProjectSnapshot> projects;

    bool operator==(const WatchState&) const = default;
};

std::string state_to_json(const WatchState& s);
WatchState state_from_json_text(std::string_view text, const std::string& origin = "<state>");
/// Missing file yields an empty state; a corrupt file throws.
WatchState load_state(const std::filesystem::path& path);
/// Write to a temporary file in the same directory, fsync, rename over.
void save_state(const std::filesystem::path& path, const WatchState& s);

struct DeliveryResult {
    bool ok = false;
    std::string detail;
};

/// `{added, updated, removed, at}`
std::string change_payload(const ChangeSet& changes, Timestamp at);
/// One line: "<at> added: a, b; updated: -; removed: c".
std::string change_summary(const ChangeSet& changes, Timestamp at);

/// Sends the summary to `out` or POSTs the payload to the webhook URL.
DeliveryResult notify(const ChangeSet& changes, const WatchConfig& config, Timestamp at, std::ostream& out,
                      HttpTransport* webhook);

struct CycleResult {
    bool delivered = false;  // false: state left untouched
    ChangeSet changes;
    std::size_t projects = 0;
    std::string detail;
};

/// poll -> diff -> notify -> save. The state file only advances after the
/// notification succeeded (or when there was nothing to send).
CycleResult run_cycle(const WatchConfig& config, HttpTransport& search, HttpTransport* webhook, const Runtime& rt,
                      std::ostream& out);

}  // namespace solbug::collector
