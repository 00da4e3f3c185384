#include "solbug/collector.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace solbug::collector {

namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys = {"keywords", "interval_days", "interval_seconds", "endpoint",
                                           "token_env", "state_path",   "notify",           "per_page",
                                           "max_pages", "max_retries",  "backoff_ms",       "stdout_format"};

std::string read_text(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(std::string("cannot read ") + what + " '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// "https://api.github.com:443/x" -> "api.github.com"
std::string url_host(std::string_view url) {
    auto scheme = url.find("://");
    std::string_view rest = scheme == std::string_view::npos ? url : url.substr(scheme + 3);
    rest = rest.substr(0, rest.find_first_of("/?#"));
    if (auto at = rest.rfind('@'); at != std::string_view::npos) {
        rest = rest.substr(at + 1);
    }
    rest = rest.substr(0, rest.find(':'));
    return lower(rest);
}

// Splits an absolute URL into "scheme://host[:port]" and the path+query.
std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme = url.find("://");
    std::size_t from = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = url.find('/', from);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

HttpResponse response_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw Error(where + ": recorded response must be an object");
    }
    HttpResponse r;
    r.status = j.value("status", 200);
    if (j.contains("body")) {
        r.body = j["body"].is_string() ? j["body"].get<std::string>() : j["body"].dump();
    }
    if (j.contains("headers")) {
        for (const auto& [k, v] : j["headers"].items()) {
            r.headers[lower(k)] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    r.error = j.value("error", "");
    return r;
}

class HttplibTransport : public HttpTransport {
public:
    HttplibTransport(std::string endpoint, std::chrono::seconds timeout)
        : endpoint_(std::move(endpoint)), timeout_(timeout) {}

    HttpResponse get(const std::string& target, const std::map<std::string, std::string>& headers) override {
        auto [base, prefix] = split_url(endpoint_);
        std::string path = (prefix == "/" ? "" : prefix) + target;
        httplib::Client cli(base);
        configure(cli);
        httplib::Headers h(headers.begin(), headers.end());
        return convert(cli.Get(path, h));
    }

    HttpResponse post(const std::string& url, const std::string& body, const std::string& content_type) override {
        auto [base, path] = split_url(url);
        httplib::Client cli(base);
        configure(cli);
        return convert(cli.Post(path, body, content_type));
    }

private:
    void configure(httplib::Client& cli) const {
        cli.set_connection_timeout(timeout_);
        cli.set_read_timeout(timeout_);
        cli.set_follow_location(true);
    }

    static HttpResponse convert(const httplib::Result& res) {
        HttpResponse out;
        if (!res) {
            out.error = httplib::to_string(res.error());
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        for (const auto& [k, v] : res->headers) {
            out.headers[lower(k)] = v;
        }
        return out;
    }

    std::string endpoint_;
    std::chrono::seconds timeout_;
};

std::optional<long long> header_number(const HttpResponse& r, const std::string& name) {
    auto it = r.headers.find(name);
    if (it == r.headers.end()) {
        return std::nullopt;
    }
    long long v = 0;
    const std::string& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

bool is_rate_limited(const HttpResponse& r) {
    if (r.status == 429) {
        return true;
    }
    return r.status == 403 && (header_number(r, "x-ratelimit-remaining") == 0LL || r.headers.count("retry-after"));
}

// GET with retries: transport errors and 5xx back off exponentially, rate
// limits sleep until the advertised reset. 401 and other 4xx are final.
HttpResponse fetch(HttpTransport& transport, const std::string& target,
                   const std::map<std::string, std::string>& headers, const WatchConfig& config, const Runtime& rt) {
    int failures = 0;
    int rate_waits = 0;
    for (;;) {
        HttpResponse r = transport.get(target, headers);
        if (r.status >= 200 && r.status < 300) {
            return r;
        }
        if (r.status == 401) {
            throw AuthError("search endpoint rejected the credentials (HTTP 401); check the token in $" +
                            (config.token_env.empty() ? std::string("<unset>") : config.token_env));
        }
        if (is_rate_limited(r)) {
            if (++rate_waits > config.max_retries) {
                throw NetworkError("still rate limited after " + std::to_string(config.max_retries) + " waits");
            }
            long long wait = 60;
            if (auto after = header_number(r, "retry-after")) {
                wait = *after;
            } else if (auto reset = header_number(r, "x-ratelimit-reset")) {
                wait = *reset - rt.now();
            }
            wait = std::clamp(wait, 1LL, 3600LL);
            if (rt.log) {
                rt.log("rate limited; sleeping " + std::to_string(wait) + "s");
            }
            rt.sleep(std::chrono::seconds(wait));
            continue;
        }
        if (r.status == 403) {
            throw AuthError("search endpoint refused access (HTTP 403); check the token in $" + config.token_env);
        }
        if (r.status != 0 && r.status < 500) {
            throw Error("search request '" + target + "' failed with HTTP " + std::to_string(r.status));
        }
        if (++failures > config.max_retries) {
            throw NetworkError("search request '" + target + "' failed after " + std::to_string(config.max_retries) +
                               " retries: " + (r.status ? "HTTP " + std::to_string(r.status) : r.error));
        }
        auto delay = config.backoff * (1LL << std::min(failures - 1, 16));
        if (rt.log) {
            rt.log("request failed (" + (r.status ? "HTTP " + std::to_string(r.status) : r.error) + "); retry " +
                   std::to_string(failures) + " in " + std::to_string(delay.count()) + "ms");
        }
        rt.sleep(delay);
    }
}

json snapshot_json(const ProjectSnapshot& p) {
    return {{"id", p.id}, {"last_update", format_timestamp(p.last_update)}, {"matched_keywords", p.matched_keywords}};
}

}  // namespace

WatchConfig WatchConfig::from_json_text(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(origin + ": config must be a JSON object");
    }
    WatchConfig c;
    std::vector<std::string> problems;
    for (const auto& [k, _] : doc.items()) {
        if (!kConfigKeys.count(k)) {
            problems.push_back("unknown key '" + k + "'");
        }
    }
    auto get_string = [&](const char* key, std::string& dst) {
        if (!doc.contains(key)) {
            return;
        }
        if (!doc[key].is_string()) {
            problems.push_back(std::string("'") + key + "' must be a string");
            return;
        }
        dst = doc[key].get<std::string>();
    };
    auto get_int = [&](const char* key, long long& dst, long long min) {
        if (!doc.contains(key)) {
            return false;
        }
        if (!doc[key].is_number_integer() || doc[key].get<long long>() < min) {
            problems.push_back(std::string("'") + key + "' must be an integer >= " + std::to_string(min));
            return false;
        }
        dst = doc[key].get<long long>();
        return true;
    };

    if (doc.contains("keywords")) {
        const auto& k = doc["keywords"];
        if (!k.is_array() || k.empty() ||
            !std::all_of(k.begin(), k.end(), [](const json& x) { return x.is_string() && !x.get<std::string>().empty(); })) {
            problems.push_back("'keywords' must be a non-empty array of non-empty strings");
        } else {
            c.keywords = k.get<std::vector<std::string>>();
        }
    }
    long long v = 0;
    if (get_int("interval_days", v, 1)) {
        c.interval = std::chrono::hours(24 * v);
    }
    if (get_int("interval_seconds", v, 1)) {
        c.interval = std::chrono::seconds(v);
    }
    get_string("endpoint", c.endpoint);
    get_string("token_env", c.token_env);
    get_string("state_path", c.state_path);
    get_string("notify", c.notify);
    get_string("stdout_format", c.stdout_format);
    if (get_int("per_page", v, 1)) {
        c.per_page = static_cast<int>(std::min(v, 100LL));
    }
    if (get_int("max_pages", v, 1)) {
        c.max_pages = static_cast<int>(v);
    }
    if (get_int("max_retries", v, 0)) {
        c.max_retries = static_cast<int>(v);
    }
    if (get_int("backoff_ms", v, 0)) {
        c.backoff = std::chrono::milliseconds(v);
    }
    if (!c.endpoint.starts_with("http://") && !c.endpoint.starts_with("https://")) {
        problems.push_back("'endpoint' must be an http(s) URL");
    }
    if (c.notify != "stdout" && !c.notify.starts_with("http://") && !c.notify.starts_with("https://")) {
        problems.push_back("'notify' must be \"stdout\" or an http(s) webhook URL");
    }
    if (c.stdout_format != "text" && c.stdout_format != "json") {
        problems.push_back("'stdout_format' must be \"text\" or \"json\"");
    }
    if (c.state_path.empty()) {
        problems.push_back("'state_path' must not be empty");
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid watch config", std::move(problems));
    }
    return c;
}

WatchConfig WatchConfig::load(const std::filesystem::path& path) {
    auto c = from_json_text(read_text(path, "watch config"), path.string());
    // a relative state path is taken relative to the config file
    std::filesystem::path sp(c.state_path);
    if (sp.is_relative()) {
        c.state_path = (path.parent_path() / sp).string();
    }
    return c;
}

std::string WatchConfig::to_json() const {
    json doc = {
        {"keywords", keywords},
        {"interval_seconds", interval.count()},
        {"endpoint", endpoint},
        {"token_env", token_env},
        {"state_path", state_path},
        {"notify", notify},
        {"stdout_format", stdout_format},
        {"per_page", per_page},
        {"max_pages", max_pages},
        {"max_retries", max_retries},
        {"backoff_ms", backoff.count()},
    };
    return doc.dump(2) + "\n";
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    sys_seconds tp{seconds(t)};
    auto day = floor<days>(tp);
    year_month_day ymd{day};
    hh_mm_ss hms{tp - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        if (pos + len > s.size()) {
            return false;
        }
        auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
        return ec == std::errc() && p == s.data() + pos + len;
    };
    int Y, M, D, h, m, sec;
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':' || !num(0, 4, Y) || !num(5, 2, M) || !num(8, 2, D) || !num(11, 2, h) || !num(14, 2, m) ||
        !num(17, 2, sec)) {
        return std::nullopt;
    }
    year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
    if (!ymd.ok() || h > 23 || m > 59 || sec > 60) {
        return std::nullopt;
    }
    std::size_t i = 19;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
    }
    long long offset = 0;
    if (i < s.size() && (s[i] == 'Z' || s[i] == 'z')) {
        ++i;
    } else if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        int oh = 0;
        int om = 0;
        if (!num(i + 1, 2, oh) || i + 3 >= s.size() || s[i + 3] != ':' || !num(i + 4, 2, om)) {
            return std::nullopt;
        }
        offset = (s[i] == '+' ? 1 : -1) * (oh * 3600LL + om * 60LL);
        i += 6;
    } else {
        return std::nullopt;
    }
    if (i != s.size()) {
        return std::nullopt;
    }
    auto secs = sys_days{ymd}.time_since_epoch() + hours(h) + minutes(m) + seconds(sec);
    return duration_cast<seconds>(secs).count() - offset;
}

std::string normalize_project_id(std::string_view host, std::string_view full_name) {
    std::string name(full_name);
    if (auto scheme = name.find("://"); scheme != std::string::npos) {
        name = name.substr(scheme + 3);
    }
    while (!name.empty() && name.back() == '/') {
        name.pop_back();
    }
    if (name.ends_with(".git")) {
        name.resize(name.size() - 4);
    }
    // full URL or "host/owner/name" already carries the host
    auto slashes = std::count(name.begin(), name.end(), '/');
    if (slashes >= 2) {
        return lower(name);
    }
    std::string h = lower(host);
    if (h.starts_with("api.")) {
        h = h.substr(4);
    }
    return h + "/" + lower(name);
}

std::unique_ptr<HttpTransport> make_http_transport(const std::string& endpoint, std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(endpoint, timeout);
}

std::unique_ptr<RecordedTransport> RecordedTransport::from_json_text(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    auto t = std::make_unique<RecordedTransport>();
    auto load_section = [&](const char* name, bool is_get) {
        if (!doc.contains(name)) {
            return;
        }
        for (const auto& [key, v] : doc[name].items()) {
            std::vector<HttpResponse> rs;
            if (v.is_array()) {
                for (const auto& x : v) {
                    rs.push_back(response_from_json(x, origin));
                }
            } else {
                rs.push_back(response_from_json(v, origin));
            }
            for (auto& r : rs) {
                is_get ? t->add_get(key, std::move(r)) : t->add_post(key, std::move(r));
            }
        }
    };
    try {
        load_section("get", true);
        load_section("post", false);
    } catch (const json::exception& e) {
        throw Error(origin + ": malformed recording: " + e.what());
    }
    return t;
}

std::unique_ptr<RecordedTransport> RecordedTransport::load(const std::filesystem::path& path) {
    return from_json_text(read_text(path, "recording"), path.string());
}

void RecordedTransport::add_get(const std::string& target, HttpResponse r) {
    gets_[target].push_back(std::move(r));
}

void RecordedTransport::add_post(const std::string& url, HttpResponse r) {
    posts_[url].push_back(std::move(r));
}

HttpResponse RecordedTransport::get(const std::string& target, const std::map<std::string, std::string>&) {
    requested_.push_back(target);
    auto it = gets_.find(target);
    if (it == gets_.end() || it->second.empty()) {
        return HttpResponse{404, "{\"message\":\"not recorded\"}", {}, ""};
    }
    std::size_t& n = served_["GET " + target];
    const HttpResponse& r = it->second[std::min(n, it->second.size() - 1)];
    ++n;
    return r;
}

HttpResponse RecordedTransport::post(const std::string& url, const std::string& body, const std::string&) {
    posted_.push_back(body);
    auto it = posts_.find(url);
    if (it == posts_.end() || it->second.empty()) {
        return HttpResponse{404, "", {}, ""};
    }
    std::size_t& n = served_["POST " + url];
    const HttpResponse& r = it->second[std::min(n, it->second.size() - 1)];
    ++n;
    return r;
}

Runtime system_runtime() {
    Runtime rt;
    rt.now = [] {
        return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
    rt.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    rt.getenv = [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v || !*v) {
            return std::nullopt;
        }
        return std::string(v);
    };
    return rt;
}

std::string search_target(const std::string& keyword, int page, int per_page) {
    httplib::Params params{
        {"q", keyword},
        {"sort", "updated"},
        {"order", "desc"},
        {"per_page", std::to_string(per_page)},
        {"page", std::to_string(page)},
    };
    return httplib::append_query_params("/search/repositories", params);
}

std::vector<ProjectSnapshot> poll(const WatchConfig& config, HttpTransport& transport, const Runtime& rt) {
    std::map<std::string, std::string> headers = {
        {"Accept", "application/vnd.github+json"},
        {"User-Agent", "solbug-watch"},
    };
    if (!config.token_env.empty() && rt.getenv) {
        if (auto token = rt.getenv(config.token_env)) {
            headers["Authorization"] = "Bearer " + *token;
        }
    }
    const std::string api_host = url_host(config.endpoint);

    std::map<std::string, ProjectSnapshot> merged;
    for (const auto& keyword : config.keywords) {
        for (int page = 1; page <= config.max_pages; ++page) {
            const std::string target = search_target(keyword, page, config.per_page);
            HttpResponse r = fetch(transport, target, headers, config, rt);
            json doc;
            try {
                doc = json::parse(r.body);
            } catch (const json::parse_error& e) {
                throw Error("search response for '" + target + "' is not JSON: " + e.what());
            }
            if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array()) {
                throw Error("search response for '" + target + "' has no 'items' array");
            }
            const auto& items = doc["items"];
            for (const auto& item : items) {
                if (!item.is_object()) {
                    continue;
                }
                std::string id;
                if (item.contains("html_url") && item["html_url"].is_string()) {
                    id = normalize_project_id(api_host, item["html_url"].get<std::string>());
                } else if (item.contains("full_name") && item["full_name"].is_string()) {
                    id = normalize_project_id(api_host, item["full_name"].get<std::string>());
                } else {
                    if (rt.log) {
                        rt.log("skipping search item without html_url/full_name");
                    }
                    continue;
                }
                std::optional<Timestamp> ts;
                for (const char* key : {"updated_at", "pushed_at"}) {
                    if (!ts && item.contains(key) && item[key].is_string()) {
                        ts = parse_timestamp(item[key].get<std::string>());
                    }
                }
                if (!ts) {
                    if (rt.log) {
                        rt.log("skipping '" + id + "': no parseable update time");
                    }
                    continue;
                }
                auto [it, fresh] = merged.try_emplace(id, ProjectSnapshot{id, *ts, {}});
                it->second.last_update = std::max(it->second.last_update, *ts);
                it->second.matched_keywords.insert(keyword);
            }
            long long total = doc.value("total_count", 0LL);
            if (static_cast<int>(items.size()) < config.per_page ||
                static_cast<long long>(page) * config.per_page >= total) {
                break;
            }
        }
    }
    std::vector<ProjectSnapshot> out;
    out.reserve(merged.size());
    for (auto& [_, p] : merged) {
        out.push_back(std::move(p));
    }
    return out;
}

ChangeSet diff(const std::vector<ProjectSnapshot>& previous, const std::vector<ProjectSnapshot>& current) {
    std::map<std::string, Timestamp> prev;
    for (const auto& p : previous) {
        prev[p.id] = std::max(prev.count(p.id) ? prev[p.id] : p.last_update, p.last_update);
    }
    std::set<std::string> seen;
    ChangeSet c;
    for (const auto& p : current) {
        if (!seen.insert(p.id).second) {
            continue;
        }
        auto it = prev.find(p.id);
        if (it == prev.end()) {
            c.added.push_back(p.id);
        } else if (p.last_update > it->second) {
            c.updated.push_back(p.id);
        }
    }
    for (const auto& [id, _] : prev) {
        if (!seen.count(id)) {
            c.removed.push_back(id);
        }
    }
    std::sort(c.added.begin(), c.added.end());
    std::sort(c.updated.begin(), c.updated.end());
    return c;
}

std::string state_to_json(const WatchState& s) {
    json projects = json::array();
    for (const auto& p : s.projects) {
        projects.push_back(snapshot_json(p));
    }
    json doc = {
        {"cursor", s.cursor ? json(format_timestamp(*s.cursor)) : json(nullptr)},
        {"projects", projects},
    };
    return doc.dump(2) + "\n";
}

WatchState state_from_json_text(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": corrupt state file: " + e.what());
    }
    WatchState s;
    std::vector<std::string> problems;
    if (!doc.is_object() || !doc.contains("projects") || !doc["projects"].is_array()) {
        throw Error(origin + ": state must be an object with a 'projects' array");
    }
    if (doc.contains("cursor") && !doc["cursor"].is_null()) {
        if (!doc["cursor"].is_string() || !(s.cursor = parse_timestamp(doc["cursor"].get<std::string>()))) {
            problems.push_back("bad 'cursor'");
        }
    }
    std::set<std::string> ids;
    for (const auto& p : doc["projects"]) {
        if (!p.is_object() || !p.contains("id") || !p["id"].is_string() || !p.contains("last_update") ||
            !p["last_update"].is_string()) {
            problems.push_back("malformed project entry");
            continue;
        }
        ProjectSnapshot snap;
        snap.id = p["id"].get<std::string>();
        auto ts = parse_timestamp(p["last_update"].get<std::string>());
        if (!ts) {
            problems.push_back("'" + snap.id + "': bad last_update");
            continue;
        }
        snap.last_update = *ts;
        if (p.contains("matched_keywords") && p["matched_keywords"].is_array()) {
            for (const auto& k : p["matched_keywords"]) {
                if (k.is_string()) {
                    snap.matched_keywords.insert(k.get<std::string>());
                }
            }
        }
        if (!ids.insert(snap.id).second) {
            problems.push_back("duplicate project '" + snap.id + "'");
            continue;
        }
        s.projects.push_back(std::move(snap));
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid state file", std::move(problems));
    }
    return s;
}

WatchState load_state(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return {};
    }
    return state_from_json_text(read_text(path, "state file"), path.string());
}

void save_state(const std::filesystem::path& path, const WatchState& s) {
    const std::string data = state_to_json(s);
    std::filesystem::path dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    std::string tmpl = (dir / (path.filename().string() + ".tmp.XXXXXX")).string();
    std::vector<char> name(tmpl.begin(), tmpl.end());
    name.push_back('\0');
    int fd = ::mkstemp(name.data());
    if (fd < 0) {
        throw Error("cannot create temporary state file in '" + dir.string() + "'");
    }
    auto fail = [&](const std::string& what) {
        ::close(fd);
        ::unlink(name.data());
        throw Error(what + " '" + std::string(name.data()) + "'");
    };
    std::size_t written = 0;
    while (written < data.size()) {
        ssize_t n = ::write(fd, data.data() + written, data.size() - written);
        if (n < 0) {
            fail("cannot write");
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fchmod(fd, 0644) != 0 || ::fsync(fd) != 0) {
        fail("cannot flush");
    }
    ::close(fd);
    if (std::rename(name.data(), path.c_str()) != 0) {
        ::unlink(name.data());
        throw Error("cannot replace state file '" + path.string() + "'");
    }
    int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
}

std::string change_payload(const ChangeSet& changes, Timestamp at) {
    json doc = {
        {"added", changes.added},
        {"updated", changes.updated},
        {"removed", changes.removed},
        {"at", format_timestamp(at)},
    };
    return doc.dump();
}

std::string change_summary(const ChangeSet& changes, Timestamp at) {
    auto list = [](const std::vector<std::string>& ids) {
        if (ids.empty()) {
            return std::string("-");
        }
        std::string out;
        for (const auto& id : ids) {
            out += (out.empty() ? "" : ", ") + id;
        }
        return out;
    };
    return format_timestamp(at) + " added: " + list(changes.added) + "; updated: " + list(changes.updated) +
           "; removed: " + list(changes.removed);
}

DeliveryResult notify(const ChangeSet& changes, const WatchConfig& config, Timestamp at, std::ostream& out,
                      HttpTransport* webhook) {
    if (config.notify == "stdout") {
        out << (config.stdout_format == "json" ? change_payload(changes, at) : change_summary(changes, at)) << "\n";
        out.flush();
        if (!out) {
            return {false, "writing to stdout failed"};
        }
        return {true, "written to stdout"};
    }
    if (!webhook) {
        return {false, "no transport for webhook " + config.notify};
    }
    HttpResponse r = webhook->post(config.notify, change_payload(changes, at), "application/json");
    if (r.status >= 200 && r.status < 300) {
        return {true, "webhook accepted (HTTP " + std::to_string(r.status) + ")"};
    }
    return {false, "webhook failed: " + (r.status ? "HTTP " + std::to_string(r.status) : r.error)};
}

CycleResult run_cycle(const WatchConfig& config, HttpTransport& search, HttpTransport* webhook, const Runtime& rt,
                      std::ostream& out) {
    WatchState prev = load_state(config.state_path);
    std::vector<ProjectSnapshot> current = poll(config, search, rt);
    CycleResult result;
    result.changes = diff(prev.projects, current);
    result.projects = current.size();
    const Timestamp at = rt.now();
    if (!result.changes.empty()) {
        DeliveryResult d = notify(result.changes, config, at, out, webhook);
        result.detail = d.detail;
        if (!d.ok) {
            return result;
        }
    } else {
        result.detail = "no changes";
    }
    save_state(config.state_path, WatchState{at, std::move(current)});
    result.delivered = true;
    return result;
}

}  // namespace solbug::collector
