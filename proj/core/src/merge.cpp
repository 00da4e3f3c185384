#include "solbug/merge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <tuple>

namespace solbug {

namespace {

std::set<std::string> split_sources(const std::string& joined) {
    std::set<std::string> out;
    std::size_t start = 0;
    while (start <= joined.size()) {
        std::size_t sep = joined.find("; ", start);
        std::string piece = joined.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
        if (!piece.empty()) {
            out.insert(piece);
        }
        if (sep == std::string::npos) {
            break;
        }
        start = sep + 2;
    }
    return out;
}

std::string join_sources(const std::set<std::string>& sources) {
    std::string out;
    for (const auto& s : sources) {
        if (!out.empty()) {
            out += "; ";
        }
        out += s;
    }
    return out;
}

BugRecord normalized(BugRecord r) {
    r.behavior = normalize_key(r.behavior);
    std::set<std::string> cons;
    for (const auto& c : r.consequences) {
        std::string k = normalize_key(c);
        if (!k.empty()) {
            cons.insert(std::move(k));
        }
    }
    r.consequences = std::move(cons);
    r.aliases.insert(r.name);
    return r;
}

// Pairwise rules 2 and 3 applied to two records sharing a behavior key.
BugRecord combine(const BugRecord& a, const BugRecord& b) {
    BugRecord out;
    out.behavior = a.behavior;
    out.aliases = a.aliases;
    out.aliases.insert(b.aliases.begin(), b.aliases.end());
    std::set<std::string> sources = split_sources(a.source);
    sources.merge(split_sources(b.source));
    out.source = join_sources(sources);
    out.name = std::min(a.name, b.name);
    if (a.consequences == b.consequences) {
        out.consequences = a.consequences;
        out.renamed = a.renamed || b.renamed;
    } else {
        out.consequences = a.consequences;
        out.consequences.insert(b.consequences.begin(), b.consequences.end());
        out.renamed = true;
    }
    return out;
}

}  // namespace

std::string normalize_key(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::vector<BugRecord> merge_records(std::vector<BugRecord> records) {
    std::map<std::string, std::vector<BugRecord>> groups;
    for (auto& r : records) {
        BugRecord n = normalized(std::move(r));
        groups[n.behavior].push_back(std::move(n));
    }

    std::vector<BugRecord> out;
    out.reserve(groups.size());
    for (auto& [key, group] : groups) {
        // fold in a canonical order so the outcome does not depend on input order
        std::sort(group.begin(), group.end(), [](const BugRecord& a, const BugRecord& b) {
            return std::tie(a.name, a.consequences, a.source) < std::tie(b.name, b.consequences, b.source);
        });
        BugRecord acc = group.front();
        bool mixed = false;
        for (std::size_t i = 1; i < group.size(); ++i) {
            mixed = mixed || group[i].consequences != acc.consequences;
            acc = combine(acc, group[i]);
        }
        // rule 2 marks the merged record no matter where the differing pair sat
        acc.renamed = acc.renamed || mixed;
        out.push_back(std::move(acc));
    }
    return out;
}

}  // namespace solbug
