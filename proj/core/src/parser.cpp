#include "solbug/parser.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "solbug/expr.hpp"

namespace solbug {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

bool is_opener(std::string_view s) {
    return s == "(" || s == "[" || s == "{";
}

bool is_closer(std::string_view s) {
    return s == ")" || s == "]" || s == "}";
}

char closer_for(std::string_view open) {
    return open == "(" ? ')' : open == "[" ? ']' : '}';
}

bool is_elementary_type(std::string_view w) {
    if (w == "address" || w == "bool" || w == "string" || w == "bytes" || w == "byte" || w == "int" ||
        w == "uint" || w == "var" || w == "fixed" || w == "ufixed") {
        return true;
    }
    return is_keyword(w) && (w.starts_with("uint") || w.starts_with("int") || w.starts_with("bytes"));
}

bool is_compound_op(std::string_view s) {
    return s == "+=" || s == "-=" || s == "*=" || s == "/=" || s == "%=" || s == "|=" || s == "&=" ||
           s == "^=" || s == "<<=" || s == ">>=" || s == ">>>=";
}

bool is_payload_empty(std::string_view args) {
    std::string s = expr::squash(args);
    return s.empty() || s == "\"\"" || s == "''";
}

enum class DeclContext { State, Local, Param };

class Parser {
public:
    explicit Parser(SourceModel& model) : m_(model) {
        for (std::size_t i = 0; i < m_.raw_tokens.size(); ++i) {
            if (!m_.raw_tokens[i].trivia()) {
                sig_.push_back(i);
            }
        }
        match_brackets();
        collect_struct_names();
    }

    void run() {
        check_unterminated();
        std::size_t k = 0;
        const std::size_t n = sig_.size();
        bool skipping = false;
        while (k < n) {
            const Token& t = tok(k);
            if (t.is("pragma")) {
                k = parse_pragma(k);
            } else if (t.is("import")) {
                k = std::min(n, stmt_end(k, n) + 1);
            } else if (t.is("contract") || t.is("library") || t.is("interface") ||
                       (t.is("abstract") && is(k + 1, "contract"))) {
                k = parse_contract(k);
            } else if (t.is("struct") || t.is("enum") || t.is("function") || t.is("event") ||
                       t.is("error") || t.is("using")) {
                k = skip_decl(k, n);
            } else if (t.is(";")) {
                ++k;
            } else {
                if (!skipping) {
                    diag(t.span.start, "unexpected '" + t.text + "' at file scope");
                }
                skipping = true;
                ++k;
                continue;
            }
            skipping = false;
        }
        std::sort(m_.contracts.begin(), m_.contracts.end(),
                  [](const ContractDecl& a, const ContractDecl& b) { return a.span.start < b.span.start; });
    }

private:
    SourceModel& m_;
    std::vector<std::size_t> sig_;
    std::vector<std::size_t> match_;   // opener -> closer (sig indices)
    std::vector<std::size_t> rmatch_;  // closer -> opener
    bool saw_pragma_ = false;

    // per-function state
    std::set<std::string> state_names_;
    std::set<std::string> locals_;
    std::vector<Stmt>* out_ = nullptr;

    const Token& tok(std::size_t k) const { return m_.raw_tokens[sig_[k]]; }

    bool is(std::size_t k, std::string_view s) const { return k < sig_.size() && tok(k).text == s; }

    void diag(std::size_t offset, const std::string& msg) {
        m_.diagnostics.push_back(m_.file_path + ":" + std::to_string(offset) + ": " + msg);
    }

    void match_brackets() {
        match_.assign(sig_.size(), npos);
        rmatch_.assign(sig_.size(), npos);
        std::vector<std::size_t> stack;
        for (std::size_t k = 0; k < sig_.size(); ++k) {
            const std::string& s = tok(k).text;
            if (is_opener(s)) {
                stack.push_back(k);
            } else if (is_closer(s)) {
                auto it = std::find_if(stack.rbegin(), stack.rend(), [&](std::size_t o) {
                    return closer_for(tok(o).text) == s[0];
                });
                if (it == stack.rend()) {
                    continue;
                }
                std::size_t open = *it;
                stack.erase(std::next(it).base(), stack.end());
                match_[open] = k;
                rmatch_[k] = open;
            }
        }
    }

    void collect_struct_names() {
        for (std::size_t k = 0; k + 1 < sig_.size(); ++k) {
            if (tok(k).is("struct") && tok(k + 1).kind == TokenKind::Identifier) {
                m_.struct_names.insert(tok(k + 1).text);
            }
        }
    }

    void check_unterminated() {
        if (m_.raw_tokens.empty()) {
            return;
        }
        const Token& last = m_.raw_tokens.back();
        if (last.kind == TokenKind::Comment && last.text.starts_with("/*") &&
            (last.text.size() < 4 || !last.text.ends_with("*/"))) {
            diag(last.span.start, "unterminated block comment");
        }
        for (const Token& t : m_.raw_tokens) {
            if (t.kind == TokenKind::String && (t.text.size() < 2 || t.text.back() != t.text.front())) {
                diag(t.span.start, "unterminated string literal");
            }
        }
    }

    // Index just past the balanced group opened at k (bounded by limit).
    std::size_t after(std::size_t k, std::size_t limit) const {
        if (k >= limit) {
            return limit;
        }
        if (is_opener(tok(k).text)) {
            std::size_t m = match_[k];
            return (m == npos || m >= limit) ? limit : m + 1;
        }
        return k + 1;
    }

    std::size_t closing(std::size_t k, std::size_t limit) const {
        std::size_t m = match_[k];
        return (m == npos || m >= limit) ? limit : m;
    }

    // Index of the terminating ';' (or an unopened closer, or limit).
    std::size_t stmt_end(std::size_t k, std::size_t limit) const {
        while (k < limit) {
            const std::string& s = tok(k).text;
            if (s == ";" || is_closer(s)) {
                return k;
            }
            k = after(k, limit);
        }
        return limit;
    }

    std::size_t skip_decl(std::size_t k, std::size_t limit) const {
        while (k < limit) {
            const std::string& s = tok(k).text;
            if (s == ";") {
                return k + 1;
            }
            if (s == "{") {
                return after(k, limit);
            }
            k = after(k, limit);
        }
        return limit;
    }

    std::size_t offset_of_index(std::size_t k) const {
        return k < sig_.size() ? tok(k).span.start : m_.source.size();
    }

    Span span_of(std::size_t a, std::size_t b) const {
        if (a >= b) {
            std::size_t at = offset_of_index(a);
            return Span{at, at};
        }
        return Span{tok(a).span.start, tok(b - 1).span.end};
    }

    std::string text_of(std::size_t a, std::size_t b) const {
        Span s = span_of(a, b);
        return m_.source.substr(s.start, s.size());
    }

    // Token texts with runs of trivia collapsed to one space.
    std::string compact(std::size_t a, std::size_t b) const {
        std::string out;
        for (std::size_t k = a; k < b; ++k) {
            if (k > a && tok(k - 1).span.end != tok(k).span.start) {
                out += ' ';
            }
            out += tok(k).text;
        }
        return out;
    }

    std::size_t parse_pragma(std::size_t k) {
        const std::size_t n = sig_.size();
        std::size_t end = stmt_end(k, n);
        if (is(k + 1, "solidity")) {
            std::size_t from = tok(k + 1).span.end;
            std::size_t to = end < n ? tok(end).span.start : m_.source.size();
            std::string text = m_.source.substr(from, to - from);
            std::vector<std::string> problems;
            PragmaConstraint c = PragmaConstraint::parse(text, &problems);
            for (auto& p : problems) {
                diag(tok(k).span.start, "pragma: " + p);
            }
            if (!saw_pragma_) {
                m_.pragma = c;
            } else {
                std::string raw = m_.pragma.raw_text + "; " + c.raw_text;
                m_.pragma = m_.pragma.intersect(c);
                m_.pragma.raw_text = raw;
                if (m_.pragma.unsatisfiable) {
                    diag(tok(k).span.start, "pragma directives admit no common compiler version");
                }
            }
            saw_pragma_ = true;
        }
        return std::min(n, end + 1);
    }

    std::size_t parse_contract(std::size_t k) {
        const std::size_t n = sig_.size();
        ContractDecl c;
        std::size_t start = k;
        if (tok(k).is("abstract")) {
            ++k;
        }
        c.kind = tok(k).is("library")     ? ContractKind::Library
                 : tok(k).is("interface") ? ContractKind::Interface
                                          : ContractKind::Contract;
        ++k;
        if (k < n && tok(k).kind == TokenKind::Identifier) {
            c.name = tok(k).text;
            ++k;
        } else {
            diag(offset_of_index(k), "contract declaration without a name");
        }
        std::size_t open = k;
        while (open < n && !tok(open).is("{") && !tok(open).is(";")) {
            open = after(open, n);
        }
        if (open >= n || !tok(open).is("{")) {
            diag(tok(start).span.start, "contract '" + c.name + "' has no body");
            return std::min(n, open + 1);
        }
        // inheritance list
        for (std::size_t j = k; j < open; ++j) {
            if (tok(j).is("is") || tok(j).is(",")) {
                if (j + 1 < open && tok(j + 1).kind == TokenKind::Identifier) {
                    c.bases.push_back(tok(j + 1).text);
                }
            } else if (is_opener(tok(j).text)) {
                j = after(j, open) - 1;
            }
        }
        std::size_t close = closing(open, n);
        if (close >= n) {
            diag(tok(open).span.start, "unterminated body of '" + c.name + "'");
        }
        c.span = Span{tok(start).span.start, close < n ? tok(close).span.end : m_.source.size()};
        parse_members(c, open + 1, close);
        m_.contracts.push_back(std::move(c));
        return std::min(n, close + 1);
    }

    void parse_members(ContractDecl& c, std::size_t k, std::size_t limit) {
        state_names_.clear();
        // own state vars must be known before bodies reference them, so pre-scan
        std::vector<std::pair<std::size_t, std::size_t>> functions;
        while (k < limit) {
            const Token& t = tok(k);
            if (t.is("function") || t.is("constructor") || t.is("fallback") || t.is("receive") ||
                t.is("modifier")) {
                std::size_t end = skip_decl(k, limit);
                if (!t.is("modifier")) {
                    functions.emplace_back(k, end);
                }
                k = end;
            } else if (t.is("event") || t.is("using") || t.is("error")) {
                k = std::min(limit, stmt_end(k, limit) + 1);
            } else if (t.is("struct") || t.is("enum")) {
                k = skip_decl(k, limit);
            } else if (t.is(";")) {
                ++k;
            } else if (is_closer(t.text)) {
                diag(t.span.start, "stray '" + t.text + "' in contract body");
                ++k;
            } else {
                std::size_t end = stmt_end(k, limit);
                if (end == k) {
                    ++k;
                    continue;
                }
                if (auto v = parse_var_decl(k, end, DeclContext::State)) {
                    bool dup = std::any_of(c.state_vars.begin(), c.state_vars.end(),
                                           [&](const VarDecl& o) { return o.name == v->name; });
                    if (dup) {
                        diag(v->span.start, "state variable '" + v->name + "' declared twice");
                    }
                    c.state_vars.push_back(std::move(*v));
                } else {
                    diag(t.span.start, "unrecognized contract member");
                }
                k = std::min(limit, end + 1);
            }
        }
        for (const VarDecl* v : visible_state_vars_of(c)) {
            state_names_.insert(v->name);
        }
        for (auto [from, to] : functions) {
            c.functions.push_back(parse_function(c, from, to));
        }
    }

    std::vector<const VarDecl*> visible_state_vars_of(const ContractDecl& c) const {
        std::vector<const VarDecl*> out;
        for (const auto& v : c.state_vars) {
            out.push_back(&v);
        }
        std::set<std::string> seen{c.name};
        std::vector<std::string> pending = c.bases;
        while (!pending.empty()) {
            std::string name = pending.back();
            pending.pop_back();
            if (!seen.insert(name).second) {
                continue;
            }
            for (const auto& other : m_.contracts) {
                if (other.name == name) {
                    for (const auto& v : other.state_vars) {
                        out.push_back(&v);
                    }
                    pending.insert(pending.end(), other.bases.begin(), other.bases.end());
                }
            }
        }
        return out;
    }

    // Returns the index one past the type, or npos if [a, b) does not start with one.
    std::size_t parse_type(std::size_t a, std::size_t b) const {
        if (a >= b) {
            return npos;
        }
        const Token& t = tok(a);
        std::size_t j = a + 1;
        if (t.is("mapping")) {
            if (!is(j, "(") || j >= b) {
                return npos;
            }
            j = after(j, b);
        } else if (t.is("function")) {
            if (is(j, "(") && j < b) {
                j = after(j, b);
            }
            while (j < b && (tok(j).is("internal") || tok(j).is("external") || tok(j).is("pure") ||
                             tok(j).is("view") || tok(j).is("payable") || tok(j).is("constant"))) {
                ++j;
            }
            if (j < b && tok(j).is("returns")) {
                ++j;
                if (j < b && tok(j).is("(")) {
                    j = after(j, b);
                }
            }
        } else if (t.kind == TokenKind::Identifier || is_elementary_type(t.text)) {
            if (t.is("address") && j < b && tok(j).is("payable")) {
                ++j;
            }
            while (j + 1 < b && tok(j).is(".") && tok(j + 1).kind == TokenKind::Identifier) {
                j += 2;
            }
        } else {
            return npos;
        }
        while (j < b && tok(j).is("[")) {
            j = after(j, b);
        }
        return j;
    }

    std::optional<VarDecl> parse_var_decl(std::size_t a, std::size_t b, DeclContext ctx) const {
        std::size_t type_end = parse_type(a, b);
        if (type_end == npos) {
            return std::nullopt;
        }
        VarDecl v;
        v.type_text = compact(a, type_end);
        v.type_class = classify_type(v.type_text, m_.struct_names);
        std::size_t k = type_end;
        while (k < b) {
            const std::string& w = tok(k).text;
            if (ctx == DeclContext::State &&
                (w == "public" || w == "private" || w == "internal" || w == "external" || w == "constant" ||
                 w == "immutable")) {
                ++k;
            } else if (w == "override") {
                ++k;
                if (k < b && tok(k).is("(")) {
                    k = after(k, b);
                }
            } else if (ctx != DeclContext::State && (w == "storage" || w == "memory" || w == "calldata")) {
                v.storage_location = w == "storage"  ? StorageLocation::Storage
                                     : w == "memory" ? StorageLocation::Memory
                                                     : StorageLocation::Calldata;
                ++k;
            } else if (ctx == DeclContext::Param && (w == "indexed" || w == "payable")) {
                ++k;
            } else {
                break;
            }
        }
        if (k < b && tok(k).kind == TokenKind::Identifier) {
            v.name = tok(k).text;
            ++k;
        } else if (ctx != DeclContext::Param) {
            return std::nullopt;
        }
        if (k < b) {
            if (tok(k).is("=") && ctx != DeclContext::Param) {
                v.has_initializer = true;
                v.initializer = text_of(k + 1, b);
            } else if (ctx != DeclContext::Param) {
                return std::nullopt;
            }
        }
        v.span = span_of(a, b);
        return v;
    }

    FunctionDecl parse_function(const ContractDecl& c, std::size_t k, std::size_t limit) {
        FunctionDecl f;
        const std::size_t start = k;
        const std::string head = tok(k).text;
        ++k;
        if (head == "function") {
            if (k < limit && (tok(k).kind == TokenKind::Identifier || tok(k).is("fallback") ||
                              tok(k).is("receive"))) {
                f.name = tok(k).text;
                ++k;
            } else {
                f.is_fallback = true;
            }
            f.is_constructor = !f.name.empty() && f.name == c.name;
        } else {
            f.name = head;
            f.is_fallback = head == "fallback" || head == "receive";
            f.is_constructor = head == "constructor";
        }

        if (k < limit && tok(k).is("(")) {
            std::size_t close = closing(k, limit);
            std::size_t p = k + 1;
            while (p < close) {
                std::size_t q = p;
                while (q < close && !tok(q).is(",")) {
                    q = after(q, close);
                }
                if (q > p) {
                    if (auto v = parse_var_decl(p, q, DeclContext::Param)) {
                        f.params.push_back(std::move(*v));
                    } else {
                        diag(tok(p).span.start, "unrecognized parameter");
                    }
                }
                p = q + 1;
            }
            k = after(k, limit);
        }

        while (k < limit && !tok(k).is("{") && !tok(k).is(";")) {
            const Token& t = tok(k);
            if (t.is("public")) {
                f.visibility = Visibility::Public;
            } else if (t.is("external")) {
                f.visibility = Visibility::External;
            } else if (t.is("internal")) {
                f.visibility = Visibility::Internal;
            } else if (t.is("private")) {
                f.visibility = Visibility::Private;
            } else if (t.is("payable")) {
                f.payable = true;
            } else if (t.is("returns") || t.is("override")) {
                if (is(k + 1, "(")) {
                    k = after(k + 1, limit);
                    continue;
                }
            } else if (t.kind == TokenKind::Identifier) {
                f.modifiers.push_back(t.text);
                if (is(k + 1, "(")) {
                    k = after(k + 1, limit);
                    continue;
                }
            } else if (is_opener(t.text)) {
                k = after(k, limit);
                continue;
            }
            ++k;
        }

        if (k < limit && tok(k).is("{")) {
            std::size_t close = closing(k, limit);
            std::size_t body_end = close < sig_.size() ? tok(close).span.start : m_.source.size();
            if (close >= limit) {
                body_end = offset_of_index(limit);
                diag(tok(k).span.start, "unterminated body of function '" + f.name + "'");
            }
            f.body_span = Span{tok(k).span.end, body_end};
            f.span = Span{tok(start).span.start, close < limit ? tok(close).span.end : body_end};
            parse_body(f, k + 1, close);
        } else {
            f.span = Span{tok(start).span.start, k < limit ? tok(k).span.end : offset_of_index(limit)};
        }
        return f;
    }

    void parse_body(FunctionDecl& f, std::size_t from, std::size_t to) {
        locals_.clear();
        for (const auto& p : f.params) {
            if (!p.name.empty()) {
                locals_.insert(p.name);
            }
        }
        out_ = &f.body;
        std::vector<std::string> guards;
        parse_block(from, to, guards);
        out_ = nullptr;

        // partition the body bytes among the statements
        const Span body = *f.body_span;
        if (f.body.empty()) {
            bool blank = std::all_of(m_.source.begin() + static_cast<std::ptrdiff_t>(body.start),
                                     m_.source.begin() + static_cast<std::ptrdiff_t>(body.end),
                                     [](char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; });
            if (body.empty() || blank) {
                if (!body.empty()) {
                    Stmt s;
                    s.span = body;
                    s.code = Span{body.end, body.end};
                    f.body.push_back(std::move(s));
                }
                return;
            }
            Stmt s;
            s.span = body;
            s.code = body;
            s.text = std::string(m_.text(body));
            f.body.push_back(std::move(s));
            return;
        }
        std::size_t prev = body.start;
        for (auto& s : f.body) {
            s.span = Span{prev, s.code.end};
            prev = s.code.end;
        }
        f.body.back().span.end = body.end;
    }

    void parse_block(std::size_t k, std::size_t end, std::vector<std::string> guards) {
        while (k < end) {
            std::size_t next = parse_statement(k, end, guards);
            k = next > k ? next : k + 1;
        }
    }

    Stmt make_stmt(StmtKind kind, std::size_t a, std::size_t b, const std::vector<std::string>& guards) {
        Stmt s;
        s.kind = kind;
        s.code = span_of(a, b);
        s.text = m_.source.substr(s.code.start, s.code.size());
        s.guard_exprs = guards;
        return s;
    }

    void push(Stmt s) { out_->push_back(std::move(s)); }

    std::size_t parse_statement(std::size_t k, std::size_t end, std::vector<std::string>& guards) {
        const Token& t = tok(k);

        if (t.is("{")) {
            parse_block(k + 1, closing(k, end), guards);
            return after(k, end);
        }
        if (t.is("unchecked") && is(k + 1, "{")) {
            parse_block(k + 2, closing(k + 1, end), guards);
            return after(k + 1, end);
        }
        if (is_closer(t.text) || t.is("else")) {
            return k + 1;
        }

        if (t.is("if") && is(k + 1, "(") && k + 1 < end) {
            std::size_t close = closing(k + 1, end);
            Stmt s = make_stmt(StmtKind::IfGuard, k, std::min(close + 1, end), guards);
            s.condition = text_of(k + 2, close);
            s.call = find_call(k + 2, close);
            std::string cond = s.condition;
            push(std::move(s));

            std::size_t j = after(k + 1, end);
            std::vector<std::string> then_guards = guards;
            then_guards.push_back(cond);
            if (j < end) {
                j = parse_statement(j, end, then_guards);
            }
            if (j < end && tok(j).is("else")) {
                std::vector<std::string> else_guards = guards;
                else_guards.push_back("!(" + cond + ")");
                if (j + 1 < end) {
                    j = parse_statement(j + 1, end, else_guards);
                } else {
                    j = end;
                }
            }
            return j;
        }

        if ((t.is("for") || t.is("while")) && is(k + 1, "(") && k + 1 < end) {
            std::size_t close = closing(k + 1, end);
            std::size_t header_end = std::min(close + 1, end);
            if (is(header_end, ";") && header_end < end) {
                ++header_end;
            }
            Stmt s = make_stmt(StmtKind::Opaque, k, header_end, guards);
            s.call = find_call(k + 2, close);
            push(std::move(s));
            if (header_end > close + 1) {
                return header_end;
            }
            std::vector<std::string> inner = guards;
            return header_end < end ? parse_statement(header_end, end, inner) : end;
        }

        if (t.is("do")) {
            push(make_stmt(StmtKind::Opaque, k, k + 1, guards));
            std::vector<std::string> inner = guards;
            std::size_t j = k + 1 < end ? parse_statement(k + 1, end, inner) : end;
            if (j < end && tok(j).is("while")) {
                std::size_t e = stmt_end(j, end);
                std::size_t stop = (e < end && tok(e).is(";")) ? e + 1 : e;
                push(make_stmt(StmtKind::Opaque, j, stop, guards));
                return stop;
            }
            return j;
        }

        if (t.is("assembly")) {
            std::size_t j = k + 1;
            if (j < end && tok(j).kind == TokenKind::String) {
                ++j;
            }
            std::size_t stop = (j < end && tok(j).is("{")) ? after(j, end) : stmt_end(j, end);
            push(make_stmt(StmtKind::Opaque, k, stop, guards));
            return stop;
        }

        if (t.is("try") || t.is("catch")) {
            std::size_t j = k + 1;
            while (j < end && !tok(j).is("{")) {
                j = after(j, end);
            }
            Stmt s = make_stmt(StmtKind::Opaque, k, j, guards);
            s.call = find_call(k + 1, j);
            if (s.call) {
                s.kind = StmtKind::ExternalCall;
            }
            push(std::move(s));
            if (j < end) {
                parse_block(j + 1, closing(j, end), guards);
                return after(j, end);
            }
            return end;
        }

        std::size_t e = stmt_end(k, end);
        std::size_t stop = (e < end && tok(e).is(";")) ? e + 1 : e;
        if (stop == k) {
            return k + 1;
        }
        Stmt s = classify_simple(k, e, guards);
        s.code = span_of(k, stop);
        s.text = m_.source.substr(s.code.start, s.code.size());
        bool adds_guard = !s.condition.empty();
        std::string cond = s.condition;
        push(std::move(s));
        if (adds_guard) {
            guards.push_back(cond);
        }
        return stop;
    }

    Stmt classify_simple(std::size_t a, std::size_t e, const std::vector<std::string>& guards) {
        Stmt s = make_stmt(StmtKind::Opaque, a, e, guards);
        s.call = find_call(a, e);
        const Token& first = tok(a);

        if ((first.is("require") || first.is("assert")) && is(a + 1, "(") && a + 1 < e) {
            std::size_t close = closing(a + 1, e);
            auto args = expr::split_top_level(text_of(a + 2, close), ",");
            s.condition = std::string(expr::strip_parens(args.front()));
            s.kind = StmtKind::RequireOrAssert;
        } else if (first.is("return")) {
            s.kind = StmtKind::Return;
        } else if (first.is("delete")) {
            AssignmentDetail d;
            d.lhs = compact(a + 1, e);
            d.op = "delete";
            d.lhs_is_state_var = lhs_is_state(d.lhs);
            s.assignment = std::move(d);
            s.kind = StmtKind::Assignment;
        } else if (first.is("emit") || first.is("throw") || first.is("revert") || first.is("break") ||
                   first.is("continue") || first.is("_")) {
            s.kind = StmtKind::Opaque;
        } else if (auto v = parse_var_decl(a, e, DeclContext::Local)) {
            locals_.insert(v->name);
            s.local = std::move(*v);
            s.kind = StmtKind::LocalVarDecl;
        } else {
            classify_assignment(s, a, e);
        }

        if (s.call && s.kind != StmtKind::IfGuard) {
            s.kind = StmtKind::ExternalCall;
        }
        return s;
    }

    void classify_assignment(Stmt& s, std::size_t a, std::size_t e) {
        for (std::size_t k = a; k < e; k = after(k, e)) {
            const std::string& w = tok(k).text;
            if (w == "=" || is_compound_op(w)) {
                AssignmentDetail d;
                d.lhs = compact(a, k);
                d.rhs = compact(k + 1, e);
                d.op = w;
                d.lhs_is_state_var = lhs_is_state(d.lhs);
                s.kind = w == "=" ? StmtKind::Assignment : StmtKind::CompoundAssignment;
                s.assignment = std::move(d);
                return;
            }
        }
        // x++ / ++x / x-- / --x
        if (e > a + 1 && (tok(e - 1).is("++") || tok(e - 1).is("--"))) {
            s.assignment = AssignmentDetail{compact(a, e - 1), "1", tok(e - 1).text, false};
        } else if (e > a + 1 && (tok(a).is("++") || tok(a).is("--"))) {
            s.assignment = AssignmentDetail{compact(a + 1, e), "1", tok(a).text, false};
        }
        if (s.assignment) {
            s.assignment->lhs_is_state_var = lhs_is_state(s.assignment->lhs);
            s.kind = StmtKind::CompoundAssignment;
        }
    }

    bool lhs_is_state(const std::string& lhs) const {
        std::string inner = expr::strip_parens(lhs);
        auto parts = expr::split_top_level(inner, ",");
        if (parts.size() > 1) {
            return std::any_of(parts.begin(), parts.end(), [&](const std::string& p) { return lhs_is_state(p); });
        }
        std::string root = expr::root_identifier(inner);
        return !root.empty() && state_names_.count(root) && !locals_.count(root);
    }

    std::optional<ExternalCall> find_call(std::size_t a, std::size_t e) const {
        for (std::size_t k = a; k + 1 < e; ++k) {
            if (!tok(k).is(".") || !tok(k + 1).is("call")) {
                continue;
            }
            ExternalCall call;
            std::size_t j = k + 2;
            if (j < e && tok(j).is("{")) {
                call.style = CallStyle::Modern;
                std::size_t close = closing(j, e);
                for (std::size_t q = j + 1; q + 1 < close; ++q) {
                    if (tok(q + 1).is(":") && (tok(q).is("value") || tok(q).is("gas"))) {
                        std::size_t v = q + 2;
                        std::size_t w = v;
                        while (w < close && !tok(w).is(",")) {
                            w = after(w, close);
                        }
                        if (tok(q).is("value")) {
                            call.carries_value = true;
                            call.value_expr = compact(v, w);
                        } else {
                            call.gas_specified = true;
                        }
                    }
                }
                j = after(j, e);
            }
            while (j + 2 < e && tok(j).is(".") && (tok(j + 1).is("value") || tok(j + 1).is("gas")) &&
                   tok(j + 2).is("(")) {
                call.style = CallStyle::Legacy;
                if (tok(j + 1).is("value")) {
                    call.carries_value = true;
                    call.value_expr = compact(j + 3, closing(j + 2, e));
                } else {
                    call.gas_specified = true;
                }
                j = after(j + 2, e);
            }
            if (j >= e || !tok(j).is("(")) {
                continue;
            }
            std::size_t args_close = closing(j, e);
            call.payload_empty = is_payload_empty(text_of(j + 1, args_close));
            std::size_t begin = callee_start(k, a);
            call.callee = compact(begin, k);
            call.span = Span{tok(begin).span.start,
                             args_close < e ? tok(args_close).span.end : offset_of_index(e)};
            return call;
        }
        return std::nullopt;
    }

    // Walks back from the '.' at `dot` over a postfix chain such as
    // `payable(msg.sender)` or `users[i].wallet`.
    std::size_t callee_start(std::size_t dot, std::size_t floor) const {
        enum class State { NeedOperand, AfterGroup, AfterIdent } state = State::NeedOperand;
        std::size_t start = dot;
        std::size_t m = dot;
        while (m > floor) {
            const Token& t = tok(m - 1);
            bool ident = t.kind == TokenKind::Identifier || t.is("this") || t.is("address") ||
                         t.is("payable") || t.is("super");
            if (is_closer(t.text) && state != State::AfterIdent) {
                std::size_t open = rmatch_[m - 1];
                if (open == npos || open < floor) {
                    break;
                }
                start = open;
                m = open;
                state = State::AfterGroup;
            } else if (ident && state != State::AfterIdent) {
                start = m - 1;
                --m;
                state = State::AfterIdent;
            } else if (t.is(".") && state != State::NeedOperand) {
                --m;
                state = State::NeedOperand;
            } else {
                break;
            }
        }
        return start;
    }
};

}  // namespace

std::string_view to_string(TypeClass c) {
    switch (c) {
    case TypeClass::SignedInt:
        return "signed-int";
    case TypeClass::UnsignedInt:
        return "unsigned-int";
    case TypeClass::Address:
        return "address";
    case TypeClass::Mapping:
        return "mapping";
    case TypeClass::Array:
        return "array";
    case TypeClass::UserComposite:
        return "user-composite";
    case TypeClass::Other:
        return "other";
    }
    return "other";
}

std::string_view to_string(StorageLocation l) {
    switch (l) {
    case StorageLocation::Default:
        return "default";
    case StorageLocation::Storage:
        return "storage";
    case StorageLocation::Memory:
        return "memory";
    case StorageLocation::Calldata:
        return "calldata";
    }
    return "default";
}

std::string_view to_string(Visibility v) {
    switch (v) {
    case Visibility::Default:
        return "default";
    case Visibility::Public:
        return "public";
    case Visibility::External:
        return "external";
    case Visibility::Internal:
        return "internal";
    case Visibility::Private:
        return "private";
    }
    return "default";
}

std::string_view to_string(ContractKind k) {
    switch (k) {
    case ContractKind::Contract:
        return "contract";
    case ContractKind::Library:
        return "library";
    case ContractKind::Interface:
        return "interface";
    }
    return "contract";
}

std::string_view to_string(StmtKind k) {
    switch (k) {
    case StmtKind::LocalVarDecl:
        return "local-var-decl";
    case StmtKind::Assignment:
        return "assignment";
    case StmtKind::CompoundAssignment:
        return "compound-assignment";
    case StmtKind::RequireOrAssert:
        return "require-or-assert";
    case StmtKind::IfGuard:
        return "if-guard";
    case StmtKind::ExternalCall:
        return "external-call";
    case StmtKind::Return:
        return "return";
    case StmtKind::Opaque:
        return "opaque";
    }
    return "opaque";
}

TypeClass classify_type(std::string_view type_text, const std::set<std::string>& struct_names) {
    std::string t = expr::squash(type_text);
    if (t.starts_with("mapping")) {
        return TypeClass::Mapping;
    }
    if (!t.empty() && t.back() == ']') {
        return TypeClass::Array;
    }
    // dynamic byte arrays are reference types like T[]
    if (t == "bytes" || t == "string") {
        return TypeClass::Array;
    }
    auto sized = [&](std::string_view prefix) {
        if (!t.starts_with(prefix)) {
            return false;
        }
        std::string_view rest = std::string_view(t).substr(prefix.size());
        return std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (sized("uint")) {
        return TypeClass::UnsignedInt;
    }
    if (sized("int")) {
        return TypeClass::SignedInt;
    }
    if (t == "address" || t == "addresspayable") {
        return TypeClass::Address;
    }
    std::string_view last = t;
    if (auto dot = last.rfind('.'); dot != std::string_view::npos) {
        last = last.substr(dot + 1);
    }
    if (struct_names.count(std::string(last))) {
        return TypeClass::UserComposite;
    }
    return TypeClass::Other;
}

const ContractDecl* SourceModel::find_contract(std::string_view name) const {
    for (const auto& c : contracts) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

std::vector<const VarDecl*> SourceModel::visible_state_vars(const ContractDecl& c) const {
    std::vector<const VarDecl*> out;
    std::set<std::string> seen;
    std::vector<const ContractDecl*> pending{&c};
    while (!pending.empty()) {
        const ContractDecl* cur = pending.back();
        pending.pop_back();
        if (!seen.insert(cur->name).second) {
            continue;
        }
        for (const auto& v : cur->state_vars) {
            out.push_back(&v);
        }
        for (const auto& base : cur->bases) {
            if (const ContractDecl* b = find_contract(base)) {
                pending.push_back(b);
            }
        }
    }
    return out;
}

SourceModel parse(std::string source, std::string file_path) {
    SourceModel model;
    model.file_path = std::move(file_path);
    model.source = std::move(source);
    model.raw_tokens = lex(model.source);
    Parser(model).run();
    return model;
}

SourceModel parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

}  // namespace solbug
