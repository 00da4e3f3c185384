#include "solbug/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <tuple>

#include "solbug/error.hpp"
#include "solbug/expr.hpp"

namespace solbug {

namespace {

constexpr std::string_view kUpTo0426 = "<=0.4.26";

// Names in scope inside one function: parameters, locals and visible state
// variables, innermost first.
class Scope {
public:
    Scope(const SourceModel& model, const ContractDecl& contract, const FunctionDecl& fn) {
        for (const VarDecl* v : model.visible_state_vars(contract)) {
            vars_[v->name] = v;
            state_.insert(v->name);
        }
        for (const auto& s : fn.body) {
            if (s.local) {
                vars_[s.local->name] = &*s.local;
                state_.erase(s.local->name);
            }
        }
        for (const auto& p : fn.params) {
            if (!p.name.empty()) {
                vars_[p.name] = &p;
                state_.erase(p.name);
            }
        }
    }

    const VarDecl* find(const std::string& name) const {
        auto it = vars_.find(name);
        return it == vars_.end() ? nullptr : it->second;
    }

    bool is_state(const std::string& name) const { return state_.count(name) > 0; }

private:
    std::map<std::string, const VarDecl*> vars_;
    std::set<std::string> state_;
};

Finding make_finding(std::string_view bug_id, const SourceModel& model, const ContractDecl* c,
                     const FunctionDecl* f, Span span, std::string message) {
    Finding out;
    out.bug_id = std::string(bug_id);
    out.file = model.file_path;
    out.contract = c ? c->name : "";
    if (!f) {
        out.function = std::string(kTopLevel);
    } else if (!f->name.empty()) {
        out.function = f->name;
    } else {
        out.function = f->is_constructor ? "constructor" : "fallback";
    }
    out.span = span;
    out.message = std::move(message);
    return out;
}

// Significant tokens whose start lies inside `span`.
std::vector<const Token*> tokens_in(const SourceModel& model, Span span) {
    std::vector<const Token*> out;
    auto it = std::lower_bound(model.raw_tokens.begin(), model.raw_tokens.end(), span.start,
                               [](const Token& t, std::size_t off) { return t.span.start < off; });
    for (; it != model.raw_tokens.end() && it->span.start < span.end; ++it) {
        if (!it->trivia()) {
            out.push_back(&*it);
        }
    }
    return out;
}

// Index of the token closing the bracket opened at `open`, or toks.size().
std::size_t matching(const std::vector<const Token*>& toks, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
        const std::string& s = toks[i]->text;
        if (s == "(" || s == "[" || s == "{") {
            ++depth;
        } else if (s == ")" || s == "]" || s == "}") {
            if (--depth == 0) {
                return i;
            }
        }
    }
    return toks.size();
}

// Conditions of require/assert/if statements in `fn` whose code starts
// before `limit`.
std::vector<std::string> preceding_conditions(const FunctionDecl& fn, std::size_t limit) {
    std::vector<std::string> out;
    for (const auto& s : fn.body) {
        if (s.code.start < limit && !s.condition.empty()) {
            out.push_back(s.condition);
        }
    }
    return out;
}

std::vector<std::string> all_conditions(const FunctionDecl& fn) {
    return preceding_conditions(fn, static_cast<std::size_t>(-1));
}

bool is_unsigned_type(std::string_view w) {
    return w == "uint" || (w.starts_with("uint") && w.size() > 4 && std::isdigit(static_cast<unsigned char>(w[4])));
}

bool is_signed_type(std::string_view w) {
    return w == "int" || (w.starts_with("int") && w.size() > 3 && std::isdigit(static_cast<unsigned char>(w[3])));
}

bool has_param_class(const FunctionDecl& fn, TypeClass cls) {
    return std::any_of(fn.params.begin(), fn.params.end(), [&](const VarDecl& p) { return p.type_class == cls; });
}

// "a[b][c].d" -> {"b", "c"}: the top-level index expressions directly
// following the root identifier, squashed.
std::vector<std::string> index_chain(std::string_view squashed) {
    std::vector<std::string> out;
    std::size_t i = expr::root_identifier(squashed).size();
    while (i < squashed.size() && squashed[i] == '[') {
        int depth = 0;
        std::size_t j = i;
        for (; j < squashed.size(); ++j) {
            if (squashed[j] == '[') {
                ++depth;
            } else if (squashed[j] == ']' && --depth == 0) {
                break;
            }
        }
        if (j >= squashed.size()) {
            break;
        }
        out.emplace_back(squashed.substr(i + 1, j - i - 1));
        i = j + 1;
    }
    return out;
}

bool compares_with_zero(const std::string& condition, const std::string& operand,
                        std::initializer_list<std::string_view> ops) {
    for (auto c : expr::comparisons(condition)) {
        for (const auto& cmp : {c, c.flipped()}) {
            if (cmp.lhs == operand && expr::is_zero_literal(cmp.rhs) &&
                std::find(ops.begin(), ops.end(), cmp.op) != ops.end()) {
                return true;
            }
        }
    }
    return false;
}

bool compares_with_zero_address(const std::string& condition, const std::string& operand) {
    for (auto c : expr::comparisons(condition)) {
        for (const auto& cmp : {c, c.flipped()}) {
            if (cmp.lhs == operand && expr::is_zero_address(cmp.rhs) && (cmp.op == "==" || cmp.op == "!=")) {
                return true;
            }
        }
    }
    return false;
}

template <typename Fn>
void for_each_function(const SourceModel& model, Fn&& fn) {
    for (const auto& c : model.contracts) {
        for (const auto& f : c.functions) {
            if (f.body_span) {
                fn(c, f);
            }
        }
    }
}

}  // namespace

bool finding_less(const Finding& a, const Finding& b) {
    return std::tie(a.file, a.span.start, a.span.end, a.bug_id, a.message) <
           std::tie(b.file, b.span.start, b.span.end, b.bug_id, b.message);
}

void sort_findings(std::vector<Finding>& findings) {
    std::stable_sort(findings.begin(), findings.end(), finding_less);
}

// A-a-IS: `uintN(x)` where x is a signed variable (or an `intN(...)`
// conversion) with no earlier zero comparison of x in the function.
std::vector<Finding> detect_integer_sign(const SourceModel& model, const DetectOptions& options) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        Scope scope(model, c, f);
        auto toks = tokens_in(model, *f.body_span);
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            const std::string& w = toks[i]->text;
            bool to_unsigned = is_unsigned_type(w);
            bool to_signed = options.include_unsigned_to_signed && is_signed_type(w);
            if ((!to_unsigned && !to_signed) || toks[i + 1]->text != "(") {
                continue;
            }
            if (i > 0 && (toks[i - 1]->text == "." || toks[i - 1]->text == "new")) {
                continue;
            }
            std::size_t close = matching(toks, i + 1);
            if (close >= toks.size()) {
                continue;
            }
            Span arg{toks[i + 1]->span.end, toks[close]->span.start};
            std::string operand = expr::squash(model.text(arg));
            Span cast{toks[i]->span.start, toks[close]->span.end};

            const TypeClass wanted = to_unsigned ? TypeClass::SignedInt : TypeClass::UnsignedInt;
            bool matches = false;
            if (const VarDecl* v = scope.find(operand)) {
                matches = v->type_class == wanted;
            } else if (to_unsigned && i + 2 < close && is_signed_type(toks[i + 2]->text) &&
                       toks[i + 3]->text == "(" && matching(toks, i + 3) + 1 == close) {
                matches = true;  // uint(int(...))
            }
            if (!matches) {
                continue;
            }
            bool checked = false;
            for (const auto& cond : preceding_conditions(f, cast.start)) {
                if (compares_with_zero(cond, operand, {">=", "<", ">"})) {
                    checked = true;
                    break;
                }
            }
            if (checked) {
                continue;
            }
            std::string msg = to_unsigned ? "signed value '" + operand + "' converted to " + w +
                                                " without a sign check"
                                          : "unsigned value '" + operand + "' converted to " + w +
                                                " (unsigned-to-signed variant)";
            out.push_back(make_finding("A-a-IS", model, &c, &f, cast, std::move(msg)));
        }
    });
    sort_findings(out);
    return out;
}

// A-a-W: `=+` / `=-` written as an assignment followed by a unary sign.
std::vector<Finding> detect_wrong_operator(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    const auto& toks = model.raw_tokens;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        const Token& eq = toks[i];
        const Token& sign = toks[i + 1];
        if (eq.text != "=" || (sign.text != "+" && sign.text != "-") || sign.span.start != eq.span.end) {
            continue;
        }
        if (eq.span.start > 0) {
            char before = model.source[eq.span.start - 1];
            if (std::string_view("=!<>+-").find(before) != std::string_view::npos) {
                continue;
            }
        }
        std::size_t k = i + 2;
        while (k < toks.size() && toks[k].trivia()) {
            ++k;
        }
        if (k >= toks.size()) {
            continue;
        }
        const Token& operand = toks[k];
        bool literal_keyword = operand.kind == TokenKind::Keyword && (operand.is("true") || operand.is("false"));
        if (operand.kind != TokenKind::Identifier && operand.kind != TokenKind::Number &&
            operand.kind != TokenKind::String && !literal_keyword) {
            continue;
        }

        const ContractDecl* in_contract = nullptr;
        const FunctionDecl* in_function = nullptr;
        for (const auto& c : model.contracts) {
            if (c.span.contains(eq.span.start)) {
                in_contract = &c;
                for (const auto& f : c.functions) {
                    if (f.span.contains(eq.span.start)) {
                        in_function = &f;
                    }
                }
            }
        }
        Span span{eq.span.start, sign.span.end};
        out.push_back(make_finding("A-a-W", model, in_contract, in_function, span,
                                   "'=" + sign.text + "' assigns a signed value; '" + sign.text +
                                       "=' was probably intended"));
    }
    return out;
}

// A-c-US: local struct/array declared without initializer and without an
// explicit memory/calldata location.
std::vector<Finding> detect_uninitialized_storage(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        for (const auto& s : f.body) {
            if (!s.local) {
                continue;
            }
            const VarDecl& v = *s.local;
            bool reference = v.type_class == TypeClass::UserComposite || v.type_class == TypeClass::Array;
            bool storage =
                v.storage_location == StorageLocation::Storage || v.storage_location == StorageLocation::Default;
            if (reference && storage && !v.has_initializer) {
                out.push_back(make_finding("A-c-US", model, &c, &f, v.span.empty() ? s.code : v.span,
                                           "local storage reference '" + v.name + "' of type '" + v.type_text +
                                               "' is not initialized and aliases storage slot 0"));
            }
        }
    });
    sort_findings(out);
    return out;
}

// D-a-R: value-carrying `.call` with default gas and no payload, followed
// later in the function by a state write.
std::vector<Finding> detect_reentrancy(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        for (std::size_t i = 0; i < f.body.size(); ++i) {
            const Stmt& s = f.body[i];
            if (!s.call || !s.call->carries_value || s.call->gas_specified || !s.call->payload_empty) {
                continue;
            }
            const Stmt* write = nullptr;
            for (std::size_t j = i + 1; j < f.body.size() && !write; ++j) {
                const Stmt& later = f.body[j];
                if (later.assignment && later.assignment->lhs_is_state_var) {
                    write = &later;
                }
            }
            if (!write) {
                continue;
            }
            Span call_span = s.call->span.empty() ? s.code : s.call->span;
            Finding fd = make_finding("D-a-R", model, &c, &f, call_span,
                                      "ether sent to '" + s.call->callee +
                                          "' with forwarded gas before state variable '" +
                                          expr::root_identifier(write->assignment->lhs) + "' is updated");
            fd.evidence = {call_span, write->code};
            out.push_back(std::move(fd));
        }
    });
    sort_findings(out);
    return out;
}

// E-a-SA: externally callable function taking an address and an amount,
// crediting or paying that address, with no msg.data.length check.
std::vector<Finding> detect_short_address(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        if (!f.externally_callable() || f.is_constructor || !has_param_class(f, TypeClass::UnsignedInt)) {
            return;
        }
        if (expr::squash(model.text(f.span)).find("msg.data.length") != std::string::npos) {
            return;
        }
        Scope scope(model, c, f);
        std::vector<Span> hits;
        for (const auto& p : f.params) {
            if (p.type_class != TypeClass::Address || p.name.empty()) {
                continue;
            }
            for (const auto& s : f.body) {
                // the externally supplied amount has to take part in the statement
                auto stmt_toks = tokens_in(model, s.code);
                bool uses_amount = std::any_of(stmt_toks.begin(), stmt_toks.end(), [&](const Token* t) {
                    const VarDecl* v = t->kind == TokenKind::Identifier ? scope.find(t->text) : nullptr;
                    return v && v->type_class == TypeClass::UnsignedInt &&
                           std::any_of(f.params.begin(), f.params.end(),
                                       [&](const VarDecl& q) { return &q == v; });
                });
                if (!uses_amount) {
                    continue;
                }
                bool hit = false;
                if (s.assignment && s.assignment->lhs_is_state_var) {
                    std::string lhs = expr::squash(s.assignment->lhs);
                    const VarDecl* root = scope.find(expr::root_identifier(lhs));
                    auto idx = index_chain(lhs);
                    hit = root && root->type_class == TypeClass::Mapping && !idx.empty() && idx.front() == p.name;
                }
                std::string code = expr::squash(s.text);
                for (std::string_view m : {".transfer(", ".send("}) {
                    hit = hit || code.find(p.name + std::string(m)) != std::string::npos;
                }
                hit = hit || (s.call && s.call->carries_value && expr::squash(s.call->callee) == p.name);
                if (hit) {
                    hits.push_back(s.code);
                }
            }
        }
        if (hits.empty()) {
            return;
        }
        std::sort(hits.begin(), hits.end());
        hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
        Finding fd = make_finding("E-a-SA", model, &c, &f, hits.front(),
                                  "'" + f.name +
                                      "' moves value to a caller-supplied address without checking msg.data.length");
        fd.evidence = hits;
        out.push_back(std::move(fd));
    });
    sort_findings(out);
    return out;
}

// E-a-SW: ecrecover result compared for authentication with no zero-address
// check on either side of the comparison.
std::vector<Finding> detect_wrong_signature_params(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        // expressions standing for the recovered address
        std::vector<std::string> recovered;
        std::optional<Span> origin;
        for (const auto& s : f.body) {
            std::string code = expr::squash(s.text);
            if (code.find("ecrecover(") == std::string::npos) {
                continue;
            }
            if (!origin) {
                origin = s.code;
            }
            if (s.local && s.local->has_initializer &&
                expr::squash(s.local->initializer).starts_with("ecrecover(")) {
                recovered.push_back(s.local->name);
            } else if (s.assignment && s.assignment->op == "=" &&
                       expr::squash(s.assignment->rhs).starts_with("ecrecover(")) {
                recovered.push_back(expr::squash(s.assignment->lhs));
            }
        }
        if (!origin) {
            return;
        }
        // one recovered local at most; several assignments make the value ambiguous
        std::sort(recovered.begin(), recovered.end());
        recovered.erase(std::unique(recovered.begin(), recovered.end()), recovered.end());
        if (recovered.size() > 1) {
            recovered.clear();
        }

        auto is_recovered = [&](const std::string& side) {
            return side.starts_with("ecrecover(") ||
                   (!recovered.empty() && side == recovered.front());
        };
        const auto conditions = all_conditions(f);
        for (const auto& s : f.body) {
            std::vector<std::string> exprs;
            if (!s.condition.empty()) {
                exprs.push_back(s.condition);
            }
            if (s.kind == StmtKind::Return) {
                std::string t = s.text;
                t = t.substr(t.find("return") + 6);
                if (!t.empty() && t.back() == ';') {
                    t.pop_back();
                }
                exprs.push_back(expr::strip_parens(t));
            }
            if (s.assignment && !s.assignment->rhs.empty()) {
                exprs.push_back(expr::strip_parens(s.assignment->rhs));
            }
            if (s.local && s.local->has_initializer) {
                exprs.push_back(expr::strip_parens(s.local->initializer));
            }
            for (const auto& e : exprs) {
                for (const auto& cmp : expr::comparisons(e)) {
                    if (cmp.op != "==" && cmp.op != "!=") {
                        continue;
                    }
                    std::string result;
                    std::string comparand;
                    if (is_recovered(cmp.lhs)) {
                        result = cmp.lhs;
                        comparand = cmp.rhs;
                    } else if (is_recovered(cmp.rhs)) {
                        result = cmp.rhs;
                        comparand = cmp.lhs;
                    } else {
                        continue;
                    }
                    if (expr::is_zero_address(comparand)) {
                        continue;  // this is the zero check itself
                    }
                    bool zero_checked = std::any_of(conditions.begin(), conditions.end(), [&](const std::string& g) {
                        return compares_with_zero_address(g, result) || compares_with_zero_address(g, comparand);
                    });
                    if (zero_checked) {
                        continue;
                    }
                    Finding fd = make_finding("E-a-SW", model, &c, &f, s.code,
                                              "ecrecover result compared with '" + comparand +
                                                  "' without rejecting the zero address");
                    fd.evidence = {*origin, s.code};
                    out.push_back(std::move(fd));
                }
            }
        }
    });
    sort_findings(out);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// F-c-T: ERC20 approve overwriting a nonzero allowance with a nonzero value.
std::vector<Finding> detect_tod_approve(const SourceModel& model, const DetectOptions&) {
    std::vector<Finding> out;
    for_each_function(model, [&](const ContractDecl& c, const FunctionDecl& f) {
        if (f.name != "approve" || !has_param_class(f, TypeClass::Address)) {
            return;
        }
        Scope scope(model, c, f);
        for (const auto& p : f.params) {
            if (p.type_class != TypeClass::UnsignedInt || p.name.empty()) {
                continue;
            }
            for (const auto& s : f.body) {
                if (!s.assignment || s.assignment->op != "=" || !s.assignment->lhs_is_state_var) {
                    continue;
                }
                std::string lhs = expr::squash(s.assignment->lhs);
                if (expr::squash(s.assignment->rhs) != p.name) {
                    continue;
                }
                const VarDecl* root = scope.find(expr::root_identifier(lhs));
                if (!root || root->type_class != TypeClass::Mapping || index_chain(lhs).size() < 2) {
                    continue;
                }
                bool guarded = std::any_of(s.guard_exprs.begin(), s.guard_exprs.end(), [&](const std::string& g) {
                    return compares_with_zero(g, p.name, {"=="}) || compares_with_zero(g, lhs, {"=="});
                });
                if (guarded) {
                    continue;
                }
                out.push_back(make_finding("F-c-T", model, &c, &f, s.code,
                                           "approve overwrites allowance '" + lhs +
                                               "' without requiring the old or new value to be zero"));
            }
        }
    });
    sort_findings(out);
    return out;
}

const std::vector<DetectorSpec>& detector_specs() {
    static const std::vector<DetectorSpec> specs = {
        {"A-a-IS", PragmaConstraint::unbounded(), &detect_integer_sign},
        {"A-a-W", PragmaConstraint::parse(kUpTo0426), &detect_wrong_operator},
        {"A-c-US", PragmaConstraint::parse(kUpTo0426), &detect_uninitialized_storage},
        {"D-a-R", PragmaConstraint::unbounded(), &detect_reentrancy},
        {"E-a-SA", PragmaConstraint::unbounded(), &detect_short_address},
        {"E-a-SW", PragmaConstraint::unbounded(), &detect_wrong_signature_params},
        {"F-c-T", PragmaConstraint::unbounded(), &detect_tod_approve},
    };
    return specs;
}

const DetectorSpec* find_detector(std::string_view bug_id) {
    for (const auto& s : detector_specs()) {
        if (s.bug_id == bug_id) {
            return &s;
        }
    }
    return nullptr;
}

std::vector<Finding> detect_all(const SourceModel& model, const std::set<std::string>& enabled,
                                const DetectOptions& options) {
    std::vector<std::string> unknown;
    for (const auto& id : enabled) {
        if (!find_detector(id)) {
            unknown.push_back(id);
        }
    }
    if (!unknown.empty()) {
        throw Error("no detector for bug id(s)", std::move(unknown));
    }
    std::vector<Finding> out;
    for (const auto& spec : detector_specs()) {
        if (!enabled.count(spec.bug_id) || !version_applies(model.pragma, spec.affected_versions)) {
            continue;
        }
        auto found = spec.rule(model, options);
        out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
    sort_findings(out);
    return out;
}

std::vector<Finding> detect_all(const SourceModel& model, const DetectOptions& options) {
    std::set<std::string> all;
    for (const auto& s : detector_specs()) {
        all.insert(s.bug_id);
    }
    return detect_all(model, all, options);
}

}  // namespace solbug
