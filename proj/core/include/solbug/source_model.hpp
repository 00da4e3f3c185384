#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solbug/lexer.hpp"
#include "solbug/pragma.hpp"

namespace solbug {

enum class TypeClass { SignedInt, UnsignedInt, Address, Mapping, Array, UserComposite, Other };
enum class StorageLocation { Default, Storage, Memory, Calldata };
enum class Visibility { Default, Public, External, Internal, Private };
enum class ContractKind { Contract, Library, Interface };

std::string_view to_string(TypeClass c);
std::string_view to_string(StorageLocation l);
std::string_view to_string(Visibility v);
std::string_view to_string(ContractKind k);

/// Classifies a declared type by its text. `struct_names` holds every
/// struct declared in the file (bare names, no contract qualifier).
TypeClass classify_type(std::string_view type_text, const std::set<std::string>& struct_names);

struct VarDecl {
    std::string name;
    std::string type_text;
    TypeClass type_class = TypeClass::Other;
    StorageLocation storage_location = StorageLocation::Default;
    bool has_initializer = false;
    std::string initializer;
    Span span;
};

enum class StmtKind {
    LocalVarDecl,
    Assignment,
    CompoundAssignment,
    RequireOrAssert,
    IfGuard,
    ExternalCall,
    Return,
    Opaque,
};

std::string_view to_string(StmtKind k);

enum class CallStyle { Plain, Legacy, Modern };

/// A low-level `<expr>.call` invocation: `.call.value(v)()` (legacy),
/// `.call{value: v}("")` (modern) or `.call(data)` (plain).
struct ExternalCall {
    std::string callee;
    bool carries_value = false;
    bool gas_specified = false;
    bool payload_empty = false;
    CallStyle style = CallStyle::Plain;
    std::string value_expr;
    Span span;
};

struct AssignmentDetail {
    std::string lhs;
    std::string rhs;
    std::string op;  // "=", "+=", "++", "delete", ...
    bool lhs_is_state_var = false;
};

struct Stmt {
    StmtKind kind = StmtKind::Opaque;
    /// Covering span; consecutive statements of a function partition its body.
    Span span;
    /// The statement's own code, without the leading trivia in `span`.
    Span code;
    std::string text;
    /// Conditions of the enclosing `if`s and preceding `require`s of the
    /// same block nest (else-branches record the negated condition).
    std::vector<std::string> guard_exprs;
    /// Condition text for if-guard and require-or-assert statements.
    std::string condition;
    std::optional<ExternalCall> call;
    std::optional<AssignmentDetail> assignment;
    std::optional<VarDecl> local;
};

struct FunctionDecl {
    std::string name;
    std::vector<VarDecl> params;
    Visibility visibility = Visibility::Default;
    bool payable = false;
    bool is_fallback = false;
    bool is_constructor = false;
    std::vector<std::string> modifiers;
    std::vector<Stmt> body;
    Span span;
    std::optional<Span> body_span;  // inside the braces; absent for declarations

    bool externally_callable() const {
        return visibility == Visibility::Public || visibility == Visibility::External ||
               visibility == Visibility::Default;
    }
};

struct ContractDecl {
    std::string name;
    ContractKind kind = ContractKind::Contract;
    std::vector<std::string> bases;
    std::vector<VarDecl> state_vars;
    std::vector<FunctionDecl> functions;
    Span span;
};

struct SourceModel {
    std::string file_path;
    std::string source;
    PragmaConstraint pragma;
    std::vector<ContractDecl> contracts;
    std::vector<Token> raw_tokens;
    std::set<std::string> struct_names;
    std::vector<std::string> diagnostics;

    const ContractDecl* find_contract(std::string_view name) const;

    /// State variables visible in `c`: its own plus those of bases declared
    /// in the same file.
    std::vector<const VarDecl*> visible_state_vars(const ContractDecl& c) const;

    std::string_view text(const Span& s) const {
        return std::string_view(source).substr(s.start, s.end - s.start);
    }
};

}  // namespace solbug
