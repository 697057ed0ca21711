#pragma once

// Canonical syntax trees for generated visual programs.
//
// The parser accepts the narrow Python subset that program generators emit
// (one top-level `def`, simple control flow, calls into a perception API).
// User identifiers collapse to NamePlaceholder and literal values are
// dropped, so two programs that differ only in naming or constants produce
// identical trees. Call targets and attribute members found in the API
// whitelist survive as labelled ApiName nodes.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace codeplex {

enum class NodeKind {
    FunctionDef,
    Assign,
    AugAssign,
    For,
    While,
    If,
    Elif,
    Else,
    Break,
    Continue,
    Return,
    ExprStmt,
    Call,
    Attribute,
    Subscript,
    BinOp,
    UnaryOp,
    BoolOp,
    Compare,
    ListLit,
    TupleLit,
    Comprehension,
    Ternary,
    NumLit,
    StrLit,
    BoolLit,
    NoneLit,
    NamePlaceholder,
    ApiName,
    OpaqueStmt,
};

inline constexpr std::size_t kNodeKindCount = static_cast<std::size_t>(NodeKind::OpaqueStmt) + 1;

std::string_view kind_name(NodeKind kind) noexcept;
std::optional<NodeKind> kind_from_name(std::string_view name) noexcept;

/// Number of leading children that are syntactically required for `kind`
/// when the node has `child_count` children. Mandatory children always form
/// a prefix of the child list.
std::size_t mandatory_prefix(NodeKind kind, std::size_t child_count) noexcept;

/// True for kinds whose label is part of their identity (ApiName, operators).
bool kind_has_label(NodeKind kind) noexcept;

struct AstNode {
    NodeKind kind = NodeKind::OpaqueStmt;
    std::string label;  // empty when the kind carries no label
    std::vector<AstNode> children;
    std::vector<bool> mandatory;  // parallel to children

    AstNode() = default;
    AstNode(NodeKind k, std::string l = {}) : kind(k), label(std::move(l)) {}

    void add_child(AstNode child);
    /// Recomputes `mandatory` from the per-kind table.
    void refresh_mask();
    std::size_t size() const noexcept;

    friend bool operator==(const AstNode&, const AstNode&) = default;
};

struct CanonicalAst {
    std::string question_id;
    AstNode root;
    std::size_t node_count = 0;

    friend bool operator==(const CanonicalAst&, const CanonicalAst&) = default;
};

struct ProgramSource {
    std::string question_id;
    std::string source;
};

struct ParseOptions {
    std::set<std::string, std::less<>> api_whitelist;
    bool strict = true;
};

/// Removes `#` comments and blank lines. Throws SourceError(UnterminatedString).
std::string strip_noise(std::string_view source);

/// Parses cleaned program text. Throws SourceError on malformed input,
/// UnsupportedConstruct in strict mode, Error(MissingFunction) without a def.
/// `opaque` (optional) receives the names of constructs replaced by
/// OpaqueStmt in permissive mode.
CanonicalAst parse_program(std::string_view question_id, std::string_view source,
                           const ParseOptions& options,
                           std::vector<std::string>* opaque = nullptr);

struct ParseFailure {
    std::string question_id;
    std::string error;  // error code name
    int line = 0;
    std::string message;
};

struct CorpusParse {
    std::vector<CanonicalAst> asts;
    std::vector<ParseFailure> failures;
    std::map<std::string, std::vector<std::string>> opaque;  // question_id -> constructs
    std::size_t total = 0;
};

/// strip_noise + parse_program over every program; failures are collected,
/// not thrown. Output order follows input order.
CorpusParse parse_corpus(const std::vector<ProgramSource>& programs, const ParseOptions& options);

/// Shipped default whitelist: call names of the video perception API.
std::set<std::string, std::less<>> default_api_whitelist();

/// Digest of the canonicalization settings (whitelist + strictness). ASTs,
/// catalogs and feature matrices carry it so mismatches can be detected.
std::string canonicalization_digest(const ParseOptions& options);

/// Indented tree rendering; NamePlaceholder leaves are elided when
/// `elide_names` is set.
std::string pretty_print(const AstNode& node, bool elide_names = false);

}  // namespace codeplex
