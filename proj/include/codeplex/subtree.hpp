#pragma once

// Valid-subtree enumeration, pattern matching and catalog mining.
//
// A valid subtree is a rooted, connected piece of a canonical AST in which
// every included node keeps all of its mandatory children. Children are
// ordered; a pattern's children embed into a tree node's children as an
// order-preserving subsequence (statements may be skipped).

#include "codeplex/ast.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace codeplex {

struct SubtreePattern {
    AstNode tree;
    std::string canonical;    // Kind[label](child,child,...)
    std::string fingerprint;  // hex digest of `canonical`
    std::size_t node_count = 0;

    static SubtreePattern from_tree(AstNode tree);
    /// Inverse of `canonical`. Throws Error(InvalidArgument) on malformed text.
    static SubtreePattern from_canonical(std::string_view text);

    friend bool operator==(const SubtreePattern& a, const SubtreePattern& b) { return a.canonical == b.canonical; }
};

std::string canonical_form(const AstNode& node);

struct EnumerationResult {
    std::vector<std::string> canonical;  // sorted, unique
    bool truncated = false;              // per-node pattern cap was hit
};

inline constexpr std::size_t kDefaultMaxNodes = 15;
inline constexpr std::size_t kDefaultMinSupport = 5;
inline constexpr std::size_t kDefaultPatternCap = 20000;

/// G(T) restricted to patterns with at most `max_nodes` nodes. When more than
/// `pattern_cap` patterns root at one node the smallest ones (by node count,
/// then canonical text) are kept and the result is flagged as truncated.
EnumerationResult enumerate_subtrees(const AstNode& root, std::size_t max_nodes,
                                     std::size_t pattern_cap = kDefaultPatternCap);

std::vector<SubtreePattern> enumerate_patterns(const CanonicalAst& ast, std::size_t max_nodes);

/// True when `pattern` occurs in `tree` as a valid subtree.
bool iso(const AstNode& tree, const AstNode& pattern);
inline bool iso(const CanonicalAst& ast, const SubtreePattern& pattern) { return iso(ast.root, pattern.tree); }

/// True when `inner` is contained in `outer` (treating `outer` as a tree).
bool contains(const SubtreePattern& outer, const SubtreePattern& inner);

/// Nodes of `tree` at which `pattern` matches with the pattern root mapped to that node.
std::size_t count_match_sites(const AstNode& tree, const AstNode& pattern);

struct MiningParams {
    std::size_t max_nodes = kDefaultMaxNodes;
    std::size_t min_support = kDefaultMinSupport;
    std::size_t pattern_cap = kDefaultPatternCap;
};

struct SubtreeCatalog {
    std::vector<SubtreePattern> patterns;
    std::vector<std::vector<std::string>> occurrences;  // sorted question ids per pattern
    MiningParams params;
    std::string canonicalization;                       // digest of the parse settings
    std::vector<std::string> truncated_programs;        // programs that hit the pattern cap

    std::size_t size() const noexcept { return patterns.size(); }
    std::size_t support(std::size_t k) const { return occurrences.at(k).size(); }
    /// Digest binding feature matrices and models to this catalog.
    std::string fingerprint() const;
    /// Index of the pattern with the given canonical form, or size() if absent.
    std::size_t find(std::string_view canonical) const;
};

/// Union of valid subtrees over the corpus, min-support filter, then the
/// merge step: within each group of identical occurrence sets only
/// containment-maximal patterns survive. Throws Error(EmptyCatalog).
SubtreeCatalog mine_catalog(const std::vector<CanonicalAst>& corpus, const MiningParams& params,
                            std::string canonicalization = {});

/// Number of distinct nodes of `ast` at which at least one of the designated
/// frame-storing patterns matches.
std::size_t temporal_support(const CanonicalAst& ast, const std::vector<SubtreePattern>& frame_store_patterns);

}  // namespace codeplex
