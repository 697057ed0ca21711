#include "codeplex/subtree.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <utility>

namespace codeplex {

namespace {

void write_head(const AstNode& node, std::string& out) {
    out += kind_name(node.kind);
    if (!node.label.empty()) {
        out += '[';
        out += node.label;
        out += ']';
    }
}

void canonical_rec(const AstNode& node, std::string& out) {
    write_head(node, out);
    if (node.children.empty()) return;
    out += '(';
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += ',';
        canonical_rec(node.children[i], out);
    }
    out += ')';
}

class CanonicalReader {
public:
    explicit CanonicalReader(std::string_view text) : text_(text) {}

    AstNode read() {
        AstNode node = read_node();
        if (pos_ != text_.size()) bad("trailing characters");
        return node;
    }

private:
    [[noreturn]] void bad(const std::string& why) const {
        throw Error(ErrorCode::kInvalidArgument,
                    "malformed pattern '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + why);
    }

    AstNode read_node() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '[' && text_[pos_] != '(' && text_[pos_] != ',' &&
               text_[pos_] != ')') {
            ++pos_;
        }
        const auto kind = kind_from_name(text_.substr(start, pos_ - start));
        if (!kind) bad("unknown node kind");
        AstNode node(*kind);
        if (pos_ < text_.size() && text_[pos_] == '[') {
            const std::size_t close = text_.find(']', pos_);
            if (close == std::string_view::npos) bad("unclosed label");
            node.label = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
            pos_ = close + 1;
        }
        if (pos_ < text_.size() && text_[pos_] == '(') {
            ++pos_;
            while (true) {
                node.children.push_back(read_node());
                if (pos_ >= text_.size()) bad("unclosed child list");
                if (text_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                if (text_[pos_] == ')') {
                    ++pos_;
                    break;
                }
                bad("expected ',' or ')'");
            }
        }
        node.refresh_mask();
        return node;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

// Rooted pattern lists, kept as (canonical text, node count).
using Rooted = std::vector<std::pair<std::string, std::size_t>>;

bool smaller_first(const std::pair<std::string, std::size_t>& a, const std::pair<std::string, std::size_t>& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
}

class Enumerator {
public:
    Enumerator(std::size_t max_nodes, std::size_t cap) : max_nodes_(max_nodes), cap_(cap) {}

    // Patterns rooted at `node`; appends every node's list to `all`.
    Rooted rooted(const AstNode& node, std::set<std::string>& all) {
        std::vector<Rooted> child_patterns;
        child_patterns.reserve(node.children.size());
        for (const auto& c : node.children) child_patterns.push_back(rooted(c, all));

        // partial child sequences: joined canonical text -> node count (root included)
        std::map<std::string, std::size_t> partial{{std::string(), 1}};
        for (std::size_t j = 0; j < node.children.size(); ++j) {
            std::map<std::string, std::size_t> next;
            for (const auto& [seq, count] : partial) {
                if (!node.mandatory[j]) next.emplace(seq, count);
                for (const auto& [pat, size] : child_patterns[j]) {
                    if (count + size > max_nodes_) continue;
                    std::string joined = seq;
                    if (!joined.empty()) joined += ',';
                    joined += pat;
                    next.emplace(std::move(joined), count + size);
                }
            }
            partial = cap_map(std::move(next));
            if (partial.empty()) break;
        }

        std::string head;
        write_head(node, head);
        Rooted out;
        out.reserve(partial.size());
        for (auto& [seq, count] : partial) {
            if (seq.empty()) {
                out.emplace_back(head, count);
            } else {
                out.emplace_back(head + "(" + seq + ")", count);
            }
        }
        std::sort(out.begin(), out.end(), smaller_first);
        if (out.size() > cap_) {
            out.resize(cap_);
            truncated_ = true;
        }
        for (const auto& p : out) all.insert(p.first);
        return out;
    }

    bool truncated() const noexcept { return truncated_; }

private:
    std::map<std::string, std::size_t> cap_map(std::map<std::string, std::size_t> states) {
        if (states.size() <= cap_) return states;
        truncated_ = true;
        Rooted ordered(states.begin(), states.end());
        std::sort(ordered.begin(), ordered.end(), smaller_first);
        ordered.resize(cap_);
        return {ordered.begin(), ordered.end()};
    }

    std::size_t max_nodes_;
    std::size_t cap_;
    bool truncated_ = false;
};

// Pattern root matched at tree node. Mandatory children of the tree node form
// a prefix and must map one-to-one onto the pattern's leading children; the
// remaining pattern children embed greedily as an ordered subsequence.
bool match_at(const AstNode& tree, const AstNode& pattern) {
    if (tree.kind != pattern.kind || tree.label != pattern.label) return false;
    const std::size_t required = mandatory_prefix(tree.kind, tree.children.size());
    if (pattern.children.size() < required) return false;
    for (std::size_t i = 0; i < required; ++i) {
        if (!match_at(tree.children[i], pattern.children[i])) return false;
    }
    std::size_t t = required;
    for (std::size_t p = required; p < pattern.children.size(); ++p) {
        while (t < tree.children.size() && !match_at(tree.children[t], pattern.children[p])) ++t;
        if (t == tree.children.size()) return false;
        ++t;
    }
    return true;
}

bool iso_rec(const AstNode& tree, const AstNode& pattern) {
    if (match_at(tree, pattern)) return true;
    for (const auto& c : tree.children) {
        if (iso_rec(c, pattern)) return true;
    }
    return false;
}

void count_sites_rec(const AstNode& tree, const std::vector<const AstNode*>& patterns, std::size_t& count) {
    for (const AstNode* p : patterns) {
        if (match_at(tree, *p)) {
            ++count;
            break;
        }
    }
    for (const auto& c : tree.children) count_sites_rec(c, patterns, count);
}

}  // namespace

std::string canonical_form(const AstNode& node) {
    std::string out;
    canonical_rec(node, out);
    return out;
}

SubtreePattern SubtreePattern::from_tree(AstNode tree) {
    SubtreePattern p;
    p.canonical = canonical_form(tree);
    p.fingerprint = hex_digest(p.canonical);
    p.node_count = tree.size();
    p.tree = std::move(tree);
    return p;
}

SubtreePattern SubtreePattern::from_canonical(std::string_view text) {
    CanonicalReader reader(text);
    SubtreePattern p = from_tree(reader.read());
    if (p.canonical != text) throw Error(ErrorCode::kInvalidArgument, "non-canonical pattern text: " + std::string(text));
    return p;
}

EnumerationResult enumerate_subtrees(const AstNode& root, std::size_t max_nodes, std::size_t pattern_cap) {
    if (max_nodes < 1) throw Error(ErrorCode::kInvalidArgument, "max_nodes must be >= 1");
    if (pattern_cap < 1) throw Error(ErrorCode::kInvalidArgument, "pattern_cap must be >= 1");
    Enumerator e(max_nodes, pattern_cap);
    std::set<std::string> all;
    e.rooted(root, all);
    EnumerationResult result;
    result.canonical.assign(all.begin(), all.end());
    result.truncated = e.truncated();
    return result;
}

std::vector<SubtreePattern> enumerate_patterns(const CanonicalAst& ast, std::size_t max_nodes) {
    std::vector<SubtreePattern> out;
    for (const auto& text : enumerate_subtrees(ast.root, max_nodes).canonical) {
        out.push_back(SubtreePattern::from_canonical(text));
    }
    return out;
}

bool iso(const AstNode& tree, const AstNode& pattern) { return iso_rec(tree, pattern); }

bool contains(const SubtreePattern& outer, const SubtreePattern& inner) {
    return inner.node_count <= outer.node_count && iso(outer.tree, inner.tree);
}

std::size_t count_match_sites(const AstNode& tree, const AstNode& pattern) {
    std::size_t count = 0;
    count_sites_rec(tree, {&pattern}, count);
    return count;
}

std::string SubtreeCatalog::fingerprint() const {
    std::string blob = "catalog/1\n" + canonicalization + "\n";
    blob += std::to_string(params.max_nodes) + ' ' + std::to_string(params.min_support) + ' ' +
            std::to_string(params.pattern_cap) + '\n';
    for (const auto& p : patterns) {
        blob += p.canonical;
        blob += '\n';
    }
    return hex_digest(blob);
}

std::size_t SubtreeCatalog::find(std::string_view canonical) const {
    for (std::size_t k = 0; k < patterns.size(); ++k) {
        if (patterns[k].canonical == canonical) return k;
    }
    return patterns.size();
}

SubtreeCatalog mine_catalog(const std::vector<CanonicalAst>& corpus, const MiningParams& params,
                            std::string canonicalization) {
    if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "corpus is empty");
    if (params.min_support < 1) throw Error(ErrorCode::kInvalidArgument, "min_support must be >= 1");

    SubtreeCatalog catalog;
    catalog.params = params;
    catalog.canonicalization = std::move(canonicalization);

    std::map<std::string, std::set<std::string>> occurrences;
    for (const auto& ast : corpus) {
        const auto result = enumerate_subtrees(ast.root, params.max_nodes, params.pattern_cap);
        if (result.truncated) catalog.truncated_programs.push_back(ast.question_id);
        for (const auto& text : result.canonical) occurrences[text].insert(ast.question_id);
    }
    std::sort(catalog.truncated_programs.begin(), catalog.truncated_programs.end());

    // group surviving patterns by identical occurrence set
    std::map<std::vector<std::string>, std::vector<SubtreePattern>> groups;
    for (auto& [text, ids] : occurrences) {
        if (ids.size() < params.min_support) continue;
        groups[std::vector<std::string>(ids.begin(), ids.end())].push_back(SubtreePattern::from_canonical(text));
    }

    std::vector<std::pair<SubtreePattern, std::vector<std::string>>> kept;
    for (auto& [ids, members] : groups) {
        // Largest first: anything contained in a larger member is contained in a
        // kept maximal one, since containment is transitive.
        std::sort(members.begin(), members.end(), [](const SubtreePattern& a, const SubtreePattern& b) {
            if (a.node_count != b.node_count) return a.node_count > b.node_count;
            return a.canonical < b.canonical;
        });
        std::vector<const SubtreePattern*> maximal;
        for (const auto& candidate : members) {
            const bool absorbed = std::any_of(maximal.begin(), maximal.end(), [&](const SubtreePattern* big) {
                return big->node_count > candidate.node_count && contains(*big, candidate);
            });
            if (!absorbed) maximal.push_back(&candidate);
        }
        for (const SubtreePattern* p : maximal) kept.emplace_back(*p, ids);
    }
    if (kept.empty()) throw Error(ErrorCode::kEmptyCatalog, "no pattern reaches min_support " + std::to_string(params.min_support));

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.first.node_count != b.first.node_count) return a.first.node_count < b.first.node_count;
        return a.first.canonical < b.first.canonical;
    });

    std::unordered_map<std::string, std::string> seen_fingerprints;
    for (auto& [pattern, ids] : kept) {
        auto [it, inserted] = seen_fingerprints.emplace(pattern.fingerprint, pattern.canonical);
        if (!inserted && it->second != pattern.canonical) {
            throw Error(ErrorCode::kInternal, "fingerprint collision between " + it->second + " and " + pattern.canonical);
        }
        catalog.patterns.push_back(std::move(pattern));
        catalog.occurrences.push_back(std::move(ids));
    }
    return catalog;
}

std::size_t temporal_support(const CanonicalAst& ast, const std::vector<SubtreePattern>& frame_store_patterns) {
    std::vector<const AstNode*> trees;
    trees.reserve(frame_store_patterns.size());
    for (const auto& p : frame_store_patterns) trees.push_back(&p.tree);
    std::size_t count = 0;
    if (!trees.empty()) count_sites_rec(ast.root, trees, count);
    return count;
}

}  // namespace codeplex
