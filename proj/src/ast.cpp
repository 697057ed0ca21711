#include "codeplex/ast.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <array>
#include <sstream>

namespace codeplex {

namespace {

constexpr std::array<std::string_view, kNodeKindCount> kKindNames = {
    "FunctionDef", "Assign",    "AugAssign", "For",        "While",           "If",
    "Elif",        "Else",      "Break",     "Continue",   "Return",          "ExprStmt",
    "Call",        "Attribute", "Subscript", "BinOp",      "UnaryOp",         "BoolOp",
    "Compare",     "ListLit",   "TupleLit",  "Comprehension", "Ternary",      "NumLit",
    "StrLit",      "BoolLit",   "NoneLit",   "NamePlaceholder", "ApiName",    "OpaqueStmt",
};

}  // namespace

std::string_view kind_name(NodeKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<NodeKind> kind_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<NodeKind>(i);
    }
    return std::nullopt;
}

std::size_t mandatory_prefix(NodeKind kind, std::size_t child_count) noexcept {
    std::size_t prefix = 0;
    switch (kind) {
        case NodeKind::If:
        case NodeKind::Elif:
        case NodeKind::While:
        case NodeKind::Call:
            prefix = 1;
            break;
        case NodeKind::For:
            prefix = 2;
            break;
        case NodeKind::Comprehension:
            prefix = 3;
            break;
        case NodeKind::Assign:
        case NodeKind::AugAssign:
        case NodeKind::ExprStmt:
        case NodeKind::Attribute:
        case NodeKind::Subscript:
        case NodeKind::BinOp:
        case NodeKind::UnaryOp:
        case NodeKind::BoolOp:
        case NodeKind::Compare:
        case NodeKind::Ternary:
            prefix = child_count;
            break;
        default:
            prefix = 0;
            break;
    }
    return prefix < child_count ? prefix : child_count;
}

bool kind_has_label(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::ApiName:
        case NodeKind::AugAssign:
        case NodeKind::BinOp:
        case NodeKind::UnaryOp:
        case NodeKind::BoolOp:
        case NodeKind::Compare:
            return true;
        default:
            return false;
    }
}

void AstNode::add_child(AstNode child) {
    children.push_back(std::move(child));
    refresh_mask();
}

void AstNode::refresh_mask() {
    const std::size_t prefix = mandatory_prefix(kind, children.size());
    mandatory.assign(children.size(), false);
    for (std::size_t i = 0; i < prefix; ++i) mandatory[i] = true;
}

std::size_t AstNode::size() const noexcept {
    std::size_t n = 1;
    for (const auto& c : children) n += c.size();
    return n;
}

std::set<std::string, std::less<>> default_api_whitelist() {
    return {
        // video / image perception API
        "VideoSegment", "ImagePatch", "frame_iterator", "frame_from_index", "trim", "num_frames",
        "select_answer", "simple_query", "simple_qa", "find", "exists", "verify_property",
        "best_image_match", "best_text_match", "compute_depth", "llm_query", "crop",
        "horizontal_center", "vertical_center", "left", "right", "upper", "lower", "height",
        "width", "overlaps_with", "distance", "bool_to_yesno", "coerce_to_numeric",
        "process_guesses",
        // builtins that shape control flow
        "range", "len", "enumerate", "zip", "sorted", "min", "max", "sum", "abs", "round",
        "int", "float", "str", "list", "print", "any", "all", "reversed", "append",
    };
}

std::string canonicalization_digest(const ParseOptions& options) {
    std::string blob = options.strict ? "strict\n" : "permissive\n";
    for (const auto& name : options.api_whitelist) {
        blob += name;
        blob += '\n';
    }
    return hex_digest(blob);
}

namespace {

void pretty_rec(const AstNode& node, bool elide, int depth, std::ostringstream& out) {
    if (elide && node.kind == NodeKind::NamePlaceholder) return;
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << kind_name(node.kind);
    if (!node.label.empty()) out << ' ' << node.label;
    out << '\n';
    for (const auto& c : node.children) pretty_rec(c, elide, depth + 1, out);
}

}  // namespace

std::string pretty_print(const AstNode& node, bool elide_names) {
    std::ostringstream out;
    pretty_rec(node, elide_names, 0, out);
    return out.str();
}

CorpusParse parse_corpus(const std::vector<ProgramSource>& programs, const ParseOptions& options) {
    CorpusParse result;
    result.total = programs.size();
    for (const auto& program : programs) {
        try {
            std::vector<std::string> opaque;
            const std::string cleaned = strip_noise(program.source);
            result.asts.push_back(parse_program(program.question_id, cleaned, options, &opaque));
            if (!opaque.empty()) result.opaque[program.question_id] = std::move(opaque);
        } catch (const SourceError& e) {
            result.failures.push_back({program.question_id, error_code_name(e.code()), e.line(), e.what()});
        } catch (const Error& e) {
            result.failures.push_back({program.question_id, error_code_name(e.code()), 0, e.what()});
        }
    }
    return result;
}

}  // namespace codeplex
