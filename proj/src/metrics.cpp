#include "codeplex/metrics.hpp"

namespace codeplex {

std::size_t lines_of_code(std::string_view source) {
    const std::string cleaned = strip_noise(source);
    std::size_t count = 0;
    std::size_t start = 0;
    while (start < cleaned.size()) {
        std::size_t end = cleaned.find('\n', start);
        if (end == std::string::npos) end = cleaned.size();
        if (cleaned.find_first_not_of(" \t\r\f\v", start) < end) ++count;
        start = end + 1;
    }
    return count;
}

namespace {

std::size_t decisions(const AstNode& node) {
    std::size_t n = 0;
    switch (node.kind) {
        case NodeKind::If:
        case NodeKind::Elif:
        case NodeKind::For:
        case NodeKind::While:
        case NodeKind::Ternary:
        case NodeKind::Comprehension:
            n = 1;
            break;
        case NodeKind::BoolOp:
            // `a and b and c` is one node with three operands
            n = node.children.empty() ? 0 : node.children.size() - 1;
            break;
        default:
            break;
    }
    for (const auto& c : node.children) n += decisions(c);
    return n;
}

}  // namespace

std::size_t cyclomatic(const AstNode& root) { return 1 + decisions(root); }

}  // namespace codeplex
