#pragma once

#include "codeplex/ast.hpp"

#include <string>
#include <string_view>

namespace codeplex {

struct StructuralScore {
    std::string question_id;
    std::size_t loc = 0;
    std::size_t cyclomatic = 1;
};

/// Non-empty lines left after strip_noise.
std::size_t lines_of_code(std::string_view source);

/// McCabe count: 1 + one per if, elif, for, while, ternary and comprehension,
/// plus one per and/or operator. else branches and opaque statements add nothing.
std::size_t cyclomatic(const AstNode& root);
inline std::size_t cyclomatic(const CanonicalAst& ast) { return cyclomatic(ast.root); }

}  // namespace codeplex
