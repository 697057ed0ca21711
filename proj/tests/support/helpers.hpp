#pragma once
// Fixture loading shared by the unit and acceptance tests.

#include "codeplex/ast.hpp"
#include "codeplex/io.hpp"
#include "codeplex/subtree.hpp"
#include "oracles.hpp"

#include <map>
#include <string>
#include <vector>

namespace testing_support {

inline codeplex::ParseOptions default_options() {
    codeplex::ParseOptions o;
    o.api_whitelist = codeplex::default_api_whitelist();
    return o;
}

inline codeplex::CanonicalAst parse(const std::string& source, const codeplex::ParseOptions& options = default_options(),
                                    const std::string& id = "q") {
    return codeplex::parse_program(id, codeplex::strip_noise(source), options);
}

inline std::vector<codeplex::CanonicalAst> fixture_corpus() {
    const auto programs = codeplex::programs_from_jsonl(oracle::read_file(oracle::fixture("fixtures/programs.jsonl")));
    auto parsed = codeplex::parse_corpus(programs, default_options());
    return parsed.asts;
}

// "key<TAB>value" lines.
inline std::vector<std::pair<std::string, std::string>> read_tsv(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(oracle::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
}

inline codeplex::MiningParams fixture_mining() {
    codeplex::MiningParams p;
    p.max_nodes = 4;
    p.min_support = 2;
    return p;
}

}  // namespace testing_support
