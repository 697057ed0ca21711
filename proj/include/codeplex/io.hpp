#pragma once

// JSON / JSONL forms of every artifact. Floating-point values are written
// with 12 significant digits; object keys are sorted, so equal inputs give
// byte-identical files.

#include "codeplex/ast.hpp"
#include "codeplex/evaluation.hpp"
#include "codeplex/funnel.hpp"
#include "codeplex/metrics.hpp"
#include "codeplex/model.hpp"
#include "codeplex/significance.hpp"
#include "codeplex/subtree.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace codeplex {

using Json = nlohmann::json;

/// Parses JSON Lines, skipping blank lines. Errors name the 1-based line.
std::vector<Json> parse_jsonl(const std::string& text, const std::string& what);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Real numbers rounded to 12 significant digits, recursively.
Json rounded(Json value);
/// dump() with 2-space indent and a trailing newline.
std::string dump_pretty(const Json& value);

std::vector<ProgramSource> programs_from_jsonl(const std::string& text);
/// Newline-separated names, or a JSON list of strings.
std::set<std::string, std::less<>> whitelist_from_text(const std::string& text);

Json node_to_json(const AstNode& node);
AstNode node_from_json(const Json& j);

struct AstCorpus {
    std::string canonicalization;
    std::vector<CanonicalAst> asts;
};

Json asts_to_json(const AstCorpus& corpus);
AstCorpus asts_from_json(const Json& j);

Json catalog_to_json(const SubtreeCatalog& catalog);
/// Throws Error(SchemaError) when the stored fingerprint does not match the content.
SubtreeCatalog catalog_from_json(const Json& j);

Json features_to_json(const FeatureMatrix& fm);
FeatureMatrix features_from_json(const Json& j);

std::vector<OutcomeRecord> outcomes_from_jsonl(const std::string& text);

Json model_to_json(const ComplexityModel& model);
ComplexityModel model_from_json(const Json& j);

std::vector<ScoredQuestion> scores_from_jsonl(const std::string& text);
std::string scores_to_jsonl(const std::vector<ScoredQuestion>& scores);

std::vector<Comparison> comparisons_from_jsonl(const std::string& text);

Json structural_to_json(const StructuralScore& s);
Json significance_to_json(const SignificanceReport& report, const SubtreeCatalog& catalog);
Json peg_report_to_json(const PegReport& report);
Json elo_to_json(const EloState& state);
Json split_to_json(const QuestionSplit& split);
QuestionSplit split_from_json(const Json& j);
Json funnel_report_to_json(const FunnelReport& report);

}  // namespace codeplex
