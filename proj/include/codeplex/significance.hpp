#pragma once

#include "codeplex/model.hpp"
#include "codeplex/subtree.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace codeplex {

struct SubtreeContingency {
    std::size_t pattern = 0;
    std::string model_id;
    long n_with = 0;
    long succ_with = 0;
    long n_without = 0;
    long succ_without = 0;
};

enum class TestBranch { ZTest, Exact };

struct ProportionTest {
    double p_value = 0.0;
    TestBranch branch = TestBranch::ZTest;
    double z = 0.0;  // only meaningful for the z branch
};

/// P(X <= succ_with) for X hypergeometric: population n_with + n_without,
/// succ_with + succ_without successes, n_with draws.
double hypergeometric_lower_tail(long succ_with, long n_with, long succ_without, long n_without);

/// One-sided test of "success rate with the subtree is lower than without".
/// Pooled two-proportion z-test; the exact hypergeometric tail is used when
/// any expected cell count under the without-group success rate is below 5.
/// Throws Error(DegenerateTable) when either group is empty.
ProportionTest proportion_test(const SubtreeContingency& table);

struct AnalysisOptions {
    double alpha = 0.01;
    bool bonferroni = false;
};

struct PatternResult {
    SubtreeContingency table;
    ProportionTest test;
    bool significant = false;
};

struct SignificanceReport {
    std::vector<std::string> models;
    double alpha = 0.01;
    double effective_alpha = 0.01;  // alpha / tests when bonferroni is on
    bool bonferroni = false;
    std::map<std::string, std::vector<PatternResult>> results;       // per model
    std::map<std::string, std::set<std::size_t>> significant;        // per model
    std::map<std::string, std::vector<std::size_t>> degenerate;      // skipped patterns
    std::set<std::size_t> intersection;
};

SubtreeContingency build_contingency(const FeatureMatrix& features, const OutcomeMatrix& outcomes, std::size_t pattern,
                                     const std::string& model_id);

/// Per-model significant sets at `alpha` and their intersection.
SignificanceReport significant_sets(const SubtreeCatalog& catalog, const FeatureMatrix& features,
                                    const OutcomeMatrix& outcomes, const std::vector<std::string>& models,
                                    const AnalysisOptions& options = {});

}  // namespace codeplex
