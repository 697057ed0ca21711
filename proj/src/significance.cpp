#include "codeplex/significance.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace codeplex {

double hypergeometric_lower_tail(long succ_with, long n_with, long succ_without, long n_without) {
    const long total = n_with + n_without;
    const long successes = succ_with + succ_without;
    const long failures = total - successes;
    const long lo = std::max(0L, n_with - failures);
    const long hi = std::min(n_with, successes);
    if (succ_with >= hi) return 1.0;
    if (succ_with < lo) return 0.0;

    // Terms relative to the pmf at the mode; walking outwards only shrinks
    // them, so nothing overflows and the normalization is exact up to rounding.
    long mode = static_cast<long>(std::floor(static_cast<double>(n_with + 1) * static_cast<double>(successes + 1) /
                                             static_cast<double>(total + 2)));
    mode = std::clamp(mode, lo, hi);
    auto ratio_up = [&](long x) {  // pmf(x) / pmf(x - 1)
        return static_cast<double>(successes - x + 1) * static_cast<double>(n_with - x + 1) /
               (static_cast<double>(x) * static_cast<double>(failures - n_with + x));
    };
    double tail = 0.0;
    double all = 1.0;
    if (mode <= succ_with) tail += 1.0;
    double term = 1.0;
    for (long x = mode + 1; x <= hi; ++x) {
        term *= ratio_up(x);
        all += term;
        if (x <= succ_with) tail += term;
    }
    term = 1.0;
    for (long x = mode - 1; x >= lo; --x) {
        term /= ratio_up(x + 1);
        all += term;
        if (x <= succ_with) tail += term;
    }
    return std::min(1.0, tail / all);
}

ProportionTest proportion_test(const SubtreeContingency& t) {
    if (t.n_with <= 0 || t.n_without <= 0) {
        throw Error(ErrorCode::kDegenerateTable, "pattern " + std::to_string(t.pattern) + " for model '" + t.model_id +
                                                     "' has an empty group (with=" + std::to_string(t.n_with) +
                                                     ", without=" + std::to_string(t.n_without) + ")");
    }
    if (t.succ_with < 0 || t.succ_with > t.n_with || t.succ_without < 0 || t.succ_without > t.n_without) {
        throw Error(ErrorCode::kInvalidArgument, "success counts exceed group sizes");
    }
    const double n1 = static_cast<double>(t.n_with);
    const double n2 = static_cast<double>(t.n_without);
    const double reference_rate = static_cast<double>(t.succ_without) / n2;
    const double min_expected =
        std::min({n1 * reference_rate, n1 * (1.0 - reference_rate), n2 * reference_rate, n2 * (1.0 - reference_rate)});

    ProportionTest out;
    if (min_expected < 5.0) {
        out.branch = TestBranch::Exact;
        out.p_value = hypergeometric_lower_tail(t.succ_with, t.n_with, t.succ_without, t.n_without);
        return out;
    }
    const double p1 = static_cast<double>(t.succ_with) / n1;
    const double p2 = reference_rate;
    const double pooled = static_cast<double>(t.succ_with + t.succ_without) / (n1 + n2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    out.branch = TestBranch::ZTest;
    out.z = (p1 - p2) / se;
    out.p_value = normal_cdf(out.z);
    return out;
}

SubtreeContingency build_contingency(const FeatureMatrix& features, const OutcomeMatrix& outcomes, std::size_t pattern,
                                     const std::string& model_id) {
    const auto m = outcomes.model_index(model_id);
    if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + model_id + "'");
    SubtreeContingency t;
    t.pattern = pattern;
    t.model_id = model_id;
    for (std::size_t i = 0; i < features.question_ids.size(); ++i) {
        const auto q = outcomes.question_index(features.question_ids[i]);
        if (!q) continue;
        const int y = outcomes.at(*q, *m);
        if (y < 0) continue;
        if (features.rows[i][pattern] != 0) {
            ++t.n_with;
            t.succ_with += y;
        } else {
            ++t.n_without;
            t.succ_without += y;
        }
    }
    return t;
}

SignificanceReport significant_sets(const SubtreeCatalog& catalog, const FeatureMatrix& features,
                                    const OutcomeMatrix& outcomes, const std::vector<std::string>& models,
                                    const AnalysisOptions& options) {
    if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "model list is empty");
    if (features.catalog_fingerprint != catalog.fingerprint() || features.width != catalog.size()) {
        throw Error(ErrorCode::kCatalogMismatch, "feature matrix is not bound to this catalog");
    }
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be in (0, 1)");

    SignificanceReport report;
    report.models = models;
    report.alpha = options.alpha;
    report.bonferroni = options.bonferroni;
    report.effective_alpha = options.bonferroni ? options.alpha / static_cast<double>(std::max<std::size_t>(1, catalog.size()))
                                                : options.alpha;

    for (const auto& model : models) {
        auto& results = report.results[model];
        auto& sig = report.significant[model];
        auto& skipped = report.degenerate[model];
        for (std::size_t k = 0; k < catalog.size(); ++k) {
            SubtreeContingency table = build_contingency(features, outcomes, k, model);
            if (table.n_with == 0 || table.n_without == 0) {
                skipped.push_back(k);
                continue;
            }
            PatternResult r{table, proportion_test(table), false};
            r.significant = r.test.p_value < report.effective_alpha;
            if (r.significant) sig.insert(k);
            results.push_back(std::move(r));
        }
    }
    report.intersection = report.significant.at(models.front());
    for (std::size_t j = 1; j < models.size(); ++j) {
        std::set<std::size_t> next;
        const auto& other = report.significant.at(models[j]);
        std::set_intersection(report.intersection.begin(), report.intersection.end(), other.begin(), other.end(),
                              std::inserter(next, next.begin()));
        report.intersection = std::move(next);
    }
    return report;
}

}  // namespace codeplex
