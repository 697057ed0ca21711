#pragma once

#include "codeplex/ast.hpp"
#include "codeplex/subtree.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace codeplex {

struct OutcomeRecord {
    std::string question_id;
    std::string model_id;
    int correct = 0;  // 0 or 1
};

/// Binary success of each (question, model) pair; absent entries allowed.
class OutcomeMatrix {
public:
    OutcomeMatrix() = default;
    /// Question and model orders are sorted ids. Duplicate pairs or values
    /// outside {0,1} throw Error(InvalidArgument).
    static OutcomeMatrix from_records(const std::vector<OutcomeRecord>& records);

    const std::vector<std::string>& question_ids() const noexcept { return questions_; }
    const std::vector<std::string>& model_ids() const noexcept { return models_; }

    std::optional<int> get(std::string_view question_id, std::string_view model_id) const;
    std::optional<std::size_t> model_index(std::string_view model_id) const;
    std::optional<std::size_t> question_index(std::string_view question_id) const;
    /// -1 when absent.
    int at(std::size_t q, std::size_t m) const { return entries_[q * models_.size() + m]; }

private:
    std::vector<std::string> questions_;
    std::vector<std::string> models_;
    std::vector<std::int8_t> entries_;
    std::map<std::string, std::size_t, std::less<>> q_index_;
    std::map<std::string, std::size_t, std::less<>> m_index_;
};

struct FeatureMatrix {
    std::vector<std::string> question_ids;
    std::string catalog_fingerprint;
    std::string canonicalization;
    std::size_t width = 0;
    std::vector<std::vector<std::uint8_t>> rows;  // rows[i][k] = 1 iff pattern k occurs in program i

    std::optional<std::size_t> row_of(std::string_view question_id) const;
};

/// One-hot subtree presence per program. Throws CatalogMismatch when the
/// corpus was parsed under different canonicalization settings.
FeatureMatrix encode(const std::vector<CanonicalAst>& asts, const SubtreeCatalog& catalog,
                     std::string_view canonicalization = {});

struct SoftLabel {
    std::string question_id;
    double label = 0.0;   // mean success over present entries
    double weight = 0.0;  // number of present entries
};

struct SoftLabelSet {
    std::vector<SoftLabel> labels;
    std::vector<std::string> excluded;  // questions with no present entry (NoLabels)
};

/// Averages train-model outcomes into one soft label per question. When
/// `questions` is given only those ids are considered.
SoftLabelSet soft_labels(const OutcomeMatrix& outcomes, const std::vector<std::string>& train_models,
                         const std::vector<std::string>* questions = nullptr);

struct FitOptions {
    double reg_C = 1.0;
    double tolerance = 1e-8;
    int max_iterations = 2000;
};

struct FitReport {
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string solver;
    std::size_t questions = 0;
};

struct ComplexityModel {
    std::vector<double> weights;
    double bias = 0.0;
    double reg_C = 1.0;
    std::string catalog_fingerprint;
    FitReport fit_report;
};

/// Weighted L2-regularized logistic objective over soft labels:
///   sum_i v_i CE(sigmoid(w.x_i + b), y_i) / V + |w|^2 / (2 C V),  V = sum_i v_i.
/// Exposed so tests can check gradients and optima independently.
class LogisticObjective {
public:
    LogisticObjective(const std::vector<std::span<const std::uint8_t>>& rows, std::vector<double> labels,
                      std::vector<double> weights, double reg_C);

    std::size_t dimension() const noexcept { return width_ + 1; }  // weights then bias
    /// Objective value; fills `grad` (size dimension()) when non-null.
    double evaluate(std::span<const double> params, std::span<double> grad) const;
    double evaluate(std::span<const double> params) const { return evaluate(params, {}); }

    // internal to the solver
    const std::vector<std::vector<std::uint32_t>>& active() const noexcept { return active_; }
    const std::vector<double>& labels() const noexcept { return labels_; }
    const std::vector<double>& sample_weights() const noexcept { return weights_; }
    double total_weight() const noexcept { return total_weight_; }
    double reg_C() const noexcept { return reg_C_; }

private:
    std::size_t width_ = 0;
    std::vector<std::vector<std::uint32_t>> active_;  // nonzero feature indices per row
    std::vector<double> labels_;
    std::vector<double> weights_;
    double total_weight_ = 0.0;
    double reg_C_ = 1.0;
};

/// Fits the scorer. Questions in `features` without a label are ignored.
/// Throws NonConvergence when the gradient tolerance is not met.
ComplexityModel fit(const FeatureMatrix& features, const std::vector<SoftLabel>& labels, const FitOptions& options);

/// -sigmoid(w.x + b), in (-1, 0); closer to 0 means harder.
double score(const ComplexityModel& model, std::span<const std::uint8_t> row);

double sigmoid(double z) noexcept;

}  // namespace codeplex
