#pragma once

#include "codeplex/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace codeplex {

struct ScoredQuestion {
    std::string question_id;
    double score = 0.0;  // higher = harder
};

/// Questions ordered hardest first. Equal scores keep ascending question_id order.
struct MetricRanking {
    std::string metric;
    std::vector<std::string> order;
    std::vector<double> scores;  // parallel to `order`

    static MetricRanking from_scores(std::string metric, std::vector<ScoredQuestion> scored);
};

/// Mean success over the easiest N_a minus the hardest N_a questions, in
/// percentage points, N_a = floor(alpha * N). `outcomes` is ordered hardest first.
/// Throws TooFewQuestions when N_a is 0.
double peg(std::span<const int> outcomes_hardest_first, double alpha);

/// PEG for one model. Questions without an outcome for the model are dropped.
double peg(const MetricRanking& ranking, const OutcomeMatrix& outcomes, const std::string& model_id, double alpha);

std::vector<double> default_alpha_grid();

double mpeg(const MetricRanking& ranking, const OutcomeMatrix& outcomes, const std::string& model_id,
            const std::vector<double>& grid);

struct QuestionSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    // models whose outcomes may train a metric vs. models it is evaluated on
    std::vector<std::string> train_models;
    std::vector<std::string> eval_models;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
};

/// Deterministic shuffle (mt19937_64 + Fisher-Yates) of the sorted ids;
/// the first round(train_fraction * N) go to `train`. Both halves are returned sorted.
QuestionSplit split_questions(std::vector<std::string> ids, double train_fraction, std::uint64_t seed);

struct ModelPeg {
    std::string model_id;
    std::vector<double> peg;  // parallel to the grid
    double mpeg = 0.0;
    std::size_t questions = 0;
};

struct PegReport {
    std::string metric;
    std::vector<double> grid;
    std::vector<ModelPeg> models;
};

/// PEG over the grid for each model, restricted to `questions` when non-null.
PegReport evaluate_metric(const MetricRanking& ranking, const OutcomeMatrix& outcomes,
                          const std::vector<std::string>& models, const std::vector<double>& grid,
                          const std::vector<std::string>* questions = nullptr);

struct EloParams {
    double base = 1000.0;
    double beta = 200.0;
    double k = 32.0;
};

struct Comparison {
    std::string winner;
    std::string loser;
};

struct EloState {
    EloParams params;
    std::map<std::string, double> scores;
    /// Highest score first; ties by ascending id.
    std::vector<std::string> ordering() const;
};

/// Expected score of a player rated `a` against one rated `b`.
double elo_expectation(double a, double b, double beta) noexcept;

/// Sequential rating updates; every id must appear in `items` (UnknownItem otherwise).
EloState elo_order(const std::vector<std::string>& items, const std::vector<Comparison>& comparisons,
                   const EloParams& params);

}  // namespace codeplex
