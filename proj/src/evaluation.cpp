#include "codeplex/evaluation.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace codeplex {

MetricRanking MetricRanking::from_scores(std::string metric, std::vector<ScoredQuestion> scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredQuestion& a, const ScoredQuestion& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.question_id < b.question_id;
    });
    MetricRanking r;
    r.metric = std::move(metric);
    for (auto& s : scored) {
        r.order.push_back(std::move(s.question_id));
        r.scores.push_back(s.score);
    }
    std::set<std::string> unique(r.order.begin(), r.order.end());
    if (unique.size() != r.order.size()) throw Error(ErrorCode::kInvalidArgument, "duplicate question id in scores");
    return r;
}

double peg(std::span<const int> outcomes, double alpha) {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 0.5]");
    // the epsilon keeps e.g. 0.3 * 10 from flooring to 2
    const auto n_alpha = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(outcomes.size()) + 1e-9));
    if (n_alpha == 0) {
        throw Error(ErrorCode::kTooFewQuestions,
                    "alpha " + std::to_string(alpha) + " selects no question out of " + std::to_string(outcomes.size()));
    }
    double hardest = 0.0;
    double easiest = 0.0;
    for (std::size_t i = 0; i < n_alpha; ++i) {
        hardest += outcomes[i];
        easiest += outcomes[outcomes.size() - 1 - i];
    }
    return 100.0 * (easiest - hardest) / static_cast<double>(n_alpha);
}

namespace {

std::vector<int> model_outcomes(const MetricRanking& ranking, const OutcomeMatrix& outcomes, const std::string& model_id,
                                const std::set<std::string>* subset) {
    const auto m = outcomes.model_index(model_id);
    if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + model_id + "'");
    std::vector<int> ys;
    for (const auto& q : ranking.order) {
        if (subset != nullptr && subset->count(q) == 0) continue;
        const auto qi = outcomes.question_index(q);
        if (!qi) continue;
        const int y = outcomes.at(*qi, *m);
        if (y >= 0) ys.push_back(y);
    }
    return ys;
}

}  // namespace

double peg(const MetricRanking& ranking, const OutcomeMatrix& outcomes, const std::string& model_id, double alpha) {
    const auto ys = model_outcomes(ranking, outcomes, model_id, nullptr);
    return peg(ys, alpha);
}

std::vector<double> default_alpha_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(0.05 * i);
    return grid;
}

double mpeg(const MetricRanking& ranking, const OutcomeMatrix& outcomes, const std::string& model_id,
            const std::vector<double>& grid) {
    if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "alpha grid is empty");
    const auto ys = model_outcomes(ranking, outcomes, model_id, nullptr);
    double sum = 0.0;
    for (double a : grid) sum += peg(ys, a);
    return sum / static_cast<double>(grid.size());
}

QuestionSplit split_questions(std::vector<std::string> ids, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::mt19937_64 rng(seed);
    // Fisher-Yates with rejection sampling; std::shuffle's draws are
    // implementation-defined and would make splits differ across toolchains.
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw = rng();
        while (draw >= limit) draw = rng();
        std::swap(ids[i - 1], ids[static_cast<std::size_t>(draw % bound)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
    QuestionSplit split;
    split.seed = seed;
    split.train_fraction = train_fraction;
    split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

PegReport evaluate_metric(const MetricRanking& ranking, const OutcomeMatrix& outcomes,
                          const std::vector<std::string>& models, const std::vector<double>& grid,
                          const std::vector<std::string>* questions) {
    if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "alpha grid is empty");
    if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "model list is empty");
    std::set<std::string> subset;
    if (questions != nullptr) subset.insert(questions->begin(), questions->end());
    PegReport report;
    report.metric = ranking.metric;
    report.grid = grid;
    for (const auto& model : models) {
        const auto ys = model_outcomes(ranking, outcomes, model, questions != nullptr ? &subset : nullptr);
        ModelPeg mp;
        mp.model_id = model;
        mp.questions = ys.size();
        double sum = 0.0;
        for (double a : grid) {
            mp.peg.push_back(peg(ys, a));
            sum += mp.peg.back();
        }
        mp.mpeg = sum / static_cast<double>(grid.size());
        report.models.push_back(std::move(mp));
    }
    return report;
}

double elo_expectation(double a, double b, double beta) noexcept {
    return normal_cdf((a - b) / (std::sqrt(2.0) * beta));
}

std::vector<std::string> EloState::ordering() const {
    std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    out.reserve(items.size());
    for (auto& [id, s] : items) out.push_back(id);
    return out;
}

EloState elo_order(const std::vector<std::string>& items, const std::vector<Comparison>& comparisons,
                   const EloParams& params) {
    if (!(params.beta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "beta must be positive");
    if (!(params.k > 0.0)) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
    EloState state;
    state.params = params;
    for (const auto& id : items) state.scores.emplace(id, params.base);
    for (const auto& c : comparisons) {
        auto w = state.scores.find(c.winner);
        auto l = state.scores.find(c.loser);
        if (w == state.scores.end()) throw Error(ErrorCode::kUnknownItem, "unknown item '" + c.winner + "'");
        if (l == state.scores.end()) throw Error(ErrorCode::kUnknownItem, "unknown item '" + c.loser + "'");
        if (w == l) throw Error(ErrorCode::kInvalidArgument, "item '" + c.winner + "' compared with itself");
        const double expected = elo_expectation(w->second, l->second, params.beta);
        const double delta = params.k * (1.0 - expected);
        w->second += delta;
        l->second -= delta;
    }
    return state;
}

}  // namespace codeplex
